#include "emfe/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "emfe/parallel.hpp"
#include "emfe/rng.hpp"

namespace emfe {

std::string_view to_string(Criterion criterion) { return criterion == Criterion::Gini ? "gini" : "entropy"; }

std::string_view to_string(MaxFeatures max_features) {
  switch (max_features) {
    case MaxFeatures::Sqrt: return "sqrt";
    case MaxFeatures::Log2: return "log2";
    case MaxFeatures::All: return "all";
  }
  return "sqrt";
}

Criterion parse_criterion(std::string_view text) {
  if (text == "gini") return Criterion::Gini;
  if (text == "entropy") return Criterion::Entropy;
  throw Error(ErrorCode::InvalidArgument, "unknown criterion '" + std::string(text) + "'");
}

MaxFeatures parse_max_features(std::string_view text) {
  if (text == "sqrt") return MaxFeatures::Sqrt;
  if (text == "log2") return MaxFeatures::Log2;
  if (text == "all") return MaxFeatures::All;
  throw Error(ErrorCode::InvalidArgument, "unknown max_features '" + std::string(text) + "'");
}

std::size_t candidate_feature_count(MaxFeatures max_features, std::size_t n_features) {
  const auto n = static_cast<double>(n_features);
  switch (max_features) {
    case MaxFeatures::Sqrt: return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(n))));
    case MaxFeatures::Log2: return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::log2(n))));
    case MaxFeatures::All: return n_features;
  }
  return n_features;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& node = nodes[i];
    i = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? i + 1 : node.right;
  }
  return nodes[i];
}

std::size_t DecisionTree::depth() const {
  // Preorder walk with an explicit stack of (index, depth).
  std::size_t deepest = 0;
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(i + 1, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return deepest;
}

Label DecisionTree::vote(std::span<const double> x) const {
  const TreeNode& leaf = leaf_for(x);
  return leaf.counts[1] > leaf.counts[0] ? Label::Parasitized : Label::Uninfected;
}

namespace {

double impurity(Criterion criterion, double c0, double c1) {
  const double n = c0 + c1;
  if (n <= 0.0) return 0.0;
  const double p0 = c0 / n, p1 = c1 / n;
  if (criterion == Criterion::Gini) return 1.0 - p0 * p0 - p1 * p1;
  double h = 0.0;
  if (p0 > 0.0) h -= p0 * std::log2(p0);
  if (p1 > 0.0) h -= p1 * std::log2(p1);
  return h;
}

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double decrease = 0.0;
};

class TreeBuilder {
public:
  TreeBuilder(const Matrix& X, std::span<const Label> y, const ForestParams& params, std::uint64_t seed)
      : X_(X), y_(y), params_(params), rng_(seed), features_(X.cols()) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    mtry_ = candidate_feature_count(params.max_features, X.cols());
  }

  Rng& rng() { return rng_; }

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

private:
  void grow(std::vector<std::size_t>& rows, std::uint32_t depth) {
    const std::size_t index = tree_.nodes.size();
    tree_.nodes.emplace_back();

    std::array<std::uint32_t, 2> counts{};
    for (const std::size_t r : rows) ++counts[static_cast<std::size_t>(y_[r])];

    const bool pure = counts[0] == 0 || counts[1] == 0;
    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    if (pure || depth_reached || rows.size() < params_.min_samples_split ||
        rows.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf)) {
      tree_.nodes[index].counts = counts;
      return;
    }

    const SplitChoice split = best_split(rows, counts);
    if (!split.found) {
      tree_.nodes[index].counts = counts;
      return;
    }

    std::vector<std::size_t> left, right;
    left.reserve(rows.size());
    right.reserve(rows.size());
    for (const std::size_t r : rows) (X_(r, split.feature) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree_.nodes[index].feature = static_cast<std::int32_t>(split.feature);
    tree_.nodes[index].threshold = split.threshold;
    grow(left, depth + 1);
    tree_.nodes[index].right = static_cast<std::uint32_t>(tree_.nodes.size());
    grow(right, depth + 1);
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, const std::array<std::uint32_t, 2>& counts) {
    rng_.shuffle(std::span<std::size_t>(features_));
    const double n = static_cast<double>(rows.size());
    const double parent = impurity(params_.criterion, counts[0], counts[1]);

    SplitChoice best;
    std::size_t visited = 0;
    pairs_.resize(rows.size());
    for (const std::size_t feature : features_) {
      if (visited >= mtry_) break;
      for (std::size_t i = 0; i < rows.size(); ++i) pairs_[i] = {X_(rows[i], feature), y_[rows[i]]};
      std::sort(pairs_.begin(), pairs_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (pairs_.front().first == pairs_.back().first) continue;  // constant here; does not count towards mtry
      ++visited;

      std::array<double, 2> left{0.0, 0.0};
      for (std::size_t i = 0; i + 1 < pairs_.size(); ++i) {
        left[static_cast<std::size_t>(pairs_[i].second)] += 1.0;
        if (pairs_[i].first == pairs_[i + 1].first) continue;
        const double n_left = static_cast<double>(i + 1);
        const double n_right = n - n_left;
        if (n_left < params_.min_samples_leaf || n_right < params_.min_samples_leaf) continue;
        const double decrease = parent - (n_left / n) * impurity(params_.criterion, left[0], left[1]) -
                                (n_right / n) * impurity(params_.criterion, counts[0] - left[0], counts[1] - left[1]);
        const bool better = !best.found || decrease > best.decrease ||
                            (decrease == best.decrease && feature < best.feature);
        if (!better) continue;
        const double lo = pairs_[i].first, hi = pairs_[i + 1].first;
        double threshold = lo + (hi - lo) / 2.0;
        if (threshold >= hi) threshold = lo;
        best = SplitChoice{true, feature, threshold, decrease};
      }
    }
    return best;
  }

  const Matrix& X_;
  std::span<const Label> y_;
  const ForestParams& params_;
  Rng rng_;
  std::vector<std::size_t> features_;
  std::size_t mtry_ = 1;
  std::vector<std::pair<double, Label>> pairs_;
  DecisionTree tree_;
};

}  // namespace

DecisionTree fit_tree(const Matrix& X, std::span<const Label> y, std::vector<std::size_t> rows, const ForestParams& params,
                      std::uint64_t seed) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "tree needs at least one row");
  TreeBuilder builder(X, y, params, seed);
  return builder.build(std::move(rows));
}

RandomForestModel train_random_forest(const Matrix& X, std::span<const Label> y, const ForestParams& params,
                                      std::uint64_t seed, std::size_t threads) {
  if (X.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X and y row counts differ");
  if (X.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training rows");
  if (params.n_estimators == 0) throw Error(ErrorCode::InvalidArgument, "n_estimators must be positive");
  if (params.min_samples_split < 2) throw Error(ErrorCode::InvalidArgument, "min_samples_split must be >= 2");
  if (params.min_samples_leaf < 1) throw Error(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
  if (X.rows() < params.min_samples_split) {
    throw Error(ErrorCode::TooFewSamples, "fewer rows than min_samples_split");
  }

  RandomForestModel model;
  model.params = params;
  model.seed = seed;
  model.n_features = X.cols();
  model.trees.resize(params.n_estimators);
  parallel_for(params.n_estimators, threads, [&](std::size_t t) {
    TreeBuilder builder(X, y, params, derive_seed(seed, t));
    std::vector<std::size_t> rows(X.rows());
    if (params.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(builder.rng().index(X.rows()));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees[t] = builder.build(std::move(rows));
  });
  return model;
}

double predict_proba(const RandomForestModel& model, std::span<const double> x) {
  std::size_t positive = 0;
  for (const auto& tree : model.trees) positive += tree.vote(x) == Label::Parasitized ? 1 : 0;
  return static_cast<double>(positive) / static_cast<double>(model.trees.size());
}

Label predict(const RandomForestModel& model, std::span<const double> x) {
  std::size_t positive = 0;
  for (const auto& tree : model.trees) positive += tree.vote(x) == Label::Parasitized ? 1 : 0;
  return 2 * positive > model.trees.size() ? Label::Parasitized : Label::Uninfected;
}

}  // namespace emfe
