#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "emfe/label.hpp"
#include "emfe/matrix.hpp"

namespace emfe {

enum class Criterion : std::uint8_t { Gini = 0, Entropy = 1 };
enum class MaxFeatures : std::uint8_t { Sqrt = 0, Log2 = 1, All = 2 };

std::string_view to_string(Criterion criterion);
std::string_view to_string(MaxFeatures max_features);
Criterion parse_criterion(std::string_view text);
MaxFeatures parse_max_features(std::string_view text);

/// Number of candidate features per split: max(1, floor(f(n_features))).
std::size_t candidate_feature_count(MaxFeatures max_features, std::size_t n_features);

struct ForestParams {
  std::uint32_t n_estimators = 100;
  std::optional<std::uint32_t> max_depth;  // nullopt = grow until pure
  std::uint32_t min_samples_split = 2;
  std::uint32_t min_samples_leaf = 1;
  MaxFeatures max_features = MaxFeatures::Sqrt;
  Criterion criterion = Criterion::Gini;
  bool bootstrap = true;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

/// Nodes are stored in preorder: a split node's left child is the next node.
struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;  // x[feature] <= threshold goes left
  std::uint32_t right = 0;
  std::array<std::uint32_t, 2> counts{};  // per Label value, leaves only

  bool is_leaf() const { return feature == kLeaf; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const double> x) const;
  std::size_t depth() const;
  /// Majority class of the reached leaf; ties go to Uninfected.
  Label vote(std::span<const double> x) const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct RandomForestModel {
  ForestParams params;
  std::uint64_t seed = 42;
  std::size_t n_features = 0;
  std::vector<DecisionTree> trees;

  friend bool operator==(const RandomForestModel&, const RandomForestModel&) = default;
};

/// Grows one CART tree on the given row multiset (duplicates allowed).
/// Split search is exhaustive over midpoints of sorted distinct values;
/// ties prefer the lower feature index, then the lower threshold.
DecisionTree fit_tree(const Matrix& X, std::span<const Label> y, std::vector<std::size_t> rows, const ForestParams& params,
                      std::uint64_t seed);

/// Tree i is grown from seed + i, so parallel and sequential builds agree.
RandomForestModel train_random_forest(const Matrix& X, std::span<const Label> y, const ForestParams& params,
                                      std::uint64_t seed = 42, std::size_t threads = 1);

/// Fraction of trees voting Parasitized.
double predict_proba(const RandomForestModel& model, std::span<const double> x);
/// Majority vote over trees; an exact split vote goes to Uninfected.
Label predict(const RandomForestModel& model, std::span<const double> x);

}  // namespace emfe
