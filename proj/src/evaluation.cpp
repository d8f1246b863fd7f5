#include "emfe/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "emfe/dataset.hpp"
#include "emfe/parallel.hpp"
#include "emfe/rng.hpp"

namespace emfe {

// ---------------------------------------------------------------------------
// Test-set metrics

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  tp += other.tp;
  fn += other.fn;
  fp += other.fp;
  tn += other.tn;
  return *this;
}

ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(y_true.size()) + " labels vs " +
                                               std::to_string(y_pred.size()) + " predictions");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool actual = y_true[i] == Label::Parasitized;
    const bool predicted = y_pred[i] == Label::Parasitized;
    if (actual) {
      ++(predicted ? cm.tp : cm.fn);
    } else {
      ++(predicted ? cm.fp : cm.tn);
    }
  }
  return cm;
}

double round2(double value) {
  // The epsilon keeps values like 94.925 (stored as 94.92499..) rounding up.
  return std::floor(value * 100.0 + 0.5 + 1e-9) / 100.0;
}

namespace {

struct RawMetrics {
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
};

RawMetrics class_metrics(std::uint64_t hit, std::uint64_t false_alarm, std::uint64_t miss) {
  RawMetrics m;
  if (hit + false_alarm == 0) {
    m.precision_undefined = true;
  } else {
    m.precision = static_cast<double>(hit) / static_cast<double>(hit + false_alarm);
  }
  if (hit + miss == 0) {
    m.recall_undefined = true;
  } else {
    m.recall = static_cast<double>(hit) / static_cast<double>(hit + miss);
  }
  if (m.precision + m.recall == 0.0) {
    m.f1_undefined = true;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

ClassMetrics finish(const RawMetrics& raw, std::uint64_t support) {
  ClassMetrics m;
  m.precision = round2(100.0 * raw.precision);
  m.recall = round2(100.0 * raw.recall);
  m.f1 = round2(100.0 * raw.f1);
  m.support = support;
  m.precision_undefined = raw.precision_undefined;
  m.recall_undefined = raw.recall_undefined;
  m.f1_undefined = raw.f1_undefined;
  return m;
}

RawMetrics blend(const RawMetrics& a, double wa, const RawMetrics& b, double wb) {
  RawMetrics m;
  m.precision = wa * a.precision + wb * b.precision;
  m.recall = wa * a.recall + wb * b.recall;
  m.f1 = wa * a.f1 + wb * b.f1;
  m.precision_undefined = a.precision_undefined || b.precision_undefined;
  m.recall_undefined = a.recall_undefined || b.recall_undefined;
  m.f1_undefined = a.f1_undefined || b.f1_undefined;
  return m;
}

bool undefined(const ClassMetrics& m) { return m.precision_undefined || m.recall_undefined || m.f1_undefined; }

}  // namespace

bool ClassificationReport::any_undefined() const {
  return undefined(parasitized) || undefined(uninfected) || undefined(macro) || undefined(weighted);
}

ClassificationReport report(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) throw Error(ErrorCode::EmptyInput, "confusion matrix is empty");

  const RawMetrics pos = class_metrics(cm.tp, cm.fp, cm.fn);
  const RawMetrics neg = class_metrics(cm.tn, cm.fn, cm.fp);
  const std::uint64_t pos_support = cm.tp + cm.fn;
  const std::uint64_t neg_support = cm.tn + cm.fp;
  const double n = static_cast<double>(total);

  ClassificationReport r;
  r.parasitized = finish(pos, pos_support);
  r.uninfected = finish(neg, neg_support);
  r.macro = finish(blend(pos, 0.5, neg, 0.5), total);
  r.weighted = finish(blend(pos, static_cast<double>(pos_support) / n, neg, static_cast<double>(neg_support) / n), total);
  r.accuracy = round2(100.0 * static_cast<double>(cm.tp + cm.tn) / n);
  r.total = total;
  return r;
}

// ---------------------------------------------------------------------------
// Cross-validation

CvResult summarize_folds(std::vector<double> fold_accuracies) {
  CvResult cv;
  cv.fold_accuracies = std::move(fold_accuracies);
  if (cv.fold_accuracies.empty()) return cv;
  const double n = static_cast<double>(cv.fold_accuracies.size());
  cv.mean = std::accumulate(cv.fold_accuracies.begin(), cv.fold_accuracies.end(), 0.0) / n;
  double ss = 0.0;
  for (const double a : cv.fold_accuracies) ss += (a - cv.mean) * (a - cv.mean);
  cv.std = std::sqrt(ss / n);
  return cv;
}

namespace {

using Folds = std::vector<std::vector<std::size_t>>;

Folds make_folds(std::span<const Label> y, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> all(y.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return kfold_indices(all, y, k, seed);
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& fold, std::size_t n) {
  std::vector<bool> held(n, false);
  for (const std::size_t i : fold) held[i] = true;
  std::vector<std::size_t> rest;
  rest.reserve(n - fold.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!held[i]) rest.push_back(i);
  }
  return rest;
}

double accuracy_percent(std::span<const Label> truth, std::span<const Label> predicted) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i] ? 1 : 0;
  return truth.empty() ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(truth.size());
}

[[noreturn]] void rethrow_for_fold(const Error& e, std::size_t fold) {
  throw Error(e.code(), "fold " + std::to_string(fold) + ": " + e.detail());
}

double fold_accuracy(const ModelSpec& spec, const Matrix& X, std::span<const Label> y, const Folds& folds,
                     std::size_t f, std::uint64_t seed, std::size_t threads) {
  try {
    const auto train_rows = complement(folds[f], y.size());
    const Matrix X_train = X.take_rows(train_rows);
    const auto y_train = take(y, std::span<const std::size_t>(train_rows));
    const Model model = train(spec, X_train, y_train, derive_seed(seed, f), threads);
    const Matrix X_test = X.take_rows(folds[f]);
    const auto y_test = take(y, std::span<const std::size_t>(folds[f]));
    return accuracy_percent(y_test, predict_all(model, X_test));
  } catch (const Error& e) {
    rethrow_for_fold(e, f);
  }
}

void check_rows(const Matrix& X, std::span<const Label> y) {
  if (X.rows() != y.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(X.rows()) + " rows vs " + std::to_string(y.size()) + " labels");
  }
}

}  // namespace

CvResult cross_validate(const ModelSpec& spec, const Matrix& X, std::span<const Label> y, std::size_t k,
                        std::uint64_t seed, std::size_t threads) {
  check_rows(X, y);
  const Folds folds = make_folds(y, k, seed);
  std::vector<double> accuracies(k);
  parallel_for(k, threads, [&](std::size_t f) { accuracies[f] = fold_accuracy(spec, X, y, folds, f, seed, 1); });
  return summarize_folds(std::move(accuracies));
}

// ---------------------------------------------------------------------------
// Search

SearchSpace default_search_space(ModelKind kind) {
  SearchSpace space;
  switch (kind) {
    case ModelKind::LogisticRegression:
      for (const Penalty penalty : {Penalty::L1, Penalty::L2, Penalty::ElasticNet, Penalty::None}) {
        for (const double C : {0.01, 0.1, 1.0, 10.0, 100.0}) {
          LogRegParams p;
          p.penalty = penalty;
          p.C = C;
          space.emplace_back(p);
        }
      }
      break;
    case ModelKind::RandomForest:
      for (const std::uint32_t trees : {100u, 200u, 500u}) {
        for (const std::optional<std::uint32_t> depth :
             {std::optional<std::uint32_t>{}, std::optional<std::uint32_t>{10}, std::optional<std::uint32_t>{20},
              std::optional<std::uint32_t>{30}}) {
          for (const std::uint32_t split : {2u, 5u, 10u}) {
            for (const std::uint32_t leaf : {1u, 2u, 4u}) {
              for (const MaxFeatures mf : {MaxFeatures::Sqrt, MaxFeatures::Log2}) {
                for (const Criterion criterion : {Criterion::Gini, Criterion::Entropy}) {
                  ForestParams p;
                  p.n_estimators = trees;
                  p.max_depth = depth;
                  p.min_samples_split = split;
                  p.min_samples_leaf = leaf;
                  p.max_features = mf;
                  p.criterion = criterion;
                  space.emplace_back(p);
                }
              }
            }
          }
        }
      }
      break;
    case ModelKind::Knn:
      for (std::uint32_t k = 1; k <= 20; ++k) {
        for (const Metric metric : {Metric{MetricKind::Euclidean, 2.0}, Metric{MetricKind::Manhattan, 1.0},
                                    Metric{MetricKind::Chebyshev, 0.0}, Metric{MetricKind::Minkowski, 1.0},
                                    Metric{MetricKind::Minkowski, 2.0}, Metric{MetricKind::Minkowski, 3.0}}) {
          KnnParams p;
          p.n_neighbors = k;
          p.metric = metric;
          space.emplace_back(p);
        }
      }
      break;
    case ModelKind::SvmRbf:
    case ModelKind::TwoStageEnsemble:
      break;
  }
  return space;
}

SearchResult random_search(const SearchSpace& space, const Matrix& X, std::span<const Label> y, std::size_t n_samples,
                           std::size_t k, std::uint64_t seed, std::size_t threads) {
  if (space.empty()) throw Error(ErrorCode::EmptySpace, "search space is empty");
  if (n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be positive");
  check_rows(X, y);

  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(std::min(n_samples, order.size()));

  const Folds folds = make_folds(y, k, seed);
  SearchResult result;
  result.samples.resize(order.size());
  for (std::size_t s = 0; s < order.size(); ++s) result.samples[s].spec = space[order[s]];

  // one job per (sample, fold) keeps all workers busy even for small draws
  std::vector<double> accuracies(order.size() * k);
  parallel_for(accuracies.size(), threads, [&](std::size_t job) {
    const std::size_t s = job / k;
    accuracies[job] = fold_accuracy(result.samples[s].spec, X, y, folds, job % k, seed, 1);
  });

  for (std::size_t s = 0; s < order.size(); ++s) {
    result.samples[s].cv = summarize_folds({accuracies.begin() + static_cast<std::ptrdiff_t>(s * k),
                                            accuracies.begin() + static_cast<std::ptrdiff_t>((s + 1) * k)});
    const CvResult& cv = result.samples[s].cv;
    const CvResult& best = result.samples[result.best].cv;
    if (cv.mean > best.mean || (cv.mean == best.mean && cv.std < best.std)) result.best = s;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Threshold analysis

ThresholdSweep threshold_sweep(const LogisticRegressionModel& model, const Matrix& X, std::span<const Label> y,
                               double target_recall) {
  check_rows(X, y);
  std::vector<std::pair<double, Label>> scored(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) scored[i] = {predict_proba(model, X.row(i)), y[i]};
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<double> thresholds{0.0};
  for (const auto& [p, label] : scored) {
    if (p > thresholds.back()) thresholds.push_back(p);
  }
  if (thresholds.back() < 1.0) thresholds.push_back(1.0);

  std::uint64_t positives = 0;
  for (const Label l : y) positives += l == Label::Parasitized ? 1 : 0;
  const std::uint64_t negatives = y.size() - positives;

  ThresholdSweep sweep;
  sweep.target_recall = target_recall;
  // walk thresholds upward; samples at or below the threshold turn negative
  std::size_t cursor = 0;
  std::uint64_t demoted_pos = 0, demoted_neg = 0;
  for (const double t : thresholds) {
    while (cursor < scored.size() && scored[cursor].first <= t) {
      ++(scored[cursor].second == Label::Parasitized ? demoted_pos : demoted_neg);
      ++cursor;
    }
    ThresholdPoint point;
    point.threshold = t;
    point.cm = {positives - demoted_pos, demoted_pos, negatives - demoted_neg, demoted_neg};
    const ClassificationReport r = y.empty() ? ClassificationReport{} : report(point.cm);
    point.precision = r.parasitized.precision;
    point.recall = r.parasitized.recall;
    const double exact_recall =
        positives == 0 ? 0.0 : static_cast<double>(point.cm.tp) / static_cast<double>(positives);
    if (positives > 0 && exact_recall >= target_recall) sweep.selected = t;
    sweep.points.push_back(point);
  }
  return sweep;
}

// ---------------------------------------------------------------------------
// Significance

PairedTTest paired_t_test(std::span<const double> treatment, std::span<const double> baseline) {
  if (treatment.size() != baseline.size()) throw Error(ErrorCode::LengthMismatch, "paired samples differ in length");
  if (treatment.size() < 2) throw Error(ErrorCode::TooFewSamples, "paired t-test needs at least two pairs");
  const std::size_t n = treatment.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = treatment[i] - baseline[i];
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  PairedTTest test;
  test.mean_difference = mean;
  test.df = n - 1;
  if (sd == 0.0) {
    // identical differences: no variance, so either no effect or a certain one
    test.t_statistic = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
    test.p_value = mean == 0.0 ? 1.0 : 0.0;
    return test;
  }
  test.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(test.df));
  test.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(test.t_statistic)));
  return test;
}

McNemarTest mcnemar_test(std::span<const Label> y, std::span<const Label> treatment, std::span<const Label> baseline) {
  if (y.size() != treatment.size() || y.size() != baseline.size()) {
    throw Error(ErrorCode::LengthMismatch, "McNemar inputs differ in length");
  }
  McNemarTest test;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool t_ok = treatment[i] == y[i];
    const bool b_ok = baseline[i] == y[i];
    if (t_ok && !b_ok) ++test.ensemble_only_correct;
    if (!t_ok && b_ok) ++test.baseline_only_correct;
  }
  const double b = static_cast<double>(test.ensemble_only_correct);
  const double c = static_cast<double>(test.baseline_only_correct);
  if (b + c == 0.0) return test;
  const double corrected = std::max(0.0, std::fabs(b - c) - 1.0);
  test.statistic = corrected * corrected / (b + c);
  const boost::math::chi_squared dist(1.0);
  test.p_value = boost::math::cdf(boost::math::complement(dist, test.statistic));
  return test;
}

// ---------------------------------------------------------------------------
// Ensemble validation

EnsembleCvResult evaluate_ensemble_cv(const Matrix& X, std::span<const Label> y, const EnsembleParams& params,
                                      std::size_t k, std::uint64_t seed, std::size_t threads) {
  check_rows(X, y);
  const Folds folds = make_folds(y, k, seed);
  std::vector<Label> lr_pred(y.size()), rf_pred(y.size()), ens_pred(y.size());
  std::vector<double> lr_acc(k), rf_acc(k), ens_acc(k);

  parallel_for(k, threads, [&](std::size_t f) {
    try {
      const auto train_rows = complement(folds[f], y.size());
      const Matrix X_train = X.take_rows(train_rows);
      const auto y_train = take(y, std::span<const std::size_t>(train_rows));
      const TwoStageEnsembleModel model = train_ensemble(X_train, y_train, params, derive_seed(seed, f), 1);
      std::vector<Label> truth, lr, rf, ens;
      for (const std::size_t i : folds[f]) {
        const Label a = predict(model.stage1, X.row(i));
        const Label b = predict(model.stage2, X.row(i));
        lr_pred[i] = a;
        rf_pred[i] = b;
        ens_pred[i] = combine_stages(a, b);
        truth.push_back(y[i]);
        lr.push_back(a);
        rf.push_back(b);
        ens.push_back(ens_pred[i]);
      }
      lr_acc[f] = accuracy_percent(truth, lr);
      rf_acc[f] = accuracy_percent(truth, rf);
      ens_acc[f] = accuracy_percent(truth, ens);
    } catch (const Error& e) {
      rethrow_for_fold(e, f);
    }
  });

  EnsembleCvResult result;
  result.logreg = summarize_folds(std::move(lr_acc));
  result.forest = summarize_folds(std::move(rf_acc));
  result.ensemble = summarize_folds(std::move(ens_acc));
  const bool forest_best = result.forest.mean > result.logreg.mean;
  result.best_single = forest_best ? ModelKind::RandomForest : ModelKind::LogisticRegression;
  const CvResult& best = forest_best ? result.forest : result.logreg;
  result.paired = paired_t_test(result.ensemble.fold_accuracies, best.fold_accuracies);
  result.mcnemar = mcnemar_test(y, ens_pred, forest_best ? rf_pred : lr_pred);
  result.pooled_logreg = confusion(y, lr_pred);
  result.pooled_forest = confusion(y, rf_pred);
  result.pooled_ensemble = confusion(y, ens_pred);
  return result;
}

// ---------------------------------------------------------------------------
// Coefficient stability

double StabilityReport::overall_max_deviation() const {
  return max_deviation.empty() ? 0.0 : *std::max_element(max_deviation.begin(), max_deviation.end());
}

StabilityReport coefficient_stability(const Matrix& X, std::span<const Label> y, const LogRegParams& params,
                                      std::size_t n_runs, std::uint64_t seed) {
  check_rows(X, y);
  if (n_runs == 0) throw Error(ErrorCode::InvalidArgument, "n_runs must be positive");
  StabilityReport out;
  for (std::size_t r = 0; r < n_runs; ++r) {
    std::vector<std::size_t> order(y.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, r));
    rng.shuffle(std::span<std::size_t>(order));
    const Matrix Xr = X.take_rows(order);
    const auto yr = take(y, std::span<const std::size_t>(order));
    const LogisticRegressionModel model = train_logreg(Xr, yr, params, derive_seed(seed, r));
    out.weights.push_back(model.weights);
    out.biases.push_back(model.bias);
  }

  const std::size_t n_coef = X.cols();
  out.mean.assign(n_coef, 0.0);
  out.max_deviation.assign(n_coef, 0.0);
  out.always_positive.assign(n_coef, true);
  for (std::size_t c = 0; c < n_coef; ++c) {
    for (const auto& w : out.weights) out.mean[c] += w[c];
    out.mean[c] /= static_cast<double>(n_runs);
    for (const auto& w : out.weights) {
      out.max_deviation[c] = std::max(out.max_deviation[c], std::fabs(w[c] - out.mean[c]));
      if (!(w[c] > 0.0)) out.always_positive[c] = false;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}, {"total", cm.total()}};
}

namespace {

nlohmann::json to_json(const ClassMetrics& m) {
  nlohmann::json j{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  nlohmann::json flags = nlohmann::json::array();
  if (m.precision_undefined) flags.push_back("precision");
  if (m.recall_undefined) flags.push_back("recall");
  if (m.f1_undefined) flags.push_back("f1");
  if (!flags.empty()) j["undefined"] = flags;
  return j;
}

nlohmann::json to_json(const PairedTTest& t) {
  return {{"test", "paired_t"},
          {"mean_difference", t.mean_difference},
          {"t_statistic", std::isfinite(t.t_statistic) ? nlohmann::json(t.t_statistic) : nlohmann::json(nullptr)},
          {"df", t.df},
          {"p_value", t.p_value}};
}

nlohmann::json to_json(const McNemarTest& t) {
  return {{"test", "mcnemar"},
          {"ensemble_only_correct", t.ensemble_only_correct},
          {"baseline_only_correct", t.baseline_only_correct},
          {"statistic", t.statistic},
          {"p_value", t.p_value}};
}

}  // namespace

nlohmann::json to_json(const ClassificationReport& r) {
  return {{"parasitized", to_json(r.parasitized)}, {"uninfected", to_json(r.uninfected)},
          {"macro_avg", to_json(r.macro)},         {"weighted_avg", to_json(r.weighted)},
          {"accuracy", r.accuracy},                {"total", r.total}};
}

nlohmann::json to_json(const CvResult& cv) {
  return {{"folds", cv.fold_accuracies}, {"mean", cv.mean}, {"std", cv.std}};
}

nlohmann::json to_json(const SearchResult& search) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : search.samples) {
    samples.push_back({{"params", spec_to_json(s.spec)}, {"cv", to_json(s.cv)}});
  }
  return {{"samples", samples},
          {"best_index", search.best},
          {"best", {{"params", spec_to_json(search.best_sample().spec)}, {"cv", to_json(search.best_sample().cv)}}}};
}

nlohmann::json to_json(const ThresholdSweep& sweep) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : sweep.points) {
    points.push_back({{"threshold", p.threshold},
                      {"precision", p.precision},
                      {"recall", p.recall},
                      {"confusion", to_json(p.cm)}});
  }
  return {{"target_recall", sweep.target_recall},
          {"selected_threshold", sweep.selected ? nlohmann::json(*sweep.selected) : nlohmann::json(nullptr)},
          {"points", points}};
}

nlohmann::json to_json(const EnsembleCvResult& r) {
  return {{"cv",
           {{"logreg", to_json(r.logreg)}, {"rf", to_json(r.forest)}, {"ensemble", to_json(r.ensemble)}}},
          {"best_single", std::string(to_string(r.best_single))},
          {"significance", {{"paired_t", to_json(r.paired)}, {"mcnemar", to_json(r.mcnemar)}}},
          {"pooled_confusion",
           {{"logreg", to_json(r.pooled_logreg)},
            {"rf", to_json(r.pooled_forest)},
            {"ensemble", to_json(r.pooled_ensemble)}}}};
}

nlohmann::json to_json(const StabilityReport& s, const std::vector<std::string>& names) {
  nlohmann::json coefficients = nlohmann::json::array();
  for (std::size_t c = 0; c < s.mean.size(); ++c) {
    std::vector<double> runs;
    for (const auto& w : s.weights) runs.push_back(w[c]);
    coefficients.push_back({{"feature", c < names.size() ? names[c] : "x" + std::to_string(c)},
                            {"mean", s.mean[c]},
                            {"max_deviation", s.max_deviation[c]},
                            {"always_positive", static_cast<bool>(s.always_positive[c])},
                            {"runs", runs}});
  }
  return {{"runs", s.weights.size()},
          {"coefficients", coefficients},
          {"biases", s.biases},
          {"max_deviation", s.overall_max_deviation()}};
}

// ---------------------------------------------------------------------------
// Text tables

namespace {

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string metric_cell(double value, bool undefined_flag) {
  return format("%8.2f%s", value, undefined_flag ? "*" : " ");
}

}  // namespace

std::string confusion_text(const ConfusionMatrix& cm) {
  std::string out;
  out += format("%-22s %12s %12s\n", "", "Pred Parasit.", "Pred Uninf.");
  out += format("%-22s %12llu %12llu\n", "Actual Parasitized", static_cast<unsigned long long>(cm.tp),
                static_cast<unsigned long long>(cm.fn));
  out += format("%-22s %12llu %12llu\n", "Actual Uninfected", static_cast<unsigned long long>(cm.fp),
                static_cast<unsigned long long>(cm.tn));
  return out;
}

std::string report_text(const ClassificationReport& r) {
  std::string out = format("%-14s %9s %9s %9s %9s\n", "", "Precision", "Recall", "F1", "Support");
  const auto row = [&](const char* name, const ClassMetrics& m) {
    out += format("%-14s ", name) + metric_cell(m.precision, m.precision_undefined) +
           metric_cell(m.recall, m.recall_undefined) + metric_cell(m.f1, m.f1_undefined) +
           format(" %8llu\n", static_cast<unsigned long long>(m.support));
  };
  row("Parasitized", r.parasitized);
  row("Uninfected", r.uninfected);
  out += format("%-14s %29s %8.2f  %8llu\n", "Accuracy", "", r.accuracy, static_cast<unsigned long long>(r.total));
  row("Macro avg", r.macro);
  row("Weighted avg", r.weighted);
  if (r.any_undefined()) out += "* undefined (zero denominator), reported as 0\n";
  return out;
}

std::string cv_text(std::span<const std::pair<std::string, CvResult>> rows) {
  std::string out = format("%-12s %14s %10s %6s\n", "Model", "Mean Acc (%)", "Std (pp)", "Folds");
  for (const auto& [name, cv] : rows) {
    out += format("%-12s %14.2f %10.2f %6zu\n", name.c_str(), round2(cv.mean), round2(cv.std),
                  cv.fold_accuracies.size());
  }
  return out;
}

std::string search_text(const SearchResult& search) {
  std::string out = format("%-4s %10s %9s  %s\n", "#", "Mean (%)", "Std (pp)", "Parameters");
  for (std::size_t s = 0; s < search.samples.size(); ++s) {
    const auto& sample = search.samples[s];
    out += format("%-4zu %10.2f %9.2f  ", s, round2(sample.cv.mean), round2(sample.cv.std)) +
           spec_to_json(sample.spec).dump() + (s == search.best ? "  <- best\n" : "\n");
  }
  return out;
}

std::string ensemble_text(const EnsembleCvResult& r) {
  const std::pair<std::string, CvResult> rows[] = {
      {"logreg", r.logreg}, {"rf", r.forest}, {"ensemble", r.ensemble}};
  std::string out = cv_text(rows);
  out += format("\nBest single model: %s\n", std::string(to_string(r.best_single)).c_str());
  out += format("Paired t-test: mean diff %+.3f pp, t = %.4f, df = %zu, p = %.3g\n", r.paired.mean_difference,
                r.paired.t_statistic, r.paired.df, r.paired.p_value);
  out += format("McNemar: b = %llu, c = %llu, chi2 = %.4f, p = %.3g\n",
                static_cast<unsigned long long>(r.mcnemar.ensemble_only_correct),
                static_cast<unsigned long long>(r.mcnemar.baseline_only_correct), r.mcnemar.statistic,
                r.mcnemar.p_value);
  out += "\nPooled ensemble confusion (all folds):\n" + confusion_text(r.pooled_ensemble);
  return out;
}

std::string stability_text(const StabilityReport& s, const std::vector<std::string>& names) {
  std::string out = format("%-12s %10s %12s %10s\n", "Feature", "Mean", "Max |dev|", "Sign");
  for (std::size_t c = 0; c < s.mean.size(); ++c) {
    const std::string name = c < names.size() ? names[c] : "x" + std::to_string(c);
    out += format("%-12s %+10.4f %12.2e %10s\n", name.c_str(), s.mean[c], s.max_deviation[c],
                  s.always_positive[c] ? "positive" : "mixed");
  }
  out += format("Runs: %zu\n", s.weights.size());
  return out;
}

}  // namespace emfe
