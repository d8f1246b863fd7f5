#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "emfe/label.hpp"
#include "emfe/matrix.hpp"
#include "emfe/model.hpp"

namespace emfe {

// ---------------------------------------------------------------------------
// Test-set metrics

/// Parasitized is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fn = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t total() const { return tp + fn + fp + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws LengthMismatch when the spans differ in length.
ConfusionMatrix confusion(std::span<const Label> y_true, std::span<const Label> y_pred);

/// Half-up rounding to two decimals.
double round2(double value);

/// Percentages in [0, 100], already rounded to two decimals.
/// A metric whose denominator is zero is reported as 0 with its flag set.
struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct ClassificationReport {
  ClassMetrics parasitized;
  ClassMetrics uninfected;
  ClassMetrics macro;
  ClassMetrics weighted;
  double accuracy = 0.0;
  std::uint64_t total = 0;
  bool any_undefined() const;
};

/// Throws EmptyInput for an all-zero matrix.
ClassificationReport report(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Cross-validation and search

/// Fold accuracies in percent; std is the population standard deviation.
struct CvResult {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double std = 0.0;
};

CvResult summarize_folds(std::vector<double> fold_accuracies);

/// Stratified k-fold over every row of X. Fold f trains with seed + f.
/// Training errors are rethrown with the fold index in the message.
CvResult cross_validate(const ModelSpec& spec, const Matrix& X, std::span<const Label> y, std::size_t k,
                        std::uint64_t seed = 42, std::size_t threads = 1);

using SearchSpace = std::vector<ModelSpec>;

/// The discrete grid for a family. Empty for families without a tuning grid.
SearchSpace default_search_space(ModelKind kind);

struct SearchSample {
  ModelSpec spec;
  CvResult cv;
};

struct SearchResult {
  std::vector<SearchSample> samples;  // in draw order
  std::size_t best = 0;               // max mean, then lower std, then earlier draw
  const SearchSample& best_sample() const { return samples.at(best); }
};

/// Draws min(n_samples, |space|) configurations without replacement and
/// scores each with cross_validate on shared folds. Throws EmptySpace.
SearchResult random_search(const SearchSpace& space, const Matrix& X, std::span<const Label> y,
                           std::size_t n_samples = 25, std::size_t k = 5, std::uint64_t seed = 42,
                           std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Threshold analysis

struct ThresholdPoint {
  double threshold = 0.0;  // a sample is Parasitized when its probability exceeds this
  ConfusionMatrix cm;
  double precision = 0.0;  // Parasitized, percent
  double recall = 0.0;     // Parasitized, percent
};

struct ThresholdSweep {
  std::vector<ThresholdPoint> points;  // ascending threshold, bracketed by 0 and 1
  double target_recall = 0.95;
  std::optional<double> selected;      // largest threshold whose recall meets the target
};

ThresholdSweep threshold_sweep(const LogisticRegressionModel& model, const Matrix& X, std::span<const Label> y,
                               double target_recall = 0.95);

// ---------------------------------------------------------------------------
// Ensemble validation

struct PairedTTest {
  double mean_difference = 0.0;  // percentage points, ensemble minus baseline
  double t_statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;  // two-sided
};

struct McNemarTest {
  std::uint64_t ensemble_only_correct = 0;
  std::uint64_t baseline_only_correct = 0;
  double statistic = 0.0;  // continuity-corrected chi-square, 1 df
  double p_value = 1.0;
};

/// Two-sided paired t-test on matched samples.
PairedTTest paired_t_test(std::span<const double> treatment, std::span<const double> baseline);
McNemarTest mcnemar_test(std::span<const Label> y, std::span<const Label> treatment, std::span<const Label> baseline);

struct EnsembleCvResult {
  CvResult logreg;
  CvResult forest;
  CvResult ensemble;
  ModelKind best_single = ModelKind::LogisticRegression;
  PairedTTest paired;
  McNemarTest mcnemar;
  ConfusionMatrix pooled_logreg;
  ConfusionMatrix pooled_forest;
  ConfusionMatrix pooled_ensemble;
};

/// Per fold, both stages are fitted on the fold-train rows and the sequential
/// rule is scored on the held-out rows. The best single model is the one with
/// the higher mean (logistic regression on a tie).
EnsembleCvResult evaluate_ensemble_cv(const Matrix& X, std::span<const Label> y, const EnsembleParams& params = {},
                                      std::size_t k = 10, std::uint64_t seed = 42, std::size_t threads = 1);

// ---------------------------------------------------------------------------
// Coefficient stability

struct StabilityReport {
  std::vector<std::vector<double>> weights;  // one row per run
  std::vector<double> biases;
  std::vector<double> mean;                  // per coefficient
  std::vector<double> max_deviation;         // per coefficient, from the run mean
  std::vector<bool> always_positive;         // per coefficient
  double overall_max_deviation() const;
};

/// Retrains logistic regression on n_runs row permutations (run r shuffles with seed + r).
StabilityReport coefficient_stability(const Matrix& X, std::span<const Label> y, const LogRegParams& params = {},
                                      std::size_t n_runs = 10, std::uint64_t seed = 42);

// ---------------------------------------------------------------------------
// Output

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const ClassificationReport& report);
nlohmann::json to_json(const CvResult& cv);
nlohmann::json to_json(const SearchResult& search);
nlohmann::json to_json(const ThresholdSweep& sweep);
nlohmann::json to_json(const EnsembleCvResult& result);
nlohmann::json to_json(const StabilityReport& stability, const std::vector<std::string>& feature_names);

std::string confusion_text(const ConfusionMatrix& cm);
std::string report_text(const ClassificationReport& report);
std::string cv_text(std::span<const std::pair<std::string, CvResult>> rows);
std::string search_text(const SearchResult& search);
std::string ensemble_text(const EnsembleCvResult& result);
std::string stability_text(const StabilityReport& stability, const std::vector<std::string>& feature_names);

}  // namespace emfe
