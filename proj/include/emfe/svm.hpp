#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "emfe/label.hpp"
#include "emfe/matrix.hpp"
#include "emfe/standardizer.hpp"

namespace emfe {

struct SvmParams {
  double C = 1.0;
  std::optional<double> gamma;  // nullopt: 1 / n_features (unit-variance inputs)
  double tol = 1e-3;
  std::uint32_t max_passes = 5;      // sweeps without any update before stopping
  std::uint32_t max_sweeps = 2000;   // hard cap; exceeding it is Diverged
  std::uint32_t max_rows = 5000;     // seeded subsample above this size

  friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

struct SvmRbfModel {
  SvmParams params;
  double gamma = 0.5;
  Standardizer standardizer;
  Matrix support_vectors;           // standardized
  std::vector<double> dual_coef;    // alpha_i * y_i, |.| <= C
  double bias = 0.0;

  friend bool operator==(const SvmRbfModel&, const SvmRbfModel&) = default;
};

/// Dual objective after every accepted pair update (only filled when requested).
struct SmoTrace {
  std::vector<double> dual_objective;
  std::uint32_t sweeps = 0;
};

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);

/// Simplified SMO on the standardized (and possibly subsampled) training set.
SvmRbfModel train_svm_rbf(const Matrix& X, std::span<const Label> y, const SvmParams& params, std::uint64_t seed = 42,
                          SmoTrace* trace = nullptr);

double decision_function(const SvmRbfModel& model, std::span<const double> x);
/// Logistic squash of the decision value; a ranking score, not a calibrated probability.
double predict_proba(const SvmRbfModel& model, std::span<const double> x);
Label predict(const SvmRbfModel& model, std::span<const double> x);

}  // namespace emfe
