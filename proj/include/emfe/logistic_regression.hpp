#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "emfe/label.hpp"
#include "emfe/matrix.hpp"
#include "emfe/standardizer.hpp"

namespace emfe {

enum class Penalty : std::uint8_t { None = 0, L1 = 1, L2 = 2, ElasticNet = 3 };

std::string_view to_string(Penalty penalty);
Penalty parse_penalty(std::string_view text);

inline constexpr double kElasticNetL1Ratio = 0.5;

struct LogRegParams {
  Penalty penalty = Penalty::L2;
  double C = 1.0;
  std::uint32_t max_iter = 5000;
  double tol = 1e-6;

  friend bool operator==(const LogRegParams&, const LogRegParams&) = default;
};

/// Weights live in standardized feature space; the standardizer maps raw
/// feature vectors into it.
struct LogisticRegressionModel {
  LogRegParams params;
  Standardizer standardizer;
  std::vector<double> weights;
  double bias = 0.0;
  std::uint32_t iterations = 0;

  friend bool operator==(const LogisticRegressionModel&, const LogisticRegressionModel&) = default;
};

/// Mean logistic loss of (weights, bias) on standardized rows.
double logistic_loss(std::span<const double> weights, double bias, const Matrix& Xs, std::span<const Label> y);

/// (1/C) * penalty(weights). L2 = 0.5*|w|^2, L1 = |w|_1, ElasticNet mixes both at ratio 0.5.
double penalty_value(std::span<const double> weights, Penalty penalty, double C);

/// Gradient of loss + the differentiable (squared) part of the penalty.
/// Returns the bias gradient; weight gradients go into grad_weights.
double smooth_gradient(std::span<const double> weights, double bias, const Matrix& Xs, std::span<const Label> y,
                       Penalty penalty, double C, std::span<double> grad_weights);

/// Proximal gradient descent with backtracking on standardized data.
/// Throws Diverged if the objective becomes non-finite.
/// When `objective_trace` is given, the full objective after every accepted step is appended.
LogisticRegressionModel fit_logreg_standardized(const Matrix& Xs, std::span<const Label> y, const LogRegParams& params,
                                                Standardizer standardizer, std::vector<double>* objective_trace = nullptr);

/// Fits the standardizer on X, then the model. Training is full-batch, so the
/// seed does not influence the result; it is accepted for interface symmetry.
LogisticRegressionModel train_logreg(const Matrix& X, std::span<const Label> y, const LogRegParams& params,
                                     std::uint64_t seed = 42);

/// sigmoid(w . standardize(x) + b)
double predict_proba(const LogisticRegressionModel& model, std::span<const double> x);
Label predict(const LogisticRegressionModel& model, std::span<const double> x, double threshold = 0.5);

}  // namespace emfe
