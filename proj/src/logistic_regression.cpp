#include "emfe/logistic_regression.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emfe {

std::string_view to_string(Penalty penalty) {
  switch (penalty) {
    case Penalty::None: return "none";
    case Penalty::L1: return "l1";
    case Penalty::L2: return "l2";
    case Penalty::ElasticNet: return "elasticnet";
  }
  return "none";
}

Penalty parse_penalty(std::string_view text) {
  if (text == "none") return Penalty::None;
  if (text == "l1") return Penalty::L1;
  if (text == "l2") return Penalty::L2;
  if (text == "elasticnet") return Penalty::ElasticNet;
  throw Error(ErrorCode::InvalidArgument, "unknown penalty '" + std::string(text) + "'");
}

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double linear_score(std::span<const double> weights, double bias, std::span<const double> x) {
  double z = bias;
  for (std::size_t c = 0; c < weights.size(); ++c) z += weights[c] * x[c];
  return z;
}

// Coefficients of the L1 term and of the squared L2 term, both already divided by C.
struct PenaltyWeights {
  double l1 = 0.0;
  double l2 = 0.0;
};

PenaltyWeights penalty_weights(Penalty penalty, double C) {
  switch (penalty) {
    case Penalty::None: return {};
    case Penalty::L1: return {1.0 / C, 0.0};
    case Penalty::L2: return {0.0, 1.0 / C};
    case Penalty::ElasticNet: return {kElasticNetL1Ratio / C, (1.0 - kElasticNetL1Ratio) / C};
  }
  return {};
}

double squared_norm(std::span<const double> w) {
  double s = 0.0;
  for (const double v : w) s += v * v;
  return s;
}

double smooth_objective(std::span<const double> w, double b, const Matrix& Xs, std::span<const Label> y, double l2) {
  return logistic_loss(w, b, Xs, y) + 0.5 * l2 * squared_norm(w);
}

double l1_norm(std::span<const double> w) {
  double s = 0.0;
  for (const double v : w) s += std::abs(v);
  return s;
}

double soft_threshold(double v, double amount) {
  if (v > amount) return v - amount;
  if (v < -amount) return v + amount;
  return 0.0;
}

}  // namespace

double logistic_loss(std::span<const double> weights, double bias, const Matrix& Xs, std::span<const Label> y) {
  if (Xs.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X and y row counts differ");
  if (Xs.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training rows");
  double total = 0.0;
  for (std::size_t r = 0; r < Xs.rows(); ++r) {
    const double z = linear_score(weights, bias, Xs.row(r));
    total += softplus(z) - (y[r] == Label::Parasitized ? z : 0.0);
  }
  return total / static_cast<double>(Xs.rows());
}

double penalty_value(std::span<const double> weights, Penalty penalty, double C) {
  const PenaltyWeights pw = penalty_weights(penalty, C);
  return pw.l1 * l1_norm(weights) + 0.5 * pw.l2 * squared_norm(weights);
}

double smooth_gradient(std::span<const double> weights, double bias, const Matrix& Xs, std::span<const Label> y,
                       Penalty penalty, double C, std::span<double> grad_weights) {
  const std::size_t n = Xs.rows();
  std::fill(grad_weights.begin(), grad_weights.end(), 0.0);
  double grad_bias = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto x = Xs.row(r);
    const double residual = sigmoid(linear_score(weights, bias, x)) - (y[r] == Label::Parasitized ? 1.0 : 0.0);
    grad_bias += residual;
    for (std::size_t c = 0; c < weights.size(); ++c) grad_weights[c] += residual * x[c];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double l2 = penalty_weights(penalty, C).l2;
  for (std::size_t c = 0; c < weights.size(); ++c) grad_weights[c] = grad_weights[c] * inv_n + l2 * weights[c];
  return grad_bias * inv_n;
}

LogisticRegressionModel fit_logreg_standardized(const Matrix& Xs, std::span<const Label> y, const LogRegParams& params,
                                                Standardizer standardizer, std::vector<double>* objective_trace) {
  if (Xs.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X and y row counts differ");
  if (Xs.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training rows");
  if (!(params.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");

  const std::size_t d = Xs.cols();
  const PenaltyWeights pw = penalty_weights(params.penalty, params.C);

  LogisticRegressionModel model;
  model.params = params;
  model.standardizer = std::move(standardizer);
  model.weights.assign(d, 0.0);
  model.bias = 0.0;

  std::vector<double> grad(d), candidate(d);
  double smooth = smooth_objective(model.weights, model.bias, Xs, y, pw.l2);
  double objective = smooth + pw.l1 * l1_norm(model.weights);
  double step = 1.0;

  for (std::uint32_t iter = 0; iter < params.max_iter; ++iter) {
    model.iterations = iter + 1;
    const double grad_bias = smooth_gradient(model.weights, model.bias, Xs, y, params.penalty, params.C, grad);

    double candidate_bias = 0.0, candidate_smooth = 0.0;
    bool accepted = false;
    while (step > 1e-20) {
      double linear = 0.0, distance = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        candidate[c] = soft_threshold(model.weights[c] - step * grad[c], step * pw.l1);
        const double delta = candidate[c] - model.weights[c];
        linear += grad[c] * delta;
        distance += delta * delta;
      }
      candidate_bias = model.bias - step * grad_bias;
      const double delta_bias = candidate_bias - model.bias;
      linear += grad_bias * delta_bias;
      distance += delta_bias * delta_bias;

      candidate_smooth = smooth_objective(candidate, candidate_bias, Xs, y, pw.l2);
      if (!std::isfinite(candidate_smooth)) {
        step *= 0.5;
        continue;
      }
      if (candidate_smooth <= smooth + linear + distance / (2.0 * step) + 1e-15 * std::abs(smooth)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no representable descent step left

    const double candidate_objective = candidate_smooth + pw.l1 * l1_norm(candidate);
    if (!std::isfinite(candidate_objective)) throw Error(ErrorCode::Diverged, "logistic objective became non-finite");

    model.weights = candidate;
    model.bias = candidate_bias;
    smooth = candidate_smooth;
    const double change = objective - candidate_objective;
    objective = candidate_objective;
    if (objective_trace != nullptr) objective_trace->push_back(objective);
    if (std::abs(change) < params.tol) break;
    step = std::min(step * 2.0, 1e6);
  }
  return model;
}

LogisticRegressionModel train_logreg(const Matrix& X, std::span<const Label> y, const LogRegParams& params,
                                     std::uint64_t /*seed*/) {
  Standardizer standardizer = fit_standardizer(X);
  const Matrix Xs = standardizer.apply(X);
  return fit_logreg_standardized(Xs, y, params, std::move(standardizer));
}

double predict_proba(const LogisticRegressionModel& model, std::span<const double> x) {
  double z = model.bias;
  for (std::size_t c = 0; c < model.weights.size(); ++c) {
    z += model.weights[c] * (x[c] - model.standardizer.means[c]) / model.standardizer.stds[c];
  }
  return sigmoid(z);
}

Label predict(const LogisticRegressionModel& model, std::span<const double> x, double threshold) {
  return predict_proba(model, x) > threshold ? Label::Parasitized : Label::Uninfected;
}

}  // namespace emfe
