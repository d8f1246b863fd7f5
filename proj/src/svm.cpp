#include "emfe/svm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "emfe/rng.hpp"

namespace emfe {

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * sq);
}

namespace {

// W(alpha) = sum(alpha) - 1/2 sum_i alpha_i t_i (F_i - b), with F the cached decision values.
double dual_objective(std::span<const double> alpha, std::span<const double> target, std::span<const double> cache,
                      double bias) {
  double linear = 0.0, quadratic = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    linear += alpha[i];
    quadratic += alpha[i] * target[i] * (cache[i] - bias);
  }
  return linear - 0.5 * quadratic;
}

}  // namespace

SvmRbfModel train_svm_rbf(const Matrix& X, std::span<const Label> y, const SvmParams& params, std::uint64_t seed,
                          SmoTrace* trace) {
  if (X.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X and y row counts differ");
  if (X.rows() < 2) throw Error(ErrorCode::TooFewSamples, "SVM needs at least two rows");
  if (!(params.C > 0.0)) throw Error(ErrorCode::InvalidArgument, "C must be positive");

  Rng rng(seed);
  std::vector<std::size_t> rows(X.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (params.max_rows > 0 && rows.size() > params.max_rows) {
    rng.shuffle(std::span<std::size_t>(rows));
    rows.resize(params.max_rows);
    std::sort(rows.begin(), rows.end());
  }

  SvmRbfModel model;
  model.params = params;
  model.gamma = params.gamma.value_or(1.0 / static_cast<double>(X.cols()));
  const Matrix subset = X.take_rows(rows);
  model.standardizer = fit_standardizer(subset);
  const Matrix Xs = model.standardizer.apply(subset);

  const std::size_t n = Xs.rows();
  std::vector<double> target(n), alpha(n, 0.0), cache(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) target[i] = sign_of(y[rows[i]]);
  double bias = 0.0;
  const double C = params.C;

  std::uint32_t passes = 0, sweeps = 0;
  while (passes < params.max_passes) {
    if (sweeps >= params.max_sweeps) {
      throw Error(ErrorCode::Diverged, "SMO did not settle within " + std::to_string(params.max_sweeps) + " sweeps");
    }
    ++sweeps;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double error_i = cache[i] - target[i];
      const bool violates = (target[i] * error_i < -params.tol && alpha[i] < C) ||
                            (target[i] * error_i > params.tol && alpha[i] > 0.0);
      if (!violates) continue;

      std::size_t j = static_cast<std::size_t>(rng.index(n - 1));
      if (j >= i) ++j;
      const double error_j = cache[j] - target[j];
      const double alpha_i = alpha[i], alpha_j = alpha[j];

      double lo, hi;
      if (target[i] != target[j]) {
        lo = std::max(0.0, alpha_j - alpha_i);
        hi = std::min(C, C + alpha_j - alpha_i);
      } else {
        lo = std::max(0.0, alpha_i + alpha_j - C);
        hi = std::min(C, alpha_i + alpha_j);
      }
      if (lo >= hi) continue;

      const double k_ij = rbf_kernel(Xs.row(i), Xs.row(j), model.gamma);
      const double eta = 2.0 * k_ij - 2.0;  // K_ii = K_jj = 1
      if (eta >= 0.0) continue;

      const double new_j = std::clamp(alpha_j - target[j] * (error_i - error_j) / eta, lo, hi);
      if (std::abs(new_j - alpha_j) < 1e-5) continue;
      const double new_i = alpha_i + target[i] * target[j] * (alpha_j - new_j);

      const double d_i = target[i] * (new_i - alpha_i);
      const double d_j = target[j] * (new_j - alpha_j);
      const double b1 = bias - error_i - d_i - d_j * k_ij;
      const double b2 = bias - error_j - d_i * k_ij - d_j;
      double new_bias;
      if (new_i > 0.0 && new_i < C) {
        new_bias = b1;
      } else if (new_j > 0.0 && new_j < C) {
        new_bias = b2;
      } else {
        new_bias = 0.5 * (b1 + b2);
      }

      for (std::size_t k = 0; k < n; ++k) {
        cache[k] += d_i * rbf_kernel(Xs.row(i), Xs.row(k), model.gamma) +
                    d_j * rbf_kernel(Xs.row(j), Xs.row(k), model.gamma) + (new_bias - bias);
      }
      alpha[i] = new_i;
      alpha[j] = new_j;
      bias = new_bias;
      ++changed;
      if (trace != nullptr) trace->dual_objective.push_back(dual_objective(alpha, target, cache, bias));
    }
    passes = changed == 0 ? passes + 1 : 0;
  }
  if (trace != nullptr) trace->sweeps = sweeps;

  std::vector<std::size_t> support;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 0.0) support.push_back(i);
  }
  model.support_vectors = Xs.take_rows(support);
  model.dual_coef.reserve(support.size());
  for (const std::size_t i : support) model.dual_coef.push_back(alpha[i] * target[i]);
  model.bias = bias;
  return model;
}

double decision_function(const SvmRbfModel& model, std::span<const double> x) {
  const std::vector<double> query = model.standardizer.apply(x);
  double value = model.bias;
  for (std::size_t s = 0; s < model.dual_coef.size(); ++s) {
    value += model.dual_coef[s] * rbf_kernel(model.support_vectors.row(s), query, model.gamma);
  }
  return value;
}

double predict_proba(const SvmRbfModel& model, std::span<const double> x) {
  return 1.0 / (1.0 + std::exp(-decision_function(model, x)));
}

Label predict(const SvmRbfModel& model, std::span<const double> x) {
  return decision_function(model, x) > 0.0 ? Label::Parasitized : Label::Uninfected;
}

}  // namespace emfe
