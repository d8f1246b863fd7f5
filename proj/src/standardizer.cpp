#include "emfe/standardizer.hpp"

#include <cmath>
#include <string>

namespace emfe {

Standardizer fit_standardizer(const Matrix& X) {
  if (X.rows() < 2) throw Error(ErrorCode::TooFewSamples, "standardizer needs at least two rows");
  Standardizer s;
  s.means.assign(X.cols(), 0.0);
  s.stds.assign(X.cols(), 0.0);
  const auto n = static_cast<double>(X.rows());
  for (std::size_t c = 0; c < X.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) sum += X(r, c);
    const double mean = sum / n;
    double squares = 0.0;
    for (std::size_t r = 0; r < X.rows(); ++r) {
      const double d = X(r, c) - mean;
      squares += d * d;
    }
    const double std = std::sqrt(squares / n);
    if (!(std > 0.0)) throw Error(ErrorCode::ConstantColumn, "column " + std::to_string(c) + " is constant");
    s.means[c] = mean;
    s.stds[c] = std;
  }
  return s;
}

void Standardizer::apply_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != means.size() || out.size() != means.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature count does not match standardizer");
  }
  for (std::size_t c = 0; c < x.size(); ++c) out[c] = (x[c] - means[c]) / stds[c];
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
  std::vector<double> out(x.size());
  apply_into(x, out);
  return out;
}

Matrix Standardizer::apply(const Matrix& X) const {
  Matrix out(X.rows(), X.cols());
  for (std::size_t r = 0; r < X.rows(); ++r) apply_into(X.row(r), out.row(r));
  return out;
}

}  // namespace emfe
