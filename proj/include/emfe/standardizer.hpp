#pragma once

#include <span>
#include <vector>

#include "emfe/matrix.hpp"

namespace emfe {

/// Per-column z-scoring fitted on training rows only.
struct Standardizer {
  std::vector<double> means;
  std::vector<double> stds;  // population std, always > 0

  std::size_t size() const { return means.size(); }

  std::vector<double> apply(std::span<const double> x) const;
  void apply_into(std::span<const double> x, std::span<double> out) const;
  Matrix apply(const Matrix& X) const;

  friend bool operator==(const Standardizer&, const Standardizer&) = default;
};

/// Throws TooFewSamples for < 2 rows and ConstantColumn for zero-variance columns.
Standardizer fit_standardizer(const Matrix& X);

}  // namespace emfe
