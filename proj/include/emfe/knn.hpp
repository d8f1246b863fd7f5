#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emfe/label.hpp"
#include "emfe/matrix.hpp"
#include "emfe/standardizer.hpp"

namespace emfe {

enum class MetricKind : std::uint8_t { Euclidean = 0, Manhattan = 1, Chebyshev = 2, Minkowski = 3 };

struct Metric {
  MetricKind kind = MetricKind::Euclidean;
  double p = 2.0;  // Minkowski only

  friend bool operator==(const Metric&, const Metric&) = default;
};

/// "euclidean", "manhattan", "chebyshev", "minkowski1" .. "minkowski3"
std::string to_string(const Metric& metric);
Metric parse_metric(std::string_view text);

double distance(std::span<const double> a, std::span<const double> b, const Metric& metric);

struct KnnParams {
  std::uint32_t n_neighbors = 5;
  Metric metric;

  friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

struct KnnModel {
  KnnParams params;
  Standardizer standardizer;
  Matrix points;  // standardized training rows
  std::vector<Label> labels;

  friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

/// Throws KTooLarge when n_neighbors exceeds the training size.
KnnModel train_knn(const Matrix& X, std::span<const Label> y, const KnnParams& params);

/// Indices of the k nearest training rows, ordered by (distance, index).
std::vector<std::size_t> nearest_neighbors(const KnnModel& model, std::span<const double> x);

/// Fraction of Parasitized among the k nearest.
double predict_proba(const KnnModel& model, std::span<const double> x);
/// Majority of the k nearest; a tied vote goes to the label of the nearest neighbour.
Label predict(const KnnModel& model, std::span<const double> x);

}  // namespace emfe
