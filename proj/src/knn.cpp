#include "emfe/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emfe {

std::string to_string(const Metric& metric) {
  switch (metric.kind) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::Manhattan: return "manhattan";
    case MetricKind::Chebyshev: return "chebyshev";
    case MetricKind::Minkowski: return "minkowski" + std::to_string(static_cast<int>(metric.p));
  }
  return "euclidean";
}

Metric parse_metric(std::string_view text) {
  if (text == "euclidean") return {MetricKind::Euclidean, 2.0};
  if (text == "manhattan") return {MetricKind::Manhattan, 1.0};
  if (text == "chebyshev") return {MetricKind::Chebyshev, 0.0};
  if (text == "minkowski1") return {MetricKind::Minkowski, 1.0};
  if (text == "minkowski2") return {MetricKind::Minkowski, 2.0};
  if (text == "minkowski3") return {MetricKind::Minkowski, 3.0};
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(text) + "'");
}

double distance(std::span<const double> a, std::span<const double> b, const Metric& metric) {
  double acc = 0.0;
  switch (metric.kind) {
    case MetricKind::Euclidean:
      for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
      return std::sqrt(acc);
    case MetricKind::Manhattan:
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
      return acc;
    case MetricKind::Chebyshev:
      for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
      return acc;
    case MetricKind::Minkowski:
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::pow(std::abs(a[i] - b[i]), metric.p);
      return std::pow(acc, 1.0 / metric.p);
  }
  return acc;
}

KnnModel train_knn(const Matrix& X, std::span<const Label> y, const KnnParams& params) {
  if (X.rows() != y.size()) throw Error(ErrorCode::LengthMismatch, "X and y row counts differ");
  if (params.n_neighbors == 0) throw Error(ErrorCode::InvalidArgument, "n_neighbors must be positive");
  if (params.n_neighbors > X.rows()) throw Error(ErrorCode::KTooLarge, "n_neighbors exceeds training size");
  if (params.metric.kind == MetricKind::Minkowski && !(params.metric.p >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "Minkowski p must be >= 1");
  }
  KnnModel model;
  model.params = params;
  model.standardizer = fit_standardizer(X);
  model.points = model.standardizer.apply(X);
  model.labels.assign(y.begin(), y.end());
  return model;
}

std::vector<std::size_t> nearest_neighbors(const KnnModel& model, std::span<const double> x) {
  const std::vector<double> query = model.standardizer.apply(x);
  const std::size_t n = model.points.rows();
  std::vector<std::pair<double, std::size_t>> ranked(n);
  for (std::size_t i = 0; i < n; ++i) ranked[i] = {distance(query, model.points.row(i), model.params.metric), i};
  const std::size_t k = model.params.n_neighbors;
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = ranked[i].second;
  return out;
}

double predict_proba(const KnnModel& model, std::span<const double> x) {
  const auto neighbours = nearest_neighbors(model, x);
  std::size_t positive = 0;
  for (const std::size_t i : neighbours) positive += model.labels[i] == Label::Parasitized ? 1 : 0;
  return static_cast<double>(positive) / static_cast<double>(neighbours.size());
}

Label predict(const KnnModel& model, std::span<const double> x) {
  const auto neighbours = nearest_neighbors(model, x);
  std::size_t positive = 0;
  for (const std::size_t i : neighbours) positive += model.labels[i] == Label::Parasitized ? 1 : 0;
  const std::size_t negative = neighbours.size() - positive;
  if (positive != negative) return positive > negative ? Label::Parasitized : Label::Uninfected;
  return model.labels[neighbours.front()];
}

}  // namespace emfe
