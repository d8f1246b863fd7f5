#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "emfe/imaging.hpp"
#include "emfe/model.hpp"
#include "emfe/morphology.hpp"

namespace emfe {

struct HostDescriptor {
  std::string cpu_model;
  unsigned cores = 0;
};

HostDescriptor host_descriptor();

/// Milliseconds per call.
struct LatencyStats {
  double median_ms = 0.0;
  double p95_ms = 0.0;  // nearest-rank
  std::size_t iterations = 0;
};

/// Order statistics of per-call samples (milliseconds). Throws EmptyInput.
LatencyStats latency_stats(std::vector<double> samples_ms);

/// Times `call(i % count)` one call at a time on the calling thread after
/// `warmup` untimed calls. Throws InvalidArgument for fewer than 1000 iterations.
LatencyStats time_calls(std::size_t count, const std::function<void(std::size_t)>& call, std::size_t iterations = 1000,
                        std::size_t warmup = 100);

/// Median wall time in seconds over `repeats` fresh training runs.
double bench_training(const ModelSpec& spec, const Matrix& X, std::span<const Label> y, std::size_t repeats = 3,
                      std::uint64_t seed = 42);

/// Times predict() on precomputed raw feature rows.
LatencyStats bench_inference(const Model& model, const Matrix& samples, std::size_t iterations = 1000);

/// Times decode, mask, feature extraction and predict per image file.
LatencyStats bench_end_to_end(const Model& model, std::span<const std::filesystem::path> images, PolarityMode polarity,
                              Connectivity connectivity, std::size_t iterations = 1000);

/// Exact size of a serialized model. Throws IoError for an empty or missing path.
std::uint64_t bench_size(const std::filesystem::path& path);

struct BenchReport {
  ModelKind kind = ModelKind::LogisticRegression;
  std::optional<double> training_seconds;
  LatencyStats model_only;
  std::optional<LatencyStats> end_to_end;
  std::uint64_t model_bytes = 0;
  HostDescriptor host;
};

nlohmann::json to_json(const BenchReport& report);
std::string bench_text(std::span<const BenchReport> reports);

}  // namespace emfe
