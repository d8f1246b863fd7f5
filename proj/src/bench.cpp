#include "emfe/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "emfe/dataset.hpp"

namespace emfe {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start, Clock::time_point stop) {
  return std::chrono::duration<double, std::milli>(stop - start).count();
}

// Sink that keeps the optimizer from discarding timed predictions.
volatile double g_sink = 0.0;

}  // namespace

HostDescriptor host_descriptor() {
  HostDescriptor host;
  host.cores = std::thread::hardware_concurrency();
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        host.cpu_model = line.substr(line.find_first_not_of(' ', colon + 1));
        break;
      }
    }
  }
  if (host.cpu_model.empty()) host.cpu_model = "unknown";
  return host;
}

LatencyStats latency_stats(std::vector<double> samples_ms) {
  if (samples_ms.empty()) throw Error(ErrorCode::EmptyInput, "no latency samples");
  std::sort(samples_ms.begin(), samples_ms.end());
  const std::size_t n = samples_ms.size();
  LatencyStats stats;
  stats.iterations = n;
  stats.median_ms = n % 2 == 1 ? samples_ms[n / 2] : 0.5 * (samples_ms[n / 2 - 1] + samples_ms[n / 2]);
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  stats.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  return stats;
}

LatencyStats time_calls(std::size_t count, const std::function<void(std::size_t)>& call, std::size_t iterations,
                        std::size_t warmup) {
  if (count == 0) throw Error(ErrorCode::EmptyInput, "no benchmark samples");
  if (iterations < 1000) throw Error(ErrorCode::InvalidArgument, "at least 1000 timed iterations are required");
  for (std::size_t i = 0; i < warmup; ++i) call(i % count);
  std::vector<double> samples(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto start = Clock::now();
    call(i % count);
    samples[i] = elapsed_ms(start, Clock::now());
  }
  return latency_stats(std::move(samples));
}

double bench_training(const ModelSpec& spec, const Matrix& X, std::span<const Label> y, std::size_t repeats,
                      std::uint64_t seed) {
  if (repeats == 0) throw Error(ErrorCode::InvalidArgument, "repeats must be positive");
  std::vector<double> seconds(repeats);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto start = Clock::now();
    const Model model = train(spec, X, y, seed, 1);
    seconds[r] = elapsed_ms(start, Clock::now()) / 1000.0;
    g_sink = g_sink + static_cast<double>(feature_count(model));
  }
  std::sort(seconds.begin(), seconds.end());
  return repeats % 2 == 1 ? seconds[repeats / 2] : 0.5 * (seconds[repeats / 2 - 1] + seconds[repeats / 2]);
}

LatencyStats bench_inference(const Model& model, const Matrix& samples, std::size_t iterations) {
  if (samples.cols() != feature_count(model)) {
    throw Error(ErrorCode::LengthMismatch, "sample width does not match the model's feature count");
  }
  return time_calls(
      samples.rows(), [&](std::size_t i) { g_sink = g_sink + static_cast<double>(predict(model, samples.row(i))); },
      iterations);
}

LatencyStats bench_end_to_end(const Model& model, std::span<const std::filesystem::path> images, PolarityMode polarity,
                              Connectivity connectivity, std::size_t iterations) {
  const std::size_t width = feature_count(model);
  if (width != 2 && width != 3) throw Error(ErrorCode::InvalidArgument, "model does not consume morphology features");
  return time_calls(
      images.size(),
      [&](std::size_t i) {
        const FeatureVector f = extract_file(images[i], polarity, connectivity);
        double row[3];
        if (width == 2) {
          row[0] = static_cast<double>(f.foreground);
          row[1] = static_cast<double>(f.holes);
        } else {
          row[0] = static_cast<double>(f.foreground);
          row[1] = static_cast<double>(f.background);
          row[2] = static_cast<double>(f.holes);
        }
        g_sink = g_sink + static_cast<double>(predict(model, std::span<const double>(row, width)));
      },
      iterations);
}

std::uint64_t bench_size(const std::filesystem::path& path) {
  if (path.empty()) throw Error(ErrorCode::IoError, "empty model path");
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || !std::filesystem::is_regular_file(path)) throw Error(ErrorCode::IoError, "cannot stat " + path.string());
  return size;
}

nlohmann::json to_json(const BenchReport& r) {
  const auto latency = [](const LatencyStats& s) {
    return nlohmann::json{{"median_ms", s.median_ms}, {"p95_ms", s.p95_ms}, {"iterations", s.iterations}};
  };
  nlohmann::json j{{"model_kind", std::string(to_string(r.kind))},
                   {"training_seconds", nullptr},
                   {"inference", {{"model_only", latency(r.model_only)}, {"end_to_end", nullptr}}},
                   {"model_bytes", r.model_bytes},
                   {"host", {{"cpu_model", r.host.cpu_model}, {"cores", r.host.cores}}}};
  if (r.training_seconds) j["training_seconds"] = *r.training_seconds;
  if (r.end_to_end) j["inference"]["end_to_end"] = latency(*r.end_to_end);
  return j;
}

std::string bench_text(std::span<const BenchReport> reports) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-10s %12s %18s %18s %12s\n", "Model", "Train (s)", "Infer ms/img",
                "End-to-end ms/img", "Size (B)");
  out += buf;
  for (const auto& r : reports) {
    const std::string train = r.training_seconds ? std::to_string(*r.training_seconds).substr(0, 8) : "-";
    char e2e[64] = "-";
    if (r.end_to_end) std::snprintf(e2e, sizeof e2e, "%.4f / %.4f", r.end_to_end->median_ms, r.end_to_end->p95_ms);
    char model_only[64];
    std::snprintf(model_only, sizeof model_only, "%.4f / %.4f", r.model_only.median_ms, r.model_only.p95_ms);
    std::snprintf(buf, sizeof buf, "%-10s %12s %18s %18s %12llu\n", std::string(to_string(r.kind)).c_str(),
                  train.c_str(), model_only, e2e, static_cast<unsigned long long>(r.model_bytes));
    out += buf;
  }
  out += "Latency columns: median / p95.";
  if (!reports.empty()) out += " Host: " + reports.front().host.cpu_model + ", " + std::to_string(reports.front().host.cores) + " cores.";
  out += "\n";
  return out;
}

}  // namespace emfe
