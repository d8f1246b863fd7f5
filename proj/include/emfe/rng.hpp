#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace emfe {

/// Seeded generator with platform-independent draws.
///
/// The standard distributions are implementation-defined, so shuffles and
/// bootstrap draws built on them would differ between standard libraries.
/// Everything here derives from raw mt19937_64 output only.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t index(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % bound;
  }

  /// Uniform real in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(index(i));
      std::swap(items[i - 1], items[j]);
    }
  }

private:
  std::mt19937_64 engine_;
};

/// Deterministic seed for a sub-task (fold, tree, search sample).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return seed + stream;
}

}  // namespace emfe
