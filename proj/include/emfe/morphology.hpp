#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "emfe/imaging.hpp"

namespace emfe {

/// Structural measurements of one mask. For pipeline masks
/// foreground + background == kMaskPixels.
struct FeatureVector {
  std::int64_t foreground = 0;
  std::int64_t background = 0;
  std::int64_t holes = 0;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class Connectivity : int { Four = 4, Eight = 8 };
enum class ComponentTarget { Foreground, Background };

Connectivity parse_connectivity(int value);

/// Per-pixel component IDs. 0 marks pixels outside the labeled class;
/// IDs run 1..count in raster order of first encounter.
struct LabelMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t count = 0;
  std::vector<std::uint32_t> labels;

  std::uint32_t at(std::size_t x, std::size_t y) const { return labels[y * width + x]; }
  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

std::int64_t foreground_count(const BinaryMask& mask);
std::int64_t background_count(const BinaryMask& mask);

/// Two-pass union-find labeling of the target class.
LabelMap label_components(const BinaryMask& mask, ComponentTarget target, Connectivity connectivity);

/// Background components that touch no image edge.
std::int64_t count_holes(const BinaryMask& mask, Connectivity connectivity = Connectivity::Eight);

FeatureVector extract_features(const BinaryMask& mask, Connectivity connectivity = Connectivity::Eight);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
};

struct FeatureStatistics {
  Summary foreground;
  Summary background;
  Summary holes;
};

FeatureStatistics feature_statistics(std::span<const FeatureVector> vectors);

}  // namespace emfe
