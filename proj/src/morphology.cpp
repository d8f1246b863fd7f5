#include "emfe/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "emfe/error.hpp"

namespace emfe {

Connectivity parse_connectivity(int value) {
  if (value == 4) return Connectivity::Four;
  if (value == 8) return Connectivity::Eight;
  throw Error(ErrorCode::InvalidArgument, "connectivity must be 4 or 8, got " + std::to_string(value));
}

std::int64_t foreground_count(const BinaryMask& mask) {
  return std::count_if(mask.bits.begin(), mask.bits.end(), [](std::uint8_t b) { return b != 0; });
}

std::int64_t background_count(const BinaryMask& mask) {
  return static_cast<std::int64_t>(mask.size()) - foreground_count(mask);
}

namespace {

class DisjointSet {
public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;
  }

  std::size_t size() const { return parent_.size(); }

private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace

LabelMap label_components(const BinaryMask& mask, ComponentTarget target, Connectivity connectivity) {
  const std::size_t w = mask.width, h = mask.height;
  const bool want = target == ComponentTarget::Foreground;
  const bool diagonal = connectivity == Connectivity::Eight;

  // Provisional labels are 1-based; 0 = not in target class.
  std::vector<std::uint32_t> provisional(w * h, 0);
  DisjointSet sets;
  sets.make();  // slot 0 unused

  auto in_target = [&](std::size_t x, std::size_t y) { return mask.at(x, y) == want; };

  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      if (!in_target(x, y)) continue;
      std::uint32_t label = 0;
      auto visit = [&](std::size_t nx, std::size_t ny) {
        const std::uint32_t neighbour = provisional[ny * w + nx];
        if (neighbour == 0) return;
        if (label == 0) {
          label = neighbour;
        } else {
          sets.unite(label, neighbour);
        }
      };
      if (x > 0) visit(x - 1, y);
      if (y > 0) {
        visit(x, y - 1);
        if (diagonal && x > 0) visit(x - 1, y - 1);
        if (diagonal && x + 1 < w) visit(x + 1, y - 1);
      }
      provisional[y * w + x] = label != 0 ? label : sets.make();
    }
  }

  LabelMap result{w, h, 0, std::vector<std::uint32_t>(w * h, 0)};
  std::vector<std::uint32_t> final_id(sets.size(), 0);
  for (std::size_t i = 0; i < w * h; ++i) {
    if (provisional[i] == 0) continue;
    const std::uint32_t root = sets.find(provisional[i]);
    if (final_id[root] == 0) final_id[root] = static_cast<std::uint32_t>(++result.count);
    result.labels[i] = final_id[root];
  }
  return result;
}

std::int64_t count_holes(const BinaryMask& mask, Connectivity connectivity) {
  const LabelMap labels = label_components(mask, ComponentTarget::Background, connectivity);
  std::vector<std::uint8_t> touches_border(labels.count + 1, 0);
  const std::size_t w = labels.width, h = labels.height;
  for (std::size_t x = 0; x < w; ++x) {
    touches_border[labels.at(x, 0)] = 1;
    touches_border[labels.at(x, h - 1)] = 1;
  }
  for (std::size_t y = 0; y < h; ++y) {
    touches_border[labels.at(0, y)] = 1;
    touches_border[labels.at(w - 1, y)] = 1;
  }
  std::int64_t holes = 0;
  for (std::size_t id = 1; id <= labels.count; ++id) holes += touches_border[id] ? 0 : 1;
  return holes;
}

FeatureVector extract_features(const BinaryMask& mask, Connectivity connectivity) {
  const std::int64_t foreground = foreground_count(mask);
  return FeatureVector{foreground, static_cast<std::int64_t>(mask.size()) - foreground, count_holes(mask, connectivity)};
}

namespace {

template <typename Getter>
Summary summarize(std::span<const FeatureVector> vectors, Getter get) {
  Summary s;
  s.min = s.max = static_cast<double>(get(vectors.front()));
  double sum = 0.0;
  for (const auto& v : vectors) {
    const auto x = static_cast<double>(get(v));
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  const auto n = static_cast<double>(vectors.size());
  s.mean = sum / n;
  double squares = 0.0;
  for (const auto& v : vectors) {
    const double d = static_cast<double>(get(v)) - s.mean;
    squares += d * d;
  }
  s.std = std::sqrt(squares / n);
  return s;
}

}  // namespace

FeatureStatistics feature_statistics(std::span<const FeatureVector> vectors) {
  if (vectors.empty()) throw Error(ErrorCode::EmptyInput, "feature_statistics needs at least one vector");
  return FeatureStatistics{
      summarize(vectors, [](const FeatureVector& v) { return v.foreground; }),
      summarize(vectors, [](const FeatureVector& v) { return v.background; }),
      summarize(vectors, [](const FeatureVector& v) { return v.holes; }),
  };
}

}  // namespace emfe
