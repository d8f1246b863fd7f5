#pragma once

// Generators shared by the unit, CLI and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "emfe/dataset.hpp"
#include "emfe/imaging.hpp"
#include "emfe/label.hpp"
#include "emfe/matrix.hpp"
#include "emfe/rng.hpp"

namespace emfe::testing {

inline BinaryMask random_mask(std::size_t w, std::size_t h, double density, Rng& rng) {
  BinaryMask mask(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) mask.set(x, y, rng.uniform() < density);
  }
  return mask;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

/// Stained-cell look-alike: a dark disc on a light field. Parasitized cells
/// are a little larger and carry a few light inclusions, which become holes
/// in the mask.
inline RgbImage synthetic_cell(Label label, Rng& rng) {
  const auto w = static_cast<std::size_t>(110 + rng.index(41));
  const auto h = static_cast<std::size_t>(110 + rng.index(41));
  const double cx = 0.5 * static_cast<double>(w) + uniform(rng, -4, 4);
  const double cy = 0.5 * static_cast<double>(h) + uniform(rng, -4, 4);
  const double side = static_cast<double>(std::min(w, h));
  const double radius = side * (label == Label::Parasitized ? uniform(rng, 0.36, 0.44) : uniform(rng, 0.30, 0.38));

  struct Spot {
    double x, y, r;
  };
  std::vector<Spot> spots;
  if (label == Label::Parasitized) {
    const std::size_t n = 1 + rng.index(3);
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = uniform(rng, 0, 6.283185307179586);
      const double dist = radius * (0.15 + 0.45 * static_cast<double>(i) / 3.0);
      spots.push_back({cx + dist * std::cos(angle + 2.1 * static_cast<double>(i)),
                       cy + dist * std::sin(angle + 2.1 * static_cast<double>(i)), uniform(rng, 4.0, 6.5)});
    }
  }

  RgbImage img(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
      bool dark = std::hypot(px - cx, py - cy) <= radius;
      for (const Spot& s : spots) {
        if (std::hypot(px - s.x, py - s.y) <= s.r) dark = false;
      }
      const double noise = uniform(rng, -5, 5);
      const double r = dark ? 170 : 238, g = dark ? 105 : 226, b = dark ? 140 : 230;
      img.at(x, y, 0) = static_cast<std::uint8_t>(std::clamp(r + noise, 0.0, 255.0));
      img.at(x, y, 1) = static_cast<std::uint8_t>(std::clamp(g + noise, 0.0, 255.0));
      img.at(x, y, 2) = static_cast<std::uint8_t>(std::clamp(b + noise, 0.0, 255.0));
    }
  }
  return img;
}

/// Writes `<root>/Parasitized/*.png` and `<root>/Uninfected/*.png`.
inline void write_corpus(const std::filesystem::path& root, std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  for (const Label label : {Label::Parasitized, Label::Uninfected}) {
    const auto dir = root / std::string(class_dir_name(label));
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "cell_%04zu.png", i);
      save_png(dir / name, synthetic_cell(label, rng));
    }
  }
}

/// Two-feature table with a class-dependent shift, roughly like the
/// {foreground, holes} distribution of real cells.
inline FeatureTable synthetic_table(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  FeatureTable table;
  for (const Label label : {Label::Parasitized, Label::Uninfected}) {
    for (std::size_t i = 0; i < per_class; ++i) {
      Sample s;
      s.label = label;
      s.path = std::string(class_dir_name(label)) + "/s" + std::to_string(i) + ".png";
      const bool pos = label == Label::Parasitized;
      s.features.foreground = static_cast<std::int64_t>(uniform(rng, pos ? 6500 : 5200, pos ? 9800 : 8200));
      s.features.background = static_cast<std::int64_t>(kMaskPixels) - s.features.foreground;
      s.features.holes = static_cast<std::int64_t>(rng.index(pos ? 5 : 2)) + (pos && rng.uniform() < 0.7 ? 1 : 0);
      table.samples.push_back(s);
    }
  }
  return table;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -3.0, double hi = 3.0) {
  Matrix X(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) X(r, c) = uniform(rng, lo, hi);
  }
  return X;
}

/// Labels from a noisy linear rule so every learner has signal to find.
inline std::vector<Label> noisy_linear_labels(const Matrix& X, Rng& rng, double noise = 0.5) {
  std::vector<Label> y(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double score = 0.0;
    for (std::size_t c = 0; c < X.cols(); ++c) score += (c % 2 == 0 ? 1.0 : 0.5) * X(r, c);
    y[r] = score + noise * uniform(rng, -1, 1) > 0 ? Label::Parasitized : Label::Uninfected;
  }
  return y;
}

}  // namespace emfe::testing
