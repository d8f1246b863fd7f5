#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace emfe {

inline constexpr std::size_t kMaskSide = 128;
inline constexpr std::size_t kMaskPixels = kMaskSide * kMaskSide;

/// 8-bit RGB image, row-major interleaved triples.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h);
  RgbImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> data);

  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t channel) {
    return pixels[(y * width + x) * 3 + channel];
  }
  std::uint8_t at(std::size_t x, std::size_t y, std::size_t channel) const {
    return pixels[(y * width + x) * 3 + channel];
  }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Single-channel image with intensities in [0, 1].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> intensities;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0);

  double& at(std::size_t x, std::size_t y) { return intensities[y * width + x]; }
  double at(std::size_t x, std::size_t y) const { return intensities[y * width + x]; }
};

/// Boolean mask, true = cell foreground. The pipeline always produces 128x128;
/// other sizes are allowed so the topology code can be exercised on small grids.
struct BinaryMask {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(std::size_t w, std::size_t h, bool fill = false);

  bool at(std::size_t x, std::size_t y) const { return bits[y * width + x] != 0; }
  void set(std::size_t x, std::size_t y, bool value) { bits[y * width + x] = value ? 1 : 0; }
  std::size_t size() const { return bits.size(); }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Which Otsu class becomes the foreground.
///  - Paper: threshold then invert, so foreground = intensity <= threshold.
///  - Light: foreground = intensity > threshold.
///  - Auto:  foreground = the class holding the minority of border pixels.
enum class PolarityMode { Paper, Auto, Light };

std::string_view to_string(PolarityMode mode);
PolarityMode parse_polarity(std::string_view text);

RgbImage decode_png(std::span<const std::uint8_t> bytes);
RgbImage load_rgb(const std::filesystem::path& path);
void save_png(const std::filesystem::path& path, const RgbImage& image);

/// Resamples to out_width x out_height. Downscaled axes get a Gaussian
/// pre-blur, sigma = (scale - 1) / 2 truncated at 4 sigma, mirror boundary;
/// sampling is bilinear on pixel centers. Results are clamped and rounded to 8 bits.
RgbImage resize_antialiased(const RgbImage& image, std::size_t out_width = kMaskSide,
                            std::size_t out_height = kMaskSide);

/// Luma with weights 0.2125 / 0.7154 / 0.0721, scaled to [0, 1].
GrayImage to_gray(const RgbImage& image);

inline constexpr std::size_t kOtsuBins = 256;

/// Index of the last bin of the lower class maximizing the between-class
/// variance of `histogram`; the lowest index wins ties. Cuts leaving either
/// class empty are skipped. Throws DegenerateImage when no valid cut exists.
std::size_t otsu_cut(std::span<const std::uint64_t> histogram);

/// 256-bin histogram over [min, max] of the image intensities.
std::vector<std::uint64_t> intensity_histogram(const GrayImage& image, double& lo, double& hi);

/// Otsu threshold (bin center) over the observed intensity range.
double otsu_threshold(const GrayImage& image);

BinaryMask binarize(const GrayImage& image, double threshold, PolarityMode mode);

struct Preprocessed {
  GrayImage gray;
  double threshold = 0.0;
  BinaryMask mask;
};

/// resize -> gray -> Otsu -> binarize with the requested polarity.
Preprocessed preprocess(const RgbImage& image, PolarityMode mode = PolarityMode::Paper);

/// P5 dump, intensity * 255 rounded.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);
/// P4 dump, foreground written as 1 (black).
void write_pbm(const std::filesystem::path& path, const BinaryMask& mask);

}  // namespace emfe
