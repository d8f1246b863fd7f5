#include "emfe/imaging.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "emfe/error.hpp"

namespace emfe {

RgbImage::RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {
  if (w == 0 || h == 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
}

RgbImage::RgbImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> data)
    : width(w), height(h), pixels(std::move(data)) {
  if (w == 0 || h == 0) throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  if (pixels.size() != w * h * 3) throw Error(ErrorCode::InvalidArgument, "pixel buffer length must be width*height*3");
}

GrayImage::GrayImage(std::size_t w, std::size_t h, double fill) : width(w), height(h), intensities(w * h, fill) {}

BinaryMask::BinaryMask(std::size_t w, std::size_t h, bool fill) : width(w), height(h), bits(w * h, fill ? 1 : 0) {}

std::string_view to_string(PolarityMode mode) {
  switch (mode) {
    case PolarityMode::Paper: return "paper";
    case PolarityMode::Auto: return "auto";
    case PolarityMode::Light: return "light";
  }
  return "paper";
}

PolarityMode parse_polarity(std::string_view text) {
  if (text == "paper") return PolarityMode::Paper;
  if (text == "auto") return PolarityMode::Auto;
  if (text == "light") return PolarityMode::Light;
  throw Error(ErrorCode::InvalidArgument, "unknown polarity mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// PNG

namespace {

struct PngContext {
  const std::uint8_t* data = nullptr;
  std::size_t size = 0;
  std::size_t offset = 0;
  char message[256] = {};
};

void png_read_memory(png_structp png, png_bytep out, png_size_t count) {
  auto* ctx = static_cast<PngContext*>(png_get_io_ptr(png));
  if (ctx->offset + count > ctx->size) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, ctx->data + ctx->offset, count);
  ctx->offset += count;
}

void png_on_error(png_structp png, png_const_charp message) {
  auto* ctx = static_cast<PngContext*>(png_get_error_ptr(png));
  std::snprintf(ctx->message, sizeof(ctx->message), "%s", message);
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

// All state that outlives a longjmp lives in the caller's frame.
bool decode_into(PngContext* ctx, RgbImage* out, std::vector<png_bytep>* rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, ctx, png_on_error, png_on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }

  png_set_read_fn(png, ctx, png_read_memory);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  const auto width = static_cast<std::size_t>(png_get_image_width(png, info));
  const auto height = static_cast<std::size_t>(png_get_image_height(png, info));
  if (png_get_rowbytes(png, info) != width * 3) png_error(png, "unsupported PNG pixel layout");

  out->width = width;
  out->height = height;
  out->pixels.assign(width * height * 3, 0);
  rows->resize(height);
  for (std::size_t y = 0; y < height; ++y) (*rows)[y] = out->pixels.data() + y * width * 3;
  png_read_image(png, rows->data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct PngWriteState {
  std::vector<std::uint8_t>* buffer = nullptr;
  char message[256] = {};
};

void png_write_memory(png_structp png, png_bytep data, png_size_t count) {
  auto* state = static_cast<PngWriteState*>(png_get_io_ptr(png));
  state->buffer->insert(state->buffer->end(), data, data + count);
}

void png_flush_noop(png_structp) {}

void png_on_write_error(png_structp png, png_const_charp message) {
  auto* state = static_cast<PngWriteState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", message);
  png_longjmp(png, 1);
}

bool encode_into(PngWriteState* state, const RgbImage* image, std::vector<png_bytep>* rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, state, png_on_write_error, png_on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, state, png_write_memory, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image->width), static_cast<png_uint_32>(image->height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  rows->resize(image->height);
  for (std::size_t y = 0; y < image->height; ++y) {
    (*rows)[y] = const_cast<png_bytep>(image->pixels.data() + y * image->width * 3);
  }
  png_write_image(png, rows->data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw Error(ErrorCode::DecodeError, "not a PNG stream");
  }
  PngContext ctx;
  ctx.data = bytes.data();
  ctx.size = bytes.size();
  RgbImage image;
  std::vector<png_bytep> rows;
  if (!decode_into(&ctx, &image, &rows)) {
    throw Error(ErrorCode::DecodeError, ctx.message[0] != '\0' ? ctx.message : "libpng initialisation failed");
  }
  if (image.width == 0 || image.height == 0) throw Error(ErrorCode::DecodeError, "empty image");
  return image;
}

RgbImage load_rgb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  try {
    return decode_png(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_png(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> buffer;
  PngWriteState state;
  state.buffer = &buffer;
  std::vector<png_bytep> rows;
  if (!encode_into(&state, &image, &rows)) throw Error(ErrorCode::IoError, std::string("PNG encode failed: ") + state.message);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

// ---------------------------------------------------------------------------
// Resize

namespace {

// Mirror boundary without edge repetition: d c b | a b c d | c b a
std::ptrdiff_t mirror_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  if (n == 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::ptrdiff_t>(4.0 * sigma + 0.5);
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * static_cast<double>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;
  return kernel;
}

// Planar float image, channel-major.
struct Planes {
  std::size_t width, height;
  std::vector<double> values;  // [channel][y][x]
  double& at(std::size_t c, std::size_t x, std::size_t y) { return values[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t x, std::size_t y) const { return values[(c * height + y) * width + x]; }
};

void blur_axis(Planes& planes, double sigma, bool horizontal) {
  if (sigma <= 0.0) return;
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto n = static_cast<std::ptrdiff_t>(horizontal ? planes.width : planes.height);
  const std::size_t lines = horizontal ? planes.height : planes.width;
  std::vector<double> line(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t l = 0; l < lines; ++l) {
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        line[static_cast<std::size_t>(i)] = horizontal ? planes.at(c, static_cast<std::size_t>(i), l)
                                                       : planes.at(c, l, static_cast<std::size_t>(i));
      }
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(mirror_index(i + k, n))];
        }
        (horizontal ? planes.at(c, static_cast<std::size_t>(i), l) : planes.at(c, l, static_cast<std::size_t>(i))) = acc;
      }
    }
  }
}

struct Tap {
  std::size_t lo, hi;
  double frac;
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t out) {
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  std::vector<Tap> taps(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double pos = (static_cast<double>(o) + 0.5) * scale - 0.5;
    const double base = std::floor(pos);
    const auto i0 = static_cast<std::ptrdiff_t>(base);
    taps[o] = Tap{static_cast<std::size_t>(mirror_index(i0, static_cast<std::ptrdiff_t>(in))),
                  static_cast<std::size_t>(mirror_index(i0 + 1, static_cast<std::ptrdiff_t>(in))), pos - base};
  }
  return taps;
}

}  // namespace

RgbImage resize_antialiased(const RgbImage& image, std::size_t out_width, std::size_t out_height) {
  if (image.width == 0 || image.height == 0 || image.pixels.size() != image.width * image.height * 3) {
    throw Error(ErrorCode::InvalidArgument, "invalid RGB image");
  }
  Planes planes{image.width, image.height, std::vector<double>(image.width * image.height * 3)};
  for (std::size_t y = 0; y < image.height; ++y)
    for (std::size_t x = 0; x < image.width; ++x)
      for (std::size_t c = 0; c < 3; ++c) planes.at(c, x, y) = image.at(x, y, c);

  const double scale_x = static_cast<double>(image.width) / static_cast<double>(out_width);
  const double scale_y = static_cast<double>(image.height) / static_cast<double>(out_height);
  blur_axis(planes, std::max(0.0, (scale_x - 1.0) / 2.0), true);
  blur_axis(planes, std::max(0.0, (scale_y - 1.0) / 2.0), false);

  const auto tx = bilinear_taps(image.width, out_width);
  const auto ty = bilinear_taps(image.height, out_height);
  RgbImage out(out_width, out_height);
  for (std::size_t y = 0; y < out_height; ++y) {
    const Tap& ry = ty[y];
    for (std::size_t x = 0; x < out_width; ++x) {
      const Tap& rx = tx[x];
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = planes.at(c, rx.lo, ry.lo) * (1.0 - rx.frac) + planes.at(c, rx.hi, ry.lo) * rx.frac;
        const double bottom = planes.at(c, rx.lo, ry.hi) * (1.0 - rx.frac) + planes.at(c, rx.hi, ry.hi) * rx.frac;
        const double value = std::clamp(top * (1.0 - ry.frac) + bottom * ry.frac, 0.0, 255.0);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::lround(value));
      }
    }
  }
  return out;
}

GrayImage to_gray(const RgbImage& image) {
  GrayImage gray(image.width, image.height);
  for (std::size_t i = 0; i < image.width * image.height; ++i) {
    const double luma = 0.2125 * image.pixels[3 * i] + 0.7154 * image.pixels[3 * i + 1] + 0.0721 * image.pixels[3 * i + 2];
    gray.intensities[i] = std::clamp(luma / 255.0, 0.0, 1.0);
  }
  return gray;
}

// ---------------------------------------------------------------------------
// Otsu

namespace {
__extension__ typedef __int128 i128;
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::size_t otsu_cut(std::span<const std::uint64_t> histogram) {
  std::uint64_t total = 0;
  std::uint64_t weighted = 0;
  for (std::size_t i = 0; i < histogram.size(); ++i) {
    total += histogram[i];
    weighted += histogram[i] * i;
  }

  // Between-class variance in bin units, up to the constant 1/N^2:
  //   (s0*N - S*c0)^2 / (c0*c1)
  // Compared as exact fractions while the products fit in 128 bits.
  const bool exact = total <= (std::uint64_t{1} << 18) && histogram.size() <= 256;
  bool found = false;
  std::size_t best = 0;
  u128 best_num = 0, best_den = 1;
  long double best_score = -1.0L;

  std::uint64_t c0 = 0, s0 = 0;
  for (std::size_t cut = 0; cut + 1 < histogram.size(); ++cut) {
    c0 += histogram[cut];
    s0 += histogram[cut] * cut;
    const std::uint64_t c1 = total - c0;
    if (c0 == 0 || c1 == 0) continue;
    const auto lhs = static_cast<i128>(s0) * static_cast<i128>(total);
    const auto rhs = static_cast<i128>(weighted) * static_cast<i128>(c0);
    const auto diff = static_cast<u128>(lhs >= rhs ? lhs - rhs : rhs - lhs);
    if (exact) {
      const u128 num = diff * diff;
      const u128 den = static_cast<u128>(c0) * c1;
      if (!found || num * best_den > best_num * den) {
        best_num = num;
        best_den = den;
        best = cut;
        found = true;
      }
    } else {
      const long double d = static_cast<long double>(diff);
      const long double score = d * d / (static_cast<long double>(c0) * static_cast<long double>(c1));
      if (!found || score > best_score) {
        best_score = score;
        best = cut;
        found = true;
      }
    }
  }
  if (!found) throw Error(ErrorCode::DegenerateImage, "histogram has a single populated bin");
  return best;
}

std::vector<std::uint64_t> intensity_histogram(const GrayImage& image, double& lo, double& hi) {
  if (image.intensities.empty()) throw Error(ErrorCode::DegenerateImage, "empty image");
  const auto [min_it, max_it] = std::minmax_element(image.intensities.begin(), image.intensities.end());
  lo = *min_it;
  hi = *max_it;
  if (!(hi > lo)) throw Error(ErrorCode::DegenerateImage, "image has constant intensity");
  std::vector<std::uint64_t> histogram(kOtsuBins, 0);
  const double norm = static_cast<double>(kOtsuBins) / (hi - lo);
  for (const double v : image.intensities) {
    const auto bin = static_cast<std::size_t>((v - lo) * norm);
    ++histogram[std::min(bin, kOtsuBins - 1)];
  }
  return histogram;
}

double otsu_threshold(const GrayImage& image) {
  double lo = 0.0, hi = 0.0;
  const auto histogram = intensity_histogram(image, lo, hi);
  const std::size_t cut = otsu_cut(histogram);
  return lo + (static_cast<double>(cut) + 0.5) * (hi - lo) / static_cast<double>(kOtsuBins);
}

BinaryMask binarize(const GrayImage& image, double threshold, PolarityMode mode) {
  BinaryMask above(image.width, image.height);
  for (std::size_t i = 0; i < image.intensities.size(); ++i) above.bits[i] = image.intensities[i] > threshold ? 1 : 0;

  bool foreground_is_above = mode == PolarityMode::Light;
  if (mode == PolarityMode::Auto) {
    std::size_t border = 0, border_above = 0;
    for (std::size_t y = 0; y < image.height; ++y) {
      for (std::size_t x = 0; x < image.width; ++x) {
        if (y != 0 && y + 1 != image.height && x != 0 && x + 1 != image.width) continue;
        ++border;
        border_above += above.at(x, y) ? 1 : 0;
      }
    }
    // strict minority; an even split falls back to the literal polarity
    foreground_is_above = 2 * border_above < border;
  }
  if (!foreground_is_above) {
    for (auto& bit : above.bits) bit ^= 1;
  }
  return above;
}

Preprocessed preprocess(const RgbImage& image, PolarityMode mode) {
  Preprocessed result;
  result.gray = to_gray(resize_antialiased(image));
  result.threshold = otsu_threshold(result.gray);
  result.mask = binarize(result.gray, result.threshold, mode);
  return result;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (const double v : image.intensities) {
    out.put(static_cast<char>(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0))));
  }
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

void write_pbm(const std::filesystem::path& path, const BinaryMask& mask) {
  std::ofstream out(path, std::ios::binary);
  out << "P4\n" << mask.width << ' ' << mask.height << '\n';
  const std::size_t row_bytes = (mask.width + 7) / 8;
  std::vector<char> row(row_bytes);
  for (std::size_t y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (std::size_t x = 0; x < mask.width; ++x) {
      if (mask.at(x, y)) row[x / 8] = static_cast<char>(row[x / 8] | (0x80 >> (x % 8)));
    }
    out.write(row.data(), static_cast<std::streamsize>(row_bytes));
  }
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace emfe
