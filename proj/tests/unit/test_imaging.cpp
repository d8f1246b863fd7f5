#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "emfe/imaging.hpp"
#include "emfe/rng.hpp"
#include "../support/oracles.hpp"
#include "../support/synthetic.hpp"

using namespace emfe;
using emfe::testing::otsu_oracle;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("emfe_imaging_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("otsu cut matches the between-class variance oracle on random histograms") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint64_t> h(kOtsuBins, 0);
    const double sparsity = testing::uniform(rng, 0.0, 0.9);
    const std::uint64_t scale = 1 + rng.index(trial % 2 == 0 ? 8 : 4000);
    for (auto& v : h) v = rng.uniform() < sparsity ? 0 : rng.index(scale + 1);
    h[rng.index(64)] += 1;
    h[192 + rng.index(64)] += 1;
    INFO("trial " << trial);
    CHECK(otsu_cut(h) == otsu_oracle(h));
  }
}

TEST_CASE("otsu cut on two spikes separates them") {
  std::vector<std::uint64_t> h(kOtsuBins, 0);
  h[10] = 500;
  h[200] = 500;
  const std::size_t cut = otsu_cut(h);
  CHECK(cut >= 10);
  CHECK(cut < 200);
  CHECK(cut == 10);  // every cut in [10, 199] ties; the lowest wins
}

TEST_CASE("otsu cut rejects a single populated bin") {
  std::vector<std::uint64_t> h(kOtsuBins, 0);
  h[42] = 99;
  CHECK_THROWS_AS(otsu_cut(h), Error);
}

TEST_CASE("otsu threshold is a bin centre between two intensity levels") {
  GrayImage g(16, 16, 0.2);
  for (std::size_t i = 0; i < 128; ++i) g.intensities[i] = 0.8;
  const double t = otsu_threshold(g);
  CHECK(t > 0.2);
  CHECK(t < 0.8);
  const double step = 0.6 / 256.0;
  const double bins = (t - 0.2) / step - 0.5;
  CHECK(bins == doctest::Approx(std::round(bins)).epsilon(1e-9));
}

TEST_CASE("constant image is degenerate") {
  GrayImage g(8, 8, 0.5);
  try {
    otsu_threshold(g);
    FAIL("expected DegenerateImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateImage);
  }
  RgbImage flat(20, 20);
  std::fill(flat.pixels.begin(), flat.pixels.end(), 128);
  CHECK_THROWS_AS(preprocess(flat), Error);
}

TEST_CASE("grayscale uses the luma weights") {
  RgbImage img(3, 1);
  img.at(0, 0, 0) = 255;
  img.at(1, 0, 1) = 255;
  img.at(2, 0, 2) = 255;
  const GrayImage g = to_gray(img);
  CHECK(g.at(0, 0) == doctest::Approx(0.2125));
  CHECK(g.at(1, 0) == doctest::Approx(0.7154));
  CHECK(g.at(2, 0) == doctest::Approx(0.0721));
}

TEST_CASE("resize keeps constant images constant and hits the target size") {
  RgbImage img(173, 91);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i % 3 == 0 ? 40 : 200);
  const RgbImage out = resize_antialiased(img);
  CHECK(out.width == kMaskSide);
  CHECK(out.height == kMaskSide);
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      CHECK(out.at(x, y, 0) == 40);
      CHECK(out.at(x, y, 1) == 200);
    }
  }
}

TEST_CASE("resize to the same size is the identity") {
  Rng rng(3);
  RgbImage img(kMaskSide, kMaskSide);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.index(256));
  CHECK(resize_antialiased(img) == img);
}

TEST_CASE("downscaling averages fine checkerboards") {
  RgbImage img(512, 512);
  for (std::size_t y = 0; y < 512; ++y) {
    for (std::size_t x = 0; x < 512; ++x) {
      for (std::size_t c = 0; c < 3; ++c) img.at(x, y, c) = (x + y) % 2 == 0 ? 0 : 255;
    }
  }
  const RgbImage out = resize_antialiased(img);
  for (std::size_t y = 8; y < 120; ++y) {
    for (std::size_t x = 8; x < 120; ++x) {
      CHECK(std::abs(static_cast<int>(out.at(x, y, 0)) - 128) <= 3);
    }
  }
}

TEST_CASE("PNG round trip and decode failures") {
  const auto dir = temp_dir("png");
  Rng rng(11);
  const RgbImage img = testing::synthetic_cell(Label::Parasitized, rng);
  save_png(dir / "a.png", img);
  CHECK(load_rgb(dir / "a.png") == img);

  std::ofstream(dir / "junk.png") << "definitely not a png";
  try {
    load_rgb(dir / "junk.png");
    FAIL("expected DecodeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DecodeError);
  }
  try {
    load_rgb(dir / "missing.png");
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
  const std::vector<std::uint8_t> truncated{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n', 0, 0};
  CHECK_THROWS_AS(decode_png(truncated), Error);
}

TEST_CASE("paper polarity marks the dark cell as foreground") {
  Rng rng(5);
  const RgbImage img = testing::synthetic_cell(Label::Uninfected, rng);
  const Preprocessed paper = preprocess(img, PolarityMode::Paper);
  const Preprocessed light = preprocess(img, PolarityMode::Light);
  const Preprocessed automatic = preprocess(img, PolarityMode::Auto);
  CHECK(paper.mask.size() == kMaskPixels);
  CHECK(paper.mask.at(64, 64));
  CHECK_FALSE(paper.mask.at(0, 0));
  CHECK(automatic.mask == paper.mask);
  for (std::size_t i = 0; i < kMaskPixels; ++i) {
    const bool gray_at_threshold = paper.gray.intensities[i] == paper.threshold;
    if (!gray_at_threshold) CHECK(paper.mask.bits[i] != light.mask.bits[i]);
  }
}

TEST_CASE("binarize follows the polarity rule exactly") {
  GrayImage g(4, 1);
  g.intensities = {0.1, 0.5, 0.50000001, 0.9};
  const BinaryMask paper = binarize(g, 0.5, PolarityMode::Paper);
  CHECK(paper.at(0, 0));
  CHECK(paper.at(1, 0));
  CHECK_FALSE(paper.at(2, 0));
  CHECK_FALSE(paper.at(3, 0));
  const BinaryMask light = binarize(g, 0.5, PolarityMode::Light);
  CHECK_FALSE(light.at(1, 0));
  CHECK(light.at(2, 0));
}

TEST_CASE("polarity names parse") {
  CHECK(parse_polarity("paper") == PolarityMode::Paper);
  CHECK(parse_polarity("auto") == PolarityMode::Auto);
  CHECK(parse_polarity("light") == PolarityMode::Light);
  CHECK_THROWS_AS(parse_polarity("dark"), Error);
}

TEST_CASE("debug dumps have the netpbm headers") {
  const auto dir = temp_dir("pnm");
  GrayImage g(3, 2, 0.5);
  write_pgm(dir / "g.pgm", g);
  BinaryMask m(10, 2);
  m.set(0, 0, true);
  write_pbm(dir / "m.pbm", m);
  std::ifstream pgm(dir / "g.pgm", std::ios::binary);
  std::string magic;
  pgm >> magic;
  CHECK(magic == "P5");
  std::ifstream pbm(dir / "m.pbm", std::ios::binary);
  pbm >> magic;
  CHECK(magic == "P4");
  CHECK(std::filesystem::file_size(dir / "m.pbm") > 4);
}
