#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "emfe/dataset.hpp"
#include "../support/expect_error.hpp"
#include "../support/synthetic.hpp"

using namespace emfe;
using emfe::testing::code_of;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("emfe_dataset_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<Label> random_labels(std::size_t n, double positive_rate, Rng& rng) {
  std::vector<Label> y(n);
  for (auto& l : y) l = rng.uniform() < positive_rate ? Label::Parasitized : Label::Uninfected;
  return y;
}

}  // namespace

TEST_CASE("stratified split partitions every index and keeps class quotas") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng.index(400);
    auto y = random_labels(n, testing::uniform(rng, 0.2, 0.8), rng);
    y[0] = Label::Parasitized;
    y[1] = Label::Uninfected;
    const double f = testing::uniform(rng, 0.05, 0.5);
    const SplitAssignment s = stratified_split(y, f, 42 + trial);

    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), std::size_t{0});
    CHECK(all == expected);
    CHECK(std::is_sorted(s.train.begin(), s.train.end()));
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));

    for (const Label label : {Label::Parasitized, Label::Uninfected}) {
      const auto total = static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
      const auto in_test = static_cast<std::size_t>(
          std::count_if(s.test.begin(), s.test.end(), [&](std::size_t i) { return y[i] == label; }));
      CHECK(in_test == static_cast<std::size_t>(std::floor(static_cast<double>(total) * f)));
    }
  }
}

TEST_CASE("split is reproducible and seed-sensitive") {
  Rng rng(4);
  const auto y = random_labels(500, 0.5, rng);
  const auto a = stratified_split(y, 0.2, 42);
  const auto b = stratified_split(y, 0.2, 42);
  const auto c = stratified_split(y, 0.2, 43);
  CHECK(a.test == b.test);
  CHECK(a.test != c.test);
}

TEST_CASE("split of a single-class table fails") {
  const std::vector<Label> y(10, Label::Parasitized);
  CHECK(code_of([&] { stratified_split(y, 0.2, 1); }) == ErrorCode::SingleClassTable);
  CHECK(code_of([&] { stratified_split(std::vector<Label>{Label::Parasitized, Label::Uninfected}, 1.5, 1); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("k folds partition the training rows with balanced sizes") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + rng.index(300);
    const auto y = random_labels(n, testing::uniform(rng, 0.1, 0.9), rng);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng.uniform() < 0.8) train.push_back(i);
    }
    const std::size_t k = 2 + rng.index(9);
    if (train.size() < k) continue;
    const auto folds = kfold_indices(train, y, k, trial);
    REQUIRE(folds.size() == k);

    std::multiset<std::size_t> seen;
    std::size_t min_size = n, max_size = 0;
    for (const auto& fold : folds) {
      seen.insert(fold.begin(), fold.end());
      min_size = std::min(min_size, fold.size());
      max_size = std::max(max_size, fold.size());
    }
    CHECK(std::multiset<std::size_t>(train.begin(), train.end()) == seen);
    CHECK(max_size - min_size <= 1);

    for (const Label label : {Label::Parasitized, Label::Uninfected}) {
      std::size_t lo = n, hi = 0;
      for (const auto& fold : folds) {
        const auto c = static_cast<std::size_t>(
            std::count_if(fold.begin(), fold.end(), [&](std::size_t i) { return y[i] == label; }));
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      CHECK(hi - lo <= 1);
    }
  }
}

TEST_CASE("k folds reject too few samples") {
  const std::vector<Label> y{Label::Parasitized, Label::Uninfected};
  const std::vector<std::size_t> train{0, 1};
  CHECK(code_of([&] { kfold_indices(train, y, 5, 1); }) == ErrorCode::TooFewSamples);
}

TEST_CASE("foreground and background correlate at exactly -1") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const FeatureTable table = testing::synthetic_table(50 + seed * 7, seed);
    const CorrelationMatrix r = pearson_correlation_matrix(table);
    CHECK(std::abs(r[0][1] + 1.0) <= 1e-12);
    CHECK(r[0][0] == doctest::Approx(1.0));
    CHECK(r[1][0] == r[0][1]);
    CHECK(r[0][3] > 0.0);  // larger cells lean Parasitized in the generator
  }
}

TEST_CASE("correlation rejects constant columns") {
  FeatureTable table = testing::synthetic_table(20, 1);
  for (auto& s : table.samples) s.features.holes = 0;
  CHECK(code_of([&] { pearson_correlation_matrix(table); }) == ErrorCode::ConstantColumn);
}

TEST_CASE("correlation outputs list every column") {
  const CorrelationMatrix r = pearson_correlation_matrix(testing::synthetic_table(30, 2));
  const std::string csv = correlation_csv(r);
  CHECK(csv.rfind("feature,foreground,background,holes,label\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
  CHECK(correlation_text(r).find("holes") != std::string::npos);
}

TEST_CASE("design matrices select the requested columns") {
  const FeatureTable table = testing::synthetic_table(5, 3);
  const Matrix two = design_matrix(table, FeatureSet::Two);
  const Matrix three = design_matrix(table, FeatureSet::Three);
  CHECK(two.cols() == 2);
  CHECK(three.cols() == 3);
  CHECK(two(3, 0) == static_cast<double>(table.samples[3].features.foreground));
  CHECK(two(3, 1) == static_cast<double>(table.samples[3].features.holes));
  CHECK(three(3, 1) == static_cast<double>(table.samples[3].features.background));
  CHECK(select_final_features(table) == two);
  const std::vector<std::size_t> rows{4, 0};
  const Matrix picked = design_matrix(table, rows, FeatureSet::Two);
  CHECK(picked(0, 0) == two(4, 0));
  CHECK(picked(1, 1) == two(0, 1));
  CHECK(feature_names(FeatureSet::Two) == std::vector<std::string>{"foreground", "holes"});
  CHECK(parse_feature_set("three") == FeatureSet::Three);
  CHECK_THROWS_AS(parse_feature_set("four"), Error);
}

TEST_CASE("CSV round trip, quoting and metadata sidecar") {
  const auto dir = temp_dir("csv");
  FeatureTable table = testing::synthetic_table(4, 9);
  table.samples[0].path = "Parasitized/odd, \"name\".png";
  table.metadata = {7, PolarityMode::Auto, Connectivity::Four, "2020-01-01T00:00:00Z"};
  save_table(dir / "t.csv", table);
  const FeatureTable back = load_table(dir / "t.csv");
  CHECK(back == table);
  CHECK(fs::exists(dir / "t.csv.meta.json"));

  std::ifstream in(dir / "t.csv", std::ios::binary);
  std::string header;
  std::getline(in, header);
  CHECK(header == "path,label,foreground,background,holes");
}

TEST_CASE("CSV schema errors") {
  CHECK(code_of([] { table_from_csv(""); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { table_from_csv("path,label,foreground,holes\na,1,2,3\n"); }) == ErrorCode::SchemaError);
  CHECK(code_of([] { table_from_csv("path,label,foreground,background,holes\na,2,1,1,1\n"); }) ==
        ErrorCode::SchemaError);
  CHECK(code_of([] { table_from_csv("path,label,foreground,background,holes\na,1,x,1,1\n"); }) ==
        ErrorCode::SchemaError);
  CHECK(code_of([] { table_from_csv("path,label,foreground,background,holes\na,1,1,1\n"); }) ==
        ErrorCode::SchemaError);
  CHECK(code_of([] { load_table("/nonexistent/dir/t.csv"); }) == ErrorCode::IoError);
  // column order is free, CRLF is tolerated
  const FeatureTable t = table_from_csv("label,holes,path,background,foreground\r\n1,2,p.png,100,16284\r\n");
  REQUIRE(t.size() == 1);
  CHECK(t.samples[0].features.foreground == 16284);
  CHECK(t.samples[0].features.holes == 2);
}

TEST_CASE("ingest walks both class directories in name order") {
  const auto root = temp_dir("ingest");
  testing::write_corpus(root, 3, 5);
  IngestOptions opts;
  opts.threads = 3;
  opts.debug = root / "debug";
  const IngestResult r = ingest(root, opts);
  REQUIRE(r.table.size() == 6);
  CHECK(r.failures.empty());
  CHECK(r.table.samples[0].path == "Parasitized/cell_0000.png");
  CHECK(r.table.samples[3].path == "Uninfected/cell_0000.png");
  CHECK(r.table.samples[0].label == Label::Parasitized);
  for (const auto& s : r.table.samples) {
    CHECK(s.features.foreground + s.features.background == static_cast<std::int64_t>(kMaskPixels));
  }
  CHECK(fs::exists(root / "debug" / "Parasitized_cell_0000.pbm"));

  // same result single-threaded
  opts.threads = 1;
  opts.debug.reset();
  CHECK(ingest(root, opts).table.samples == r.table.samples);
}

TEST_CASE("synthetic parasitized cells show holes, uninfected ones do not") {
  const auto root = temp_dir("holes");
  testing::write_corpus(root, 6, 8);
  const IngestResult r = ingest(root);
  for (const auto& s : r.table.samples) {
    if (s.label == Label::Parasitized) {
      CHECK(s.features.holes >= 1);
    } else {
      CHECK(s.features.holes == 0);
    }
  }
}

TEST_CASE("ingest collects per-file failures") {
  const auto root = temp_dir("fail");
  testing::write_corpus(root, 2, 1);
  std::ofstream(root / "Uninfected" / "broken.png") << "xx";
  const IngestResult r = ingest(root);
  CHECK(r.table.size() == 4);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].path == "Uninfected/broken.png");
}

TEST_CASE("ingest errors") {
  const auto root = temp_dir("missing");
  fs::create_directories(root / "Parasitized");
  CHECK(code_of([&] { ingest(root); }) == ErrorCode::MissingClassDir);
  fs::create_directories(root / "Uninfected");
  std::ofstream(root / "Uninfected" / "bad.png") << "xx";
  CHECK(code_of([&] { ingest(root); }) == ErrorCode::AllFilesFailed);
}

TEST_CASE("subsample keeps class proportions and is seeded") {
  std::vector<DatasetFile> files;
  for (int i = 0; i < 300; ++i) files.push_back({"Parasitized/" + std::to_string(1000 + i), Label::Parasitized});
  for (int i = 0; i < 100; ++i) files.push_back({"Uninfected/" + std::to_string(1000 + i), Label::Uninfected});
  const auto a = stratified_subsample(files, 40, 42);
  const auto b = stratified_subsample(files, 40, 42);
  CHECK(a.size() == 40);
  CHECK(std::count_if(a.begin(), a.end(), [](const auto& f) { return f.label == Label::Parasitized; }) == 30);
  CHECK(std::equal(a.begin(), a.end(), b.begin(),
                   [](const auto& x, const auto& y) { return x.relative_path == y.relative_path; }));
  CHECK(stratified_subsample(files, 1000, 1).size() == 400);
}
