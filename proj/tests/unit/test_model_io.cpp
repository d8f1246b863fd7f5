#include "doctest.h"

#include <zlib.h>

#include <filesystem>
#include <fstream>

#include "emfe/model_io.hpp"
#include "../support/expect_error.hpp"
#include "../support/synthetic.hpp"

using namespace emfe;
using emfe::testing::code_of;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  Matrix X;
  std::vector<Label> y;
};

Fixture fixture(std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Fixture f{testing::random_matrix(160, cols, rng), {}};
  f.y = testing::noisy_linear_labels(f.X, rng, 1.5);
  return f;
}

std::vector<Model> one_of_each(const Fixture& f) {
  ForestParams forest;
  forest.n_estimators = 12;
  forest.max_depth = 6;
  KnnParams knn;
  knn.n_neighbors = 7;
  knn.metric = parse_metric("minkowski3");
  SvmParams svm;
  svm.C = 2.0;
  svm.gamma = 0.7;
  EnsembleParams ensemble;
  ensemble.stage1.penalty = Penalty::ElasticNet;
  ensemble.stage2.n_estimators = 9;
  ensemble.stage2.criterion = Criterion::Entropy;
  return {
      train(LogRegParams{Penalty::L1, 0.3, 5000, 1e-6}, f.X, f.y, 1),
      train(forest, f.X, f.y, 2),
      train(knn, f.X, f.y, 3),
      train(svm, f.X, f.y, 4),
      train(ensemble, f.X, f.y, 5),
  };
}

void reseal(std::vector<std::uint8_t>& bytes) {
  const std::size_t body = bytes.size() - 4;
  const auto crc = static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(body)));
  for (int i = 0; i < 4; ++i) bytes[body + i] = static_cast<std::uint8_t>(crc >> (8 * i));
}

}  // namespace

TEST_CASE("every model kind survives a byte round trip with identical predictions") {
  for (const std::size_t cols : {2u, 3u}) {
    const auto f = fixture(cols, 10 + cols);
    Rng rng(cols);
    for (const Model& model : one_of_each(f)) {
      CAPTURE(to_string(kind_of(model)));
      const auto bytes = serialize_model(model);
      const Model back = deserialize_model(bytes);
      CHECK(back == model);
      CHECK(serialize_model(back) == bytes);
      for (int i = 0; i < 1000; ++i) {
        std::vector<double> x(cols);
        for (auto& v : x) v = testing::uniform(rng, -4, 4);
        CHECK(predict(back, x) == predict(model, x));
        CHECK(predict_proba(back, x) == predict_proba(model, x));
      }
    }
  }
}

TEST_CASE("a logistic model file stays tiny") {
  const auto f = fixture(3, 1);
  const Model model = train(LogRegParams{}, f.X, f.y);
  CHECK(serialize_model(model).size() <= 2048);
}

TEST_CASE("files on disk round trip and report IO failures") {
  const auto dir = fs::temp_directory_path() / "emfe_model_io";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto f = fixture(2, 3);
  const Model model = train(ForestParams{}, f.X, f.y, 11);
  save_model(dir / "rf.emfe", model);
  CHECK(load_model(dir / "rf.emfe") == model);
  CHECK(code_of([&] { load_model(dir / "missing.emfe"); }) == ErrorCode::IoError);
  CHECK(code_of([&] { save_model(dir / "no" / "such" / "dir.emfe", model); }) == ErrorCode::IoError);
}

TEST_CASE("damaged bytes are rejected") {
  const auto f = fixture(3, 4);
  for (const Model& model : one_of_each(f)) {
    CAPTURE(to_string(kind_of(model)));
    const auto bytes = serialize_model(model);

    for (std::size_t len = 0; len < bytes.size(); len += 1 + len / 8) {
      const std::span<const std::uint8_t> cut(bytes.data(), len);
      CHECK(code_of([&] { deserialize_model(cut); }) == ErrorCode::CorruptModel);
    }

    Rng rng(bytes.size());
    for (int trial = 0; trial < 64; ++trial) {
      auto flipped = bytes;
      const auto at = static_cast<std::size_t>(6 + rng.index(flipped.size() - 6));
      flipped[at] ^= static_cast<std::uint8_t>(1u << rng.index(8));
      CHECK(code_of([&] { deserialize_model(flipped); }) == ErrorCode::CorruptModel);
    }

    auto magic = bytes;
    magic[0] = 'X';
    CHECK(code_of([&] { deserialize_model(magic); }) == ErrorCode::CorruptModel);

    auto version = bytes;
    version[4] = static_cast<std::uint8_t>(kModelFormatVersion + 1);
    CHECK(code_of([&] { deserialize_model(version); }) == ErrorCode::VersionMismatch);
    reseal(version);
    CHECK(code_of([&] { deserialize_model(version); }) == ErrorCode::VersionMismatch);

    // Checksums that match but describe an invalid structure.
    auto kind = bytes;
    kind[6] = 9;
    reseal(kind);
    CHECK(code_of([&] { deserialize_model(kind); }) == ErrorCode::CorruptModel);

    auto trailing = bytes;
    trailing.insert(trailing.end() - 4, std::uint8_t{0});
    reseal(trailing);
    CHECK(code_of([&] { deserialize_model(trailing); }) == ErrorCode::CorruptModel);
  }
}

TEST_CASE("sidecar lists features, coefficients and hyperparameters") {
  const auto f = fixture(2, 6);
  const Model model = train(LogRegParams{Penalty::L2, 2.0, 5000, 1e-6}, f.X, f.y);
  const auto& lr = std::get<LogisticRegressionModel>(model);
  const auto j = model_sidecar(model, {"foreground", "holes"});
  CHECK(j["model_kind"] == "logreg");
  CHECK(j["features"] == nlohmann::json::array({"foreground", "holes"}));
  CHECK(j["weights"].size() == 2);
  CHECK(j["weights"][0].get<double>() == lr.weights[0]);
  CHECK(j["bias"].get<double>() == lr.bias);
  CHECK(j["standardizer"]["means"].size() == 2);
  CHECK(j["standardizer"]["stds"].size() == 2);
  CHECK(j["hyperparameters"]["C"].get<double>() == 2.0);
  CHECK(j["hyperparameters"]["penalty"] == "l2");

  const Model forest = train(ForestParams{}, f.X, f.y);
  const auto jf = model_sidecar(forest, {"foreground", "holes"});
  CHECK(jf["model_kind"] == "rf");
  CHECK(jf["weights"].is_null());
  CHECK(jf["hyperparameters"]["n_estimators"] == 100);
}
