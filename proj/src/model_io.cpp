#include "emfe/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace emfe {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'M', 'F', 'E'};
constexpr std::uint8_t kLeafTag = 0xFF;

class Writer {
public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u16(std::uint16_t v) { little_endian(v, 2); }
  void u32(std::uint32_t v) { little_endian(v, 4); }
  void u64(std::uint64_t v) { little_endian(v, 8); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void varint(std::uint64_t v) {
    while (v >= 0x80) {
      u8(static_cast<std::uint8_t>(v | 0x80));
      v >>= 7;
    }
    u8(static_cast<std::uint8_t>(v));
  }
  void raw(std::span<const std::uint8_t> data) { bytes_.insert(bytes_.end(), data.begin(), data.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
  void little_endian(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(little_endian(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(little_endian(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(little_endian(4)); }
  std::uint64_t u64() { return little_endian(8); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      const std::uint8_t b = u8();
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if ((b & 0x80) == 0) return v;
    }
    throw Error(ErrorCode::CorruptModel, "varint too long");
  }
  /// Guards element counts read from the file against the bytes left.
  std::size_t count(std::uint64_t n, std::size_t min_element_bytes) {
    if (min_element_bytes > 0 && n > remaining() / min_element_bytes) {
      throw Error(ErrorCode::CorruptModel, "element count exceeds payload");
    }
    return static_cast<std::size_t>(n);
  }
  std::size_t remaining() const { return bytes_.size() - offset_; }

private:
  std::uint64_t little_endian(int width) {
    if (remaining() < static_cast<std::size_t>(width)) throw Error(ErrorCode::CorruptModel, "truncated model payload");
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_ + i]) << (8 * i);
    offset_ += static_cast<std::size_t>(width);
    return v;
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

std::uint32_t checksum(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

Label read_label(Reader& r) {
  const std::uint8_t v = r.u8();
  if (v > 1) throw Error(ErrorCode::CorruptModel, "invalid label byte");
  return static_cast<Label>(v);
}

template <typename E>
E read_enum(Reader& r, std::uint8_t max_value) {
  const std::uint8_t v = r.u8();
  if (v > max_value) throw Error(ErrorCode::CorruptModel, "invalid enum byte");
  return static_cast<E>(v);
}

// --- logistic regression -----------------------------------------------------

void write_logreg(Writer& w, const LogisticRegressionModel& m) {
  w.u8(static_cast<std::uint8_t>(m.params.penalty));
  w.f64(m.params.C);
  w.u32(m.params.max_iter);
  w.f64(m.params.tol);
  w.u32(m.iterations);
  for (const double v : m.weights) w.f64(v);
  w.f64(m.bias);
}

LogisticRegressionModel read_logreg(Reader& r, std::size_t features, Standardizer standardizer) {
  LogisticRegressionModel m;
  m.params.penalty = read_enum<Penalty>(r, 3);
  m.params.C = r.f64();
  m.params.max_iter = r.u32();
  m.params.tol = r.f64();
  m.iterations = r.u32();
  m.weights.resize(features);
  for (double& v : m.weights) v = r.f64();
  m.bias = r.f64();
  m.standardizer = std::move(standardizer);
  return m;
}

// --- random forest -----------------------------------------------------------

void write_forest(Writer& w, const RandomForestModel& m) {
  const ForestParams& p = m.params;
  w.u32(p.n_estimators);
  w.u8(p.max_depth ? 1 : 0);
  w.u32(p.max_depth.value_or(0));
  w.u32(p.min_samples_split);
  w.u32(p.min_samples_leaf);
  w.u8(static_cast<std::uint8_t>(p.max_features));
  w.u8(static_cast<std::uint8_t>(p.criterion));
  w.u8(p.bootstrap ? 1 : 0);
  w.u64(m.seed);
  w.varint(m.trees.size());
  for (const DecisionTree& tree : m.trees) {
    w.varint(tree.nodes.size());
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& node = tree.nodes[i];
      if (node.is_leaf()) {
        w.u8(kLeafTag);
        w.varint(node.counts[0]);
        w.varint(node.counts[1]);
      } else {
        w.u8(static_cast<std::uint8_t>(node.feature));
        w.f64(node.threshold);
        w.varint(node.right - i);
      }
    }
  }
}

RandomForestModel read_forest(Reader& r, std::size_t features) {
  RandomForestModel m;
  ForestParams& p = m.params;
  p.n_estimators = r.u32();
  const bool has_depth = r.u8() != 0;
  const std::uint32_t depth = r.u32();
  if (has_depth) p.max_depth = depth;
  p.min_samples_split = r.u32();
  p.min_samples_leaf = r.u32();
  p.max_features = read_enum<MaxFeatures>(r, 2);
  p.criterion = read_enum<Criterion>(r, 1);
  p.bootstrap = r.u8() != 0;
  m.seed = r.u64();
  m.n_features = features;
  m.trees.resize(r.count(r.varint(), 1));
  if (m.trees.empty()) throw Error(ErrorCode::CorruptModel, "forest without trees");
  for (DecisionTree& tree : m.trees) {
    const std::size_t count = r.count(r.varint(), 3);
    if (count == 0) throw Error(ErrorCode::CorruptModel, "empty tree");
    tree.nodes.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      TreeNode& node = tree.nodes[i];
      const std::uint8_t tag = r.u8();
      if (tag == kLeafTag) {
        node.counts[0] = static_cast<std::uint32_t>(r.varint());
        node.counts[1] = static_cast<std::uint32_t>(r.varint());
        continue;
      }
      if (tag >= features) throw Error(ErrorCode::CorruptModel, "split on unknown feature");
      node.feature = tag;
      node.threshold = r.f64();
      const std::uint64_t offset = r.varint();
      // children must lie strictly after the node so traversal terminates
      if (offset < 2 || i + offset >= count || i + 1 >= count) throw Error(ErrorCode::CorruptModel, "bad child index");
      node.right = static_cast<std::uint32_t>(i + offset);
    }
  }
  return m;
}

// --- knn ---------------------------------------------------------------------

void write_knn(Writer& w, const KnnModel& m) {
  w.u32(m.params.n_neighbors);
  w.u8(static_cast<std::uint8_t>(m.params.metric.kind));
  w.f64(m.params.metric.p);
  w.u64(m.points.rows());
  for (const double v : m.points.data()) w.f64(v);
  for (const Label l : m.labels) w.u8(static_cast<std::uint8_t>(l));
}

KnnModel read_knn(Reader& r, std::size_t features, Standardizer standardizer) {
  KnnModel m;
  m.params.n_neighbors = r.u32();
  m.params.metric.kind = read_enum<MetricKind>(r, 3);
  m.params.metric.p = r.f64();
  const std::size_t n = r.count(r.u64(), 8 * features + 1);
  std::vector<double> data(n * features);
  for (double& v : data) v = r.f64();
  m.points = Matrix(n, features, std::move(data));
  m.labels.resize(n);
  for (Label& l : m.labels) l = read_label(r);
  if (m.params.n_neighbors == 0 || m.params.n_neighbors > n) throw Error(ErrorCode::CorruptModel, "bad n_neighbors");
  m.standardizer = std::move(standardizer);
  return m;
}

// --- svm -----------------------------------------------------------------------

void write_svm(Writer& w, const SvmRbfModel& m) {
  w.f64(m.params.C);
  w.u8(m.params.gamma ? 1 : 0);
  w.f64(m.params.gamma.value_or(0.0));
  w.f64(m.params.tol);
  w.u32(m.params.max_passes);
  w.u32(m.params.max_sweeps);
  w.u32(m.params.max_rows);
  w.f64(m.gamma);
  w.u64(m.dual_coef.size());
  for (const double v : m.support_vectors.data()) w.f64(v);
  for (const double v : m.dual_coef) w.f64(v);
  w.f64(m.bias);
}

SvmRbfModel read_svm(Reader& r, std::size_t features, Standardizer standardizer) {
  SvmRbfModel m;
  m.params.C = r.f64();
  const bool has_gamma = r.u8() != 0;
  const double gamma_param = r.f64();
  if (has_gamma) m.params.gamma = gamma_param;
  m.params.tol = r.f64();
  m.params.max_passes = r.u32();
  m.params.max_sweeps = r.u32();
  m.params.max_rows = r.u32();
  m.gamma = r.f64();
  const std::size_t n = r.count(r.u64(), 8 * (features + 1));
  std::vector<double> data(n * features);
  for (double& v : data) v = r.f64();
  m.support_vectors = Matrix(n, features, std::move(data));
  m.dual_coef.resize(n);
  for (double& v : m.dual_coef) v = r.f64();
  m.bias = r.f64();
  m.standardizer = std::move(standardizer);
  return m;
}

const Standardizer* header_standardizer(const Model& model) {
  switch (kind_of(model)) {
    case ModelKind::LogisticRegression: return &std::get<LogisticRegressionModel>(model).standardizer;
    case ModelKind::RandomForest: return nullptr;
    case ModelKind::Knn: return &std::get<KnnModel>(model).standardizer;
    case ModelKind::SvmRbf: return &std::get<SvmRbfModel>(model).standardizer;
    case ModelKind::TwoStageEnsemble: return &std::get<TwoStageEnsembleModel>(model).stage1.standardizer;
  }
  return nullptr;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const Model& model) {
  const std::size_t features = feature_count(model);
  if (features == 0 || features >= kLeafTag) throw Error(ErrorCode::InvalidArgument, "unsupported feature count");

  Writer w;
  w.raw(kMagic);
  w.u16(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(kind_of(model)));
  w.u8(static_cast<std::uint8_t>(features));
  const Standardizer* standardizer = header_standardizer(model);
  w.u8(standardizer != nullptr ? 1 : 0);
  if (standardizer != nullptr) {
    for (std::size_t c = 0; c < features; ++c) {
      w.f64(standardizer->means[c]);
      w.f64(standardizer->stds[c]);
    }
  }

  switch (kind_of(model)) {
    case ModelKind::LogisticRegression: write_logreg(w, std::get<LogisticRegressionModel>(model)); break;
    case ModelKind::RandomForest: write_forest(w, std::get<RandomForestModel>(model)); break;
    case ModelKind::Knn: write_knn(w, std::get<KnnModel>(model)); break;
    case ModelKind::SvmRbf: write_svm(w, std::get<SvmRbfModel>(model)); break;
    case ModelKind::TwoStageEnsemble: {
      const auto& e = std::get<TwoStageEnsembleModel>(model);
      write_logreg(w, e.stage1);
      write_forest(w, e.stage2);
      break;
    }
  }
  const std::uint32_t crc = checksum(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

Model deserialize_model(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kFixedHeader = 4 + 2 + 1 + 1 + 1;
  if (bytes.size() < kFixedHeader + 4) throw Error(ErrorCode::CorruptModel, "file too short for a model");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(ErrorCode::CorruptModel, "bad magic");
  const auto version = static_cast<std::uint16_t>(bytes[4] | (bytes[5] << 8));
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::VersionMismatch,
                "format version " + std::to_string(version) + ", expected " + std::to_string(kModelFormatVersion));
  }
  const auto body = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.last(4));
  if (checksum(body) != trailer.u32()) throw Error(ErrorCode::CorruptModel, "checksum mismatch");

  Reader r(body.subspan(6));
  const std::uint8_t kind_byte = r.u8();
  if (kind_byte < 1 || kind_byte > 5) throw Error(ErrorCode::CorruptModel, "unknown model kind");
  const auto kind = static_cast<ModelKind>(kind_byte);
  const std::size_t features = r.u8();
  if (features == 0) throw Error(ErrorCode::CorruptModel, "zero feature count");

  Standardizer standardizer;
  const bool has_standardizer = r.u8() != 0;
  if (has_standardizer) {
    standardizer.means.resize(features);
    standardizer.stds.resize(features);
    for (std::size_t c = 0; c < features; ++c) {
      standardizer.means[c] = r.f64();
      standardizer.stds[c] = r.f64();
    }
  }
  if (has_standardizer == (kind == ModelKind::RandomForest)) {
    throw Error(ErrorCode::CorruptModel, "standardizer flag inconsistent with model kind");
  }

  Model model;
  switch (kind) {
    case ModelKind::LogisticRegression: model = read_logreg(r, features, std::move(standardizer)); break;
    case ModelKind::RandomForest: model = read_forest(r, features); break;
    case ModelKind::Knn: model = read_knn(r, features, std::move(standardizer)); break;
    case ModelKind::SvmRbf: model = read_svm(r, features, std::move(standardizer)); break;
    case ModelKind::TwoStageEnsemble: {
      TwoStageEnsembleModel e;
      e.stage1 = read_logreg(r, features, std::move(standardizer));
      e.stage2 = read_forest(r, features);
      model = std::move(e);
      break;
    }
  }
  if (r.remaining() != 0) throw Error(ErrorCode::CorruptModel, "trailing bytes after payload");
  return model;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  return deserialize_model(bytes);
}

nlohmann::json model_sidecar(const Model& model, const std::vector<std::string>& feature_names) {
  nlohmann::json j{{"model_kind", std::string(to_string(kind_of(model)))},
                   {"features", feature_names},
                   {"weights", nullptr},
                   {"bias", nullptr},
                   {"standardizer", nullptr},
                   {"hyperparameters", spec_to_json(spec_of(model))}};
  const LogisticRegressionModel* lr = nullptr;
  if (const auto* m = std::get_if<LogisticRegressionModel>(&model)) lr = m;
  if (const auto* m = std::get_if<TwoStageEnsembleModel>(&model)) lr = &m->stage1;
  if (lr != nullptr) {
    j["weights"] = lr->weights;
    j["bias"] = lr->bias;
  }
  if (const Standardizer* s = header_standardizer(model)) j["standardizer"] = {{"means", s->means}, {"stds", s->stds}};
  return j;
}

void save_sidecar(const std::filesystem::path& path, const Model& model, const std::vector<std::string>& feature_names) {
  std::ofstream out(path, std::ios::binary);
  out << model_sidecar(model, feature_names).dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

}  // namespace emfe
