#include "emfe/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

#include "emfe/error.hpp"
#include "emfe/parallel.hpp"
#include "emfe/rng.hpp"

namespace emfe {

namespace fs = std::filesystem;

std::string_view class_dir_name(Label label) {
  return label == Label::Parasitized ? "Parasitized" : "Uninfected";
}

std::vector<Label> FeatureTable::labels() const {
  std::vector<Label> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

std::vector<FeatureVector> FeatureTable::features() const {
  std::vector<FeatureVector> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.features);
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion

std::vector<DatasetFile> list_dataset(const fs::path& root) {
  std::vector<DatasetFile> files;
  // "Parasitized" < "Uninfected", so this loop order is also the name order.
  for (const Label label : {Label::Parasitized, Label::Uninfected}) {
    const fs::path dir = root / class_dir_name(label);
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      throw Error(ErrorCode::MissingClassDir, "missing class directory " + dir.string());
    }
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      if (!entry.is_regular_file()) continue;
      std::string ext = entry.path().extension().string();
      std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
      if (ext != ".png") continue;
      names.push_back(entry.path().filename().string());
    }
    if (ec) throw Error(ErrorCode::IoError, "cannot list " + dir.string() + ": " + ec.message());
    std::sort(names.begin(), names.end());
    for (const auto& name : names) {
      files.push_back(DatasetFile{std::string(class_dir_name(label)) + "/" + name, label});
    }
  }
  return files;
}

std::vector<DatasetFile> stratified_subsample(std::span<const DatasetFile> files, std::size_t target, std::uint64_t seed) {
  if (target >= files.size()) return {files.begin(), files.end()};
  std::vector<DatasetFile> kept;
  Rng rng(seed);
  for (const Label label : {Label::Parasitized, Label::Uninfected}) {
    std::vector<DatasetFile> group;
    for (const auto& f : files) {
      if (f.label == label) group.push_back(f);
    }
    const auto quota = static_cast<std::size_t>(
        std::llround(static_cast<double>(target) * static_cast<double>(group.size()) / static_cast<double>(files.size())));
    rng.shuffle(std::span<DatasetFile>(group));
    group.resize(std::min(quota, group.size()));
    kept.insert(kept.end(), group.begin(), group.end());
  }
  std::sort(kept.begin(), kept.end(), [](const DatasetFile& a, const DatasetFile& b) {
    return a.relative_path < b.relative_path;
  });
  return kept;
}

FeatureVector extract_file(const fs::path& file, PolarityMode polarity, Connectivity connectivity) {
  const Preprocessed pre = preprocess(load_rgb(file), polarity);
  return extract_features(pre.mask, connectivity);
}

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string flatten_path(std::string relative) {
  std::replace(relative.begin(), relative.end(), '/', '_');
  return relative;
}

}  // namespace

IngestResult ingest(const fs::path& root, const IngestOptions& options) {
  std::vector<DatasetFile> files = list_dataset(root);
  if (options.subsample) files = stratified_subsample(files, *options.subsample, options.seed);
  if (options.debug) fs::create_directories(*options.debug);

  struct Outcome {
    std::optional<FeatureVector> features;
    std::string error;
  };
  std::vector<Outcome> outcomes(files.size());
  parallel_for(files.size(), options.threads, [&](std::size_t i) {
    try {
      const Preprocessed pre = preprocess(load_rgb(root / files[i].relative_path), options.polarity);
      outcomes[i].features = extract_features(pre.mask, options.connectivity);
      if (options.debug) {
        const fs::path stem = *options.debug / flatten_path(files[i].relative_path);
        write_pgm(fs::path(stem).replace_extension(".pgm"), pre.gray);
        write_pbm(fs::path(stem).replace_extension(".pbm"), pre.mask);
      }
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
    }
  });

  IngestResult result;
  result.table.metadata = TableMetadata{options.seed, options.polarity, options.connectivity, utc_timestamp()};
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (outcomes[i].features) {
      result.table.samples.push_back(Sample{files[i].relative_path, files[i].label, *outcomes[i].features});
    } else {
      result.failures.push_back(ExtractionFailure{files[i].relative_path, outcomes[i].error});
    }
  }
  if (result.table.samples.empty()) {
    throw Error(ErrorCode::AllFilesFailed, "no image under " + root.string() + " could be processed");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Splits

SplitAssignment stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "test_fraction must lie in (0, 1)");
  }
  SplitAssignment split;
  Rng rng(seed);
  for (const Label label : {Label::Uninfected, Label::Parasitized}) {
    std::vector<std::size_t> group;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) group.push_back(i);
    }
    if (group.empty()) throw Error(ErrorCode::SingleClassTable, "split needs both classes present");
    rng.shuffle(std::span<std::size_t>(group));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(group.size()) * test_fraction));
    split.train.insert(split.train.end(), group.begin(), group.end() - static_cast<std::ptrdiff_t>(n_test));
    split.test.insert(split.test.end(), group.end() - static_cast<std::ptrdiff_t>(n_test), group.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

SplitAssignment stratified_split(const FeatureTable& table, double test_fraction, std::uint64_t seed) {
  const auto labels = table.labels();
  return stratified_split(labels, test_fraction, seed);
}

std::vector<std::vector<std::size_t>> kfold_indices(std::span<const std::size_t> train, std::span<const Label> labels,
                                                    std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k must be at least 2");
  if (train.size() < k) throw Error(ErrorCode::TooFewSamples, "fewer training samples than folds");

  std::vector<std::vector<std::size_t>> folds(k);
  Rng rng(seed);
  std::size_t slot = 0;
  for (const Label label : {Label::Uninfected, Label::Parasitized}) {
    std::vector<std::size_t> group;
    for (const std::size_t i : train) {
      if (labels[i] == label) group.push_back(i);
    }
    rng.shuffle(std::span<std::size_t>(group));
    for (const std::size_t i : group) {
      folds[slot].push_back(i);
      slot = (slot + 1) % k;
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

// ---------------------------------------------------------------------------
// Features and correlation

FeatureSet parse_feature_set(std::string_view text) {
  if (text == "two") return FeatureSet::Two;
  if (text == "three") return FeatureSet::Three;
  throw Error(ErrorCode::InvalidArgument, "feature set must be 'two' or 'three'");
}

std::string_view to_string(FeatureSet set) { return set == FeatureSet::Two ? "two" : "three"; }

std::vector<std::string> feature_names(FeatureSet set) {
  if (set == FeatureSet::Two) return {"foreground", "holes"};
  return {"foreground", "background", "holes"};
}

Matrix design_matrix(const FeatureTable& table, std::span<const std::size_t> rows, FeatureSet set) {
  const std::size_t cols = set == FeatureSet::Two ? 2 : 3;
  Matrix X(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const FeatureVector& f = table.samples.at(rows[r]).features;
    X(r, 0) = static_cast<double>(f.foreground);
    if (set == FeatureSet::Two) {
      X(r, 1) = static_cast<double>(f.holes);
    } else {
      X(r, 1) = static_cast<double>(f.background);
      X(r, 2) = static_cast<double>(f.holes);
    }
  }
  return X;
}

Matrix design_matrix(const FeatureTable& table, FeatureSet set) {
  std::vector<std::size_t> all(table.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return design_matrix(table, all, set);
}

Matrix select_final_features(const FeatureTable& table) { return design_matrix(table, FeatureSet::Two); }

CorrelationMatrix pearson_correlation_matrix(const FeatureTable& table) {
  if (table.size() < 2) throw Error(ErrorCode::TooFewSamples, "correlation needs at least two samples");

  // Single-pass co-moment accumulation (Welford).
  std::array<double, 4> mean{};
  std::array<std::array<double, 4>, 4> comoment{};
  double n = 0.0;
  for (const Sample& s : table.samples) {
    const std::array<double, 4> x{static_cast<double>(s.features.foreground), static_cast<double>(s.features.background),
                                  static_cast<double>(s.features.holes), static_cast<double>(s.label)};
    n += 1.0;
    std::array<double, 4> before{};
    for (std::size_t j = 0; j < 4; ++j) {
      before[j] = x[j] - mean[j];
      mean[j] += before[j] / n;
    }
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) comoment[a][b] += before[a] * (x[b] - mean[b]);
    }
  }

  for (std::size_t j = 0; j < 4; ++j) {
    if (!(comoment[j][j] > 0.0)) {
      throw Error(ErrorCode::ConstantColumn, "column '" + std::string(kCorrelationColumns[j]) + "' is constant");
    }
  }
  CorrelationMatrix r{};
  for (std::size_t a = 0; a < 4; ++a) {
    r[a][a] = 1.0;
    for (std::size_t b = a + 1; b < 4; ++b) {
      const double value = std::clamp(comoment[a][b] / std::sqrt(comoment[a][a] * comoment[b][b]), -1.0, 1.0);
      r[a][b] = r[b][a] = value;
    }
  }
  return r;
}

std::string correlation_csv(const CorrelationMatrix& matrix) {
  std::ostringstream out;
  out << std::setprecision(17) << "feature";
  for (const auto name : kCorrelationColumns) out << ',' << name;
  out << '\n';
  for (std::size_t a = 0; a < 4; ++a) {
    out << kCorrelationColumns[a];
    for (std::size_t b = 0; b < 4; ++b) out << ',' << matrix[a][b];
    out << '\n';
  }
  return out.str();
}

std::string correlation_text(const CorrelationMatrix& matrix) {
  std::ostringstream out;
  out << std::left << std::setw(12) << "";
  for (const auto name : kCorrelationColumns) out << std::right << std::setw(12) << name;
  out << '\n' << std::fixed << std::setprecision(4);
  for (std::size_t a = 0; a < 4; ++a) {
    out << std::left << std::setw(12) << kCorrelationColumns[a];
    for (std::size_t b = 0; b < 4; ++b) out << std::right << std::setw(12) << matrix[a][b];
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr std::array<std::string_view, 5> kColumns{"path", "label", "foreground", "background", "holes"};

std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) throw Error(ErrorCode::SchemaError, "unterminated quote on line " + std::to_string(line_no));
  fields.push_back(std::move(current));
  return fields;
}

std::int64_t parse_int(const std::string& text, std::string_view column, std::size_t line_no) {
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::SchemaError,
                "bad integer '" + text + "' in column " + std::string(column) + " on line " + std::to_string(line_no));
  }
  return value;
}

fs::path metadata_path(const fs::path& csv) { return fs::path(csv.string() + ".meta.json"); }

}  // namespace

std::string table_to_csv(const FeatureTable& table) {
  std::string out = "path,label,foreground,background,holes\n";
  for (const Sample& s : table.samples) {
    out += quote_field(s.path);
    out += ',' + std::to_string(static_cast<int>(s.label));
    out += ',' + std::to_string(s.features.foreground);
    out += ',' + std::to_string(s.features.background);
    out += ',' + std::to_string(s.features.holes);
    out += '\n';
  }
  return out;
}

FeatureTable table_from_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::SchemaError, "empty feature table");

  const auto header = split_csv_line(lines.front(), 1);
  std::array<std::size_t, kColumns.size()> position{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kColumns[c]);
    if (it == header.end()) throw Error(ErrorCode::SchemaError, "missing column '" + std::string(kColumns[c]) + "'");
    position[c] = static_cast<std::size_t>(it - header.begin());
  }

  FeatureTable table;
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto fields = split_csv_line(lines[l], l + 1);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::SchemaError, "line " + std::to_string(l + 1) + " has " + std::to_string(fields.size()) +
                                              " fields, header has " + std::to_string(header.size()));
    }
    Sample s;
    s.path = fields[position[0]];
    const std::int64_t label = parse_int(fields[position[1]], "label", l + 1);
    if (label != 0 && label != 1) throw Error(ErrorCode::SchemaError, "label must be 0 or 1 on line " + std::to_string(l + 1));
    s.label = static_cast<Label>(label);
    s.features.foreground = parse_int(fields[position[2]], "foreground", l + 1);
    s.features.background = parse_int(fields[position[3]], "background", l + 1);
    s.features.holes = parse_int(fields[position[4]], "holes", l + 1);
    if (s.features.foreground < 0 || s.features.background < 0 || s.features.holes < 0) {
      throw Error(ErrorCode::SchemaError, "negative count on line " + std::to_string(l + 1));
    }
    table.samples.push_back(std::move(s));
  }
  return table;
}

void save_table(const fs::path& path, const FeatureTable& table) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    const std::string csv = table_to_csv(table);
    out.write(csv.data(), static_cast<std::streamsize>(csv.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  }
  const nlohmann::json meta{
      {"seed", table.metadata.seed},
      {"polarity", std::string(to_string(table.metadata.polarity))},
      {"connectivity", static_cast<int>(table.metadata.connectivity)},
      {"extracted_at", table.metadata.extracted_at},
  };
  std::ofstream out(metadata_path(path), std::ios::binary);
  out << meta.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + metadata_path(path).string());
}

FeatureTable load_table(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  FeatureTable table = table_from_csv(buffer.str());

  std::ifstream meta_in(metadata_path(path), std::ios::binary);
  if (meta_in) {
    try {
      const auto meta = nlohmann::json::parse(meta_in);
      table.metadata.seed = meta.at("seed").get<std::uint64_t>();
      table.metadata.polarity = parse_polarity(meta.at("polarity").get<std::string>());
      table.metadata.connectivity = parse_connectivity(meta.at("connectivity").get<int>());
      table.metadata.extracted_at = meta.at("extracted_at").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaError, "bad table metadata: " + std::string(e.what()));
    }
  }
  return table;
}

}  // namespace emfe
