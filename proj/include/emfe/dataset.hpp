#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emfe/imaging.hpp"
#include "emfe/label.hpp"
#include "emfe/matrix.hpp"
#include "emfe/morphology.hpp"

namespace emfe {

std::string_view class_dir_name(Label label);

struct Sample {
  std::string path;  // relative to the dataset root, '/'-separated
  Label label = Label::Uninfected;
  FeatureVector features;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct TableMetadata {
  std::uint64_t seed = 42;
  PolarityMode polarity = PolarityMode::Paper;
  Connectivity connectivity = Connectivity::Eight;
  std::string extracted_at;  // ISO-8601 UTC

  friend bool operator==(const TableMetadata&, const TableMetadata&) = default;
};

struct FeatureTable {
  std::vector<Sample> samples;
  TableMetadata metadata;

  std::size_t size() const { return samples.size(); }
  std::vector<Label> labels() const;
  std::vector<FeatureVector> features() const;

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

// ---------------------------------------------------------------------------
// Ingestion

struct DatasetFile {
  std::string relative_path;
  Label label;
};

/// Lists `<root>/Parasitized/*.png` and `<root>/Uninfected/*.png` ordered by
/// (class directory name, path). Throws MissingClassDir.
std::vector<DatasetFile> list_dataset(const std::filesystem::path& root);

/// Seeded per-class subsample keeping the class proportions; result re-sorted.
std::vector<DatasetFile> stratified_subsample(std::span<const DatasetFile> files, std::size_t target, std::uint64_t seed);

struct IngestOptions {
  PolarityMode polarity = PolarityMode::Paper;
  Connectivity connectivity = Connectivity::Eight;
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  std::optional<std::size_t> subsample;        // stratified cap on the number of images
  std::optional<std::filesystem::path> debug;  // PGM/PBM dumps go here when set
};

struct ExtractionFailure {
  std::string path;
  std::string message;
};

struct IngestResult {
  FeatureTable table;
  std::vector<ExtractionFailure> failures;
};

/// Full preprocessing + feature extraction for one file.
FeatureVector extract_file(const std::filesystem::path& file, PolarityMode polarity, Connectivity connectivity);

/// Runs every image through the pipeline. Per-file failures are collected;
/// throws AllFilesFailed when nothing could be processed.
IngestResult ingest(const std::filesystem::path& root, const IngestOptions& options = {});

// ---------------------------------------------------------------------------
// Splits

struct SplitAssignment {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Per class: seeded Fisher-Yates shuffle, the last floor(n_class * test_fraction) go to test.
SplitAssignment stratified_split(std::span<const Label> labels, double test_fraction = 0.2, std::uint64_t seed = 42);
SplitAssignment stratified_split(const FeatureTable& table, double test_fraction = 0.2, std::uint64_t seed = 42);

/// Stratified k folds over `train` (indices into `labels`). Per class the
/// shuffled indices are dealt round-robin, continuing the rotation across
/// classes so total fold sizes also differ by at most one.
std::vector<std::vector<std::size_t>> kfold_indices(std::span<const std::size_t> train, std::span<const Label> labels,
                                                    std::size_t k, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Features and correlation

enum class FeatureSet { Two, Three };

FeatureSet parse_feature_set(std::string_view text);
std::string_view to_string(FeatureSet set);
std::vector<std::string> feature_names(FeatureSet set);

/// {foreground, holes} for Two; {foreground, background, holes} for Three.
Matrix design_matrix(const FeatureTable& table, std::span<const std::size_t> rows, FeatureSet set);
Matrix design_matrix(const FeatureTable& table, FeatureSet set);

/// The final two-column view (background dropped).
Matrix select_final_features(const FeatureTable& table);

inline constexpr std::array<std::string_view, 4> kCorrelationColumns{"foreground", "background", "holes", "label"};
using CorrelationMatrix = std::array<std::array<double, 4>, 4>;

/// Pearson r over {foreground, background, holes, label}. Throws ConstantColumn.
CorrelationMatrix pearson_correlation_matrix(const FeatureTable& table);

std::string correlation_csv(const CorrelationMatrix& matrix);
std::string correlation_text(const CorrelationMatrix& matrix);

// ---------------------------------------------------------------------------
// Persistence: `path,label,foreground,background,holes`, LF, header mandatory.
// Metadata goes to a `<csv>.meta.json` sidecar so the CSV stays byte-stable.

void save_table(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable load_table(const std::filesystem::path& path);

std::string table_to_csv(const FeatureTable& table);
FeatureTable table_from_csv(std::string_view text);

}  // namespace emfe
