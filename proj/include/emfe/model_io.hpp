#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "emfe/model.hpp"

namespace emfe {

// Layout (all integers and doubles little-endian):
//   "EMFE" | u16 version | u8 kind | u8 feature_count
//   u8 has_standardizer | [f64 mean, f64 std] * feature_count
//   kind-specific payload
//   u32 CRC-32 of every preceding byte
inline constexpr std::uint16_t kModelFormatVersion = 1;

std::vector<std::uint8_t> serialize_model(const Model& model);
/// Throws CorruptModel (bad magic, checksum, truncation, invalid structure)
/// or VersionMismatch.
Model deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

/// {model_kind, features, weights, bias, standardizer:{means, stds}, hyperparameters}.
/// weights/bias are filled for logistic regression and the ensemble's first stage.
nlohmann::json model_sidecar(const Model& model, const std::vector<std::string>& feature_names);
void save_sidecar(const std::filesystem::path& path, const Model& model, const std::vector<std::string>& feature_names);

}  // namespace emfe
