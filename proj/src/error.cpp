#include "emfe/error.hpp"

#include <string>

#include "emfe/label.hpp"

namespace emfe {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::DegenerateImage: return "DegenerateImage";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingClassDir: return "MissingClassDir";
    case ErrorCode::AllFilesFailed: return "AllFilesFailed";
    case ErrorCode::SingleClassTable: return "SingleClassTable";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonBinaryLabels: return "NonBinaryLabels";
    case ErrorCode::Diverged: return "Diverged";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySpace: return "EmptySpace";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::vector<Label> to_labels(std::span<const int> values) {
  std::vector<Label> labels;
  labels.reserve(values.size());
  for (const int v : values) {
    if (v != 0 && v != 1) throw Error(ErrorCode::NonBinaryLabels, "label " + std::to_string(v) + " is not 0 or 1");
    labels.push_back(static_cast<Label>(v));
  }
  return labels;
}

}  // namespace emfe
