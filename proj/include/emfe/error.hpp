#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emfe {

enum class ErrorCode {
  IoError,
  DecodeError,
  DegenerateImage,
  EmptyInput,
  MissingClassDir,
  AllFilesFailed,
  SingleClassTable,
  TooFewSamples,
  ConstantColumn,
  SchemaError,
  NonBinaryLabels,
  Diverged,
  KTooLarge,
  VersionMismatch,
  CorruptModel,
  LengthMismatch,
  EmptySpace,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace emfe
