#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace segrmt {

enum class ErrorCode {
  DimensionMismatch,
  EmptySet,
  InvalidParams,
  IndexOutOfRange,
  ChannelMismatch,
  InvalidConfig,
  MalformedPayload,
  EmptyPopulation,
  OracleFailure,
  ProtocolError,
  OracleError,
  Timeout,
  AllZeroDifferences,
  LengthMismatch,
  DegenerateVariance,
  TooFewSamples,
  MissingLabel,
  DecodeError,
  ShapeMismatch,
  GateViolation,
  IoError,
  InvalidSpec,
  ConfigError,
  IdMismatch,
  DriftDetected,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code is the stable part; the
/// message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  /// The message without the code prefix.
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace segrmt
