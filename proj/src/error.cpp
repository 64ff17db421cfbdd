#include "segrmt/error.hpp"

namespace segrmt {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ChannelMismatch: return "ChannelMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MalformedPayload: return "MalformedPayload";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::OracleFailure: return "OracleFailure";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::OracleError: return "OracleError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::AllZeroDifferences: return "AllZeroDifferences";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::GateViolation: return "GateViolation";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::DriftDetected: return "DriftDetected";
  }
  return "Unknown";
}

}  // namespace segrmt
