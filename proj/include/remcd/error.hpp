#pragma once

#include <stdexcept>
#include <string>

namespace remcd {

enum class ErrorCode {
  DuplicateTime,
  OutOfOrder,
  UnknownVertex,
  InvalidStream,
  InvalidConfig,
  HazardOverflow,
  NoControlAvailable,
  MissingCovariate,
  SingularFit,
  RiskOverflow,
  NoNeighbor,
  ParseError,
  UsageError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateTime: return "DuplicateTime";
    case ErrorCode::OutOfOrder: return "OutOfOrder";
    case ErrorCode::UnknownVertex: return "UnknownVertex";
    case ErrorCode::InvalidStream: return "InvalidStream";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::HazardOverflow: return "HazardOverflow";
    case ErrorCode::NoControlAvailable: return "NoControlAvailable";
    case ErrorCode::MissingCovariate: return "MissingCovariate";
    case ErrorCode::SingularFit: return "SingularFit";
    case ErrorCode::RiskOverflow: return "RiskOverflow";
    case ErrorCode::NoNeighbor: return "NoNeighbor";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UsageError: return "UsageError";
  }
  return "Unknown";
}

/// Library-wide exception carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace remcd
