#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dea {

enum class ErrorCode {
  NotPositiveDefinite,
  NoConvergence,
  DimensionMismatch,
  RankDeficient,
  UnsupportedRegressor,
  MissingNoiseCovariance,
  ZeroVector,
  DomainError,
  DivisionByZero,
  WrongStatisticKind,
  InsufficientSamples,
  ConfigInvalid,
  FileNotFound,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status and a remediation hint.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// True for failures caused by the numbers rather than by the caller's input.
  bool is_numerical() const noexcept {
    return code_ == ErrorCode::NotPositiveDefinite || code_ == ErrorCode::NoConvergence ||
           code_ == ErrorCode::RankDeficient || code_ == ErrorCode::DivisionByZero;
  }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::UnsupportedRegressor: return "UnsupportedRegressor";
    case ErrorCode::MissingNoiseCovariance: return "MissingNoiseCovariance";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::WrongStatisticKind: return "WrongStatisticKind";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

}  // namespace dea
