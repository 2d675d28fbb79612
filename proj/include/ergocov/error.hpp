#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergocov {

enum class ErrorCode {
  kDisconnectedWorld,
  kAllBlocked,
  kZeroMass,
  kInvalidEvent,
  kSingularGram,
  kZeroBeliefMass,
  kNotReversible,
  kNoConvergence,
  kInvalidArgument,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. Every failure carries a code so callers (and the
/// CLI's machine-readable error line) can dispatch on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Validation failure for a named configuration field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorCode::kConfig, field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace ergocov
