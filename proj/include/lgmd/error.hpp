#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lgmd {

enum class ErrorCode {
  InvalidArgument,
  ZeroVariance,
  DegenerateInput,
  NearSingularPair,
  NotConverged,
  NotPositiveDefinite,
  NonFinite,
  EmptySelection,
  RankDeficient,
  DegenerateMask,
  ParseError,
  DimensionMismatch,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported through this type; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lgmd
