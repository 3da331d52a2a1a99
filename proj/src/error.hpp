#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sbk {

enum class ErrorCode {
  InvalidArgument,
  SeriesTooShort,
  NonFiniteValue,
  NonPositiveValue,
  EmptyWindow,
  OutOfRange,
  SingularDesign,
  DegeneratePilot,
  ComponentOutOfRange,
  InsufficientLocalData,
  SingularLocalFit,
  ZeroDenominator,
  ExplosiveSeries,
  StudyAborted,
  AllCellsFailed,
  DegenerateRegressor,
  Io,
  Parse,
};

const char* to_string(ErrorCode code);

// Every failure in the library is reported as an Error. `stage` is set by
// the pipeline ("log", "detrend", ...) so callers can tell where it broke.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  Error with_stage(std::string stage) const {
    return Error(code_, what(), std::move(stage));
  }

private:
  ErrorCode code_;
  std::string stage_;
};

} // namespace sbk
