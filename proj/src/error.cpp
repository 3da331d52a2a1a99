#include "error.hpp"

namespace sbk {

const char* to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::InvalidArgument: return "InvalidArgument";
  case ErrorCode::SeriesTooShort: return "SeriesTooShort";
  case ErrorCode::NonFiniteValue: return "NonFiniteValue";
  case ErrorCode::NonPositiveValue: return "NonPositiveValue";
  case ErrorCode::EmptyWindow: return "EmptyWindow";
  case ErrorCode::OutOfRange: return "OutOfRange";
  case ErrorCode::SingularDesign: return "SingularDesign";
  case ErrorCode::DegeneratePilot: return "DegeneratePilot";
  case ErrorCode::ComponentOutOfRange: return "ComponentOutOfRange";
  case ErrorCode::InsufficientLocalData: return "InsufficientLocalData";
  case ErrorCode::SingularLocalFit: return "SingularLocalFit";
  case ErrorCode::ZeroDenominator: return "ZeroDenominator";
  case ErrorCode::ExplosiveSeries: return "ExplosiveSeries";
  case ErrorCode::StudyAborted: return "StudyAborted";
  case ErrorCode::AllCellsFailed: return "AllCellsFailed";
  case ErrorCode::DegenerateRegressor: return "DegenerateRegressor";
  case ErrorCode::Io: return "Io";
  case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

} // namespace sbk
