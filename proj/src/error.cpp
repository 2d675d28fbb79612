#include "ergocov/error.hpp"

namespace ergocov {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDisconnectedWorld: return "DisconnectedWorld";
    case ErrorCode::kAllBlocked: return "AllBlocked";
    case ErrorCode::kZeroMass: return "ZeroMass";
    case ErrorCode::kInvalidEvent: return "InvalidEvent";
    case ErrorCode::kSingularGram: return "SingularGram";
    case ErrorCode::kZeroBeliefMass: return "ZeroBeliefMass";
    case ErrorCode::kNotReversible: return "NotReversible";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace ergocov
