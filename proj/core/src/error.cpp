#include "percolation/error.hpp"

namespace perc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kParameter: return "ParameterError";
    case ErrorCode::kFormat: return "FormatError";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kDuplicate: return "Duplicate";
    case ErrorCode::kConsistency: return "ConsistencyError";
    case ErrorCode::kInvalidRequest: return "InvalidRequest";
    case ErrorCode::kNoNeighbors: return "NoNeighbors";
    case ErrorCode::kNoPath: return "NoPath";
    case ErrorCode::kProtocol: return "ProtocolError";
    case ErrorCode::kState: return "StateError";
    case ErrorCode::kNoCapacity: return "NoCapacity";
    case ErrorCode::kAllPathsDown: return "AllPathsDown";
    case ErrorCode::kConstraintViolation: return "ConstraintViolation";
    case ErrorCode::kInsufficientPackets: return "InsufficientPackets";
    case ErrorCode::kLogic: return "LogicError";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace perc
