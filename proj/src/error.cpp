#include "avsync/error.hpp"

namespace avsync {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kNonFinite: return "NON_FINITE";
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kParseError: return "PARSE_ERROR";
    case ErrorCode::kEmptyLog: return "EMPTY_LOG";
    case ErrorCode::kNonMonotonic: return "NON_MONOTONIC";
    case ErrorCode::kCorruptInput: return "CORRUPT_INPUT";
    case ErrorCode::kTooFewRows: return "TOO_FEW_ROWS";
    case ErrorCode::kNoSyncMark: return "NO_SYNC_MARK";
    case ErrorCode::kInsufficientPairs: return "INSUFFICIENT_PAIRS";
    case ErrorCode::kNonConstantOffset: return "NON_CONSTANT_OFFSET";
    case ErrorCode::kNotConverged: return "NOT_CONVERGED";
    case ErrorCode::kIoError: return "IO_ERROR";
    case ErrorCode::kNetworkError: return "NETWORK_ERROR";
  }
  return "UNKNOWN";
}

}  // namespace avsync
