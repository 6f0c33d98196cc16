#pragma once

#include <stdexcept>
#include <string>

namespace avsync {

// Stable error classes; the CLI maps these onto exit codes and tests match
// on them instead of message text.
enum class ErrorCode {
  kInvalidArgument,
  kNonFinite,
  kInvalidConfig,
  kParseError,
  kEmptyLog,
  kNonMonotonic,
  kCorruptInput,
  kTooFewRows,
  kNoSyncMark,
  kInsufficientPairs,
  kNonConstantOffset,
  kNotConverged,
  kIoError,
  kNetworkError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace avsync
