#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nqr {

enum class ErrorCode {
  kParse,
  kVocabulary,
  kUnsupportedQuery,
  kMissingEntity,
  kInvalidArgument,
  kShapeMismatch,
  kUndefinedMetric,
  kLoad,
  kIo,
  kNotFound,
  kConflict,
};

std::string_view to_string(ErrorCode code);

// All library failures are reported with this exception; `code()` lets
// callers (CLI exit codes, HTTP status mapping) branch without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace nqr
