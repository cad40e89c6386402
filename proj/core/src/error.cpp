#include "nqr/error.hpp"

namespace nqr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kVocabulary: return "vocabulary_error";
    case ErrorCode::kUnsupportedQuery: return "unsupported_query";
    case ErrorCode::kMissingEntity: return "missing_entity";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kUndefinedMetric: return "undefined_metric";
    case ErrorCode::kLoad: return "load_error";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace nqr
