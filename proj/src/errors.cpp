#include "rxndp/errors.hpp"

namespace rxndp {

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::no_json: return "no_json";
    case ParseErrorKind::bad_json: return "bad_json";
    case ParseErrorKind::schema: return "schema";
    case ParseErrorKind::bbox_invalid: return "bbox_invalid";
    case ParseErrorKind::index_invalid: return "index_invalid";
    case ParseErrorKind::content_missing: return "content_missing";
  }
  return "unknown";
}

const char* to_string(BackendErrorKind kind) {
  switch (kind) {
    case BackendErrorKind::config: return "config";
    case BackendErrorKind::auth: return "auth";
    case BackendErrorKind::rate_limited: return "rate_limited";
    case BackendErrorKind::timeout: return "timeout";
    case BackendErrorKind::http: return "http";
    case BackendErrorKind::replay_miss: return "replay_miss";
    case BackendErrorKind::coverage: return "coverage";
  }
  return "unknown";
}

}  // namespace rxndp
