#pragma once

#include <stdexcept>
#include <string>

namespace rxndp {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad CLI flags, unknown backend/detector ids, missing credentials. Exit code 2.
struct ConfigError : Error {
  using Error::Error;
};

/// Corpus file problems: missing file, schema violation, invariant breach. Exit code 3.
struct CorpusError : Error {
  using Error::Error;
};

/// Raster problems: undecodable image, sub-pixel box, canvas too small.
struct RenderError : Error {
  using Error::Error;
};

enum class ParseErrorKind {
  no_json,          // no JSON array found in the reply
  bad_json,         // candidate region does not parse as JSON
  schema,           // element missing required fields / wrong shapes
  bbox_invalid,     // bbox out of range or degenerate
  index_invalid,    // mol index missing, zero or negative
  content_missing,  // txt/idt without content
};

const char* to_string(ParseErrorKind kind);

/// Typed failure from the model-output parsers. The harness tallies kinds.
class ParseError : public Error {
 public:
  ParseError(ParseErrorKind kind, const std::string& message)
      : Error(message), kind_(kind) {}
  ParseErrorKind kind() const { return kind_; }

 private:
  ParseErrorKind kind_;
};

enum class BackendErrorKind {
  config,        // endpoint/credential not configured
  auth,          // authentication rejected
  rate_limited,  // retries exhausted on 429
  timeout,
  http,          // other transport / server failure
  replay_miss,   // no transcript entry for (image hash, prompt hash)
  coverage,      // BIVP oracle: a ground-truth molecule has no index
};

const char* to_string(BackendErrorKind kind);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, const std::string& message)
      : Error(message), kind_(kind) {}
  BackendErrorKind kind() const { return kind_; }

 private:
  BackendErrorKind kind_;
};

}  // namespace rxndp
