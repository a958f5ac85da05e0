#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "rxndp/parse.hpp"
#include "rxndp/types.hpp"

namespace rxndp {

struct CompletionRequest {
  std::string prompt;
  std::string image_png;  // raw PNG bytes; empty for text-only calls
  std::string media_type = "image/png";
  int max_tokens = 4096;
  bool deterministic = true;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const CompletionRequest& request) = 0;
  /// Stable identifier folded into config hashes and run provenance.
  virtual std::string id() const = 0;
};

/// Seeded degradation knobs for the oracle backend. Each affected text gets
/// exactly one character typo; corrupted indices move to a different valid
/// index when more than one exists.
struct NoiseConfig {
  double drop_reaction_rate = 0.0;
  double role_swap_rate = 0.0;
  double index_corrupt_rate = 0.0;
  double text_typo_rate = 0.0;
  std::uint64_t seed = 0;

  void validate() const;  // rates must lie in [0, 1]
  bool any() const;
};

/// Schema-exact reply a perfect model would emit for the diagram, then noise.
/// Under bivp every reaction molecule is referenced by the index of its best
/// IoU box in index_map; a molecule no index covers is a coverage error.
/// Reactions draw noise from independent substreams of (seed, ordinal), so a
/// higher drop rate only ever removes reactions from the reply.
std::string oracle_reply(const AnnotatedDiagram& diagram, Strategy strategy,
                         const IndexMap& index_map, const NoiseConfig& noise,
                         std::uint64_t ordinal = 0);

struct OracleEntry {
  AnnotatedDiagram diagram;
  IndexMap index_map;  // empty for bros runs
  std::uint64_t ordinal = 0;
};

/// Test double keyed by the content hash of the request image bytes. Answers
/// RxnDP prompts via oracle_reply and VQA prompts from ground truth.
class OracleBackend final : public Backend {
 public:
  explicit OracleBackend(NoiseConfig noise = {});

  /// image_hash must be the content_hash of the exact bytes requests carry.
  void prime(const std::string& image_hash, OracleEntry entry);

  std::string complete(const CompletionRequest& request) override;
  std::string id() const override;

 private:
  NoiseConfig noise_;
  std::map<std::string, OracleEntry> entries_;
  mutable std::mutex mutex_;
};

struct TranscriptEntry {
  std::string image_hash;
  std::string prompt_hash;
  std::string reply;
};

std::vector<TranscriptEntry> load_transcript(const std::string& path);
void save_transcript(const std::vector<TranscriptEntry>& entries, const std::string& path);

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(const std::string& transcript_path);
  std::string complete(const CompletionRequest& request) override;
  std::string id() const override;

 private:
  std::map<std::pair<std::string, std::string>, std::string> replies_;
  std::string file_hash_;
};

/// Wraps another backend and captures a replayable transcript.
class RecordingBackend final : public Backend {
 public:
  explicit RecordingBackend(Backend& inner);
  std::string complete(const CompletionRequest& request) override;
  std::string id() const override;
  std::vector<TranscriptEntry> transcript() const;
  void save(const std::string& path) const;

 private:
  Backend& inner_;
  std::vector<TranscriptEntry> entries_;
  mutable std::mutex mutex_;
};

struct HttpBackendOptions {
  std::string url;  // empty: read RXNDP_API_URL
  std::string model = "gpt-4o";
  int max_retries = 4;
  int retry_base_ms = 500;
  int timeout_seconds = 60;
  double requests_per_second = 2.0;
  int max_in_flight = 2;

  void validate() const;
};

/// OpenAI-style chat completion client. The API key is read exclusively from
/// the RXNDP_API_KEY environment variable and never logged or persisted.
/// Transient failures retry with exponential backoff; request starts pass
/// through an interval rate limiter and an in-flight cap.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options = {});
  std::string complete(const CompletionRequest& request) override;
  std::string id() const override;
  int peak_in_flight() const;

 private:
  std::string complete_once(const CompletionRequest& request, const std::string& key);
  void rate_limit_wait();

  HttpBackendOptions options_;
  mutable std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
  int peak_in_flight_ = 0;
  std::chrono::steady_clock::time_point next_start_{};
};

struct BackendConfig {
  enum class Kind { oracle, replay, http };
  Kind kind = Kind::oracle;
  std::string arg;  // replay path or explicit http URL
  NoiseConfig noise;
  HttpBackendOptions http;
};

/// Accepts "oracle", "replay:PATH" or "http" (endpoint via RXNDP_API_URL);
/// an explicit "http://..." / "https://..." URL is also taken as http.
BackendConfig parse_backend_spec(const std::string& spec);

std::unique_ptr<Backend> make_backend(const BackendConfig& config);

}  // namespace rxndp
