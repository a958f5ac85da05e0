#include "rxndp/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/net_util.hpp"
#include "rxndp/prompts.hpp"
#include "rxndp/rng.hpp"
#include "rxndp/text.hpp"

namespace rxndp {
namespace {

using nlohmann::json;

const char* bros_category(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::mol: return "structure";
    case ComponentKind::txt: return "text";
    case ComponentKind::idt: return "identifier";
    case ComponentKind::supplement: return "supplement";
  }
  return "text";
}

json bbox_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

int covering_index(const BBox& box, const IndexMap& index_map) {
  int best = -1;
  double best_iou = 0.0;
  for (const auto& [idx, candidate] : index_map) {
    const double v = iou(box, candidate);
    if (v > best_iou) {
      best_iou = v;
      best = idx;
    }
  }
  if (best < 0 || best_iou <= 0.5)
    throw BackendError(BackendErrorKind::coverage,
                       "ground-truth molecule box has no covering index");
  return best;
}

// One substituted character, never touching whitespace, always a real edit.
std::string inject_typo(std::string text, Rng& rng) {
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 0x80 && !std::isspace(c)) slots.push_back(i);
  }
  if (slots.empty()) return text;
  const std::size_t pos = slots[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(slots.size()) - 1))];
  char repl = static_cast<char>('a' + rng.uniform_int(0, 25));
  if (repl == text[pos]) repl = static_cast<char>('a' + (repl - 'a' + 1) % 26);
  text[pos] = repl;
  return text;
}

json oracle_component(const Component& comp, Strategy strategy, const IndexMap& index_map,
                      const NoiseConfig& noise, Rng& rng) {
  json o;
  if (strategy == Strategy::bros) {
    if (!comp.bbox) return json();  // inexpressible without a box
    o["category"] = bros_category(comp.kind);
    o["bbox"] = bbox_json(*comp.bbox);
    return o;
  }
  if (comp.kind == ComponentKind::supplement) return json();  // no bivp type for it
  if (comp.kind == ComponentKind::mol) {
    int idx;
    if (comp.bbox) {
      idx = covering_index(*comp.bbox, index_map);
    } else if (comp.index && index_map.count(*comp.index)) {
      idx = *comp.index;
    } else {
      throw BackendError(BackendErrorKind::coverage,
                         "ground-truth molecule carries neither box nor known index");
    }
    if (rng.bernoulli(noise.index_corrupt_rate)) {
      std::vector<int> others;
      for (const auto& [k, box] : index_map)
        if (k != idx) others.push_back(k);
      if (!others.empty())
        idx = others[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(others.size()) - 1))];
    }
    o["type"] = "mol";
    o["index"] = idx;
    return o;
  }
  if (!comp.content) return json();  // bbox-only text cannot be spoken
  std::string content = *comp.content;
  if (rng.bernoulli(noise.text_typo_rate)) content = inject_typo(std::move(content), rng);
  o["type"] = comp.kind == ComponentKind::idt ? "idt" : "txt";
  o["content"] = content;
  return o;
}

json oracle_role(const std::vector<Component>& components, Strategy strategy,
                 const IndexMap& index_map, const NoiseConfig& noise, Rng& rng) {
  json arr = json::array();
  for (const Component& comp : components) {
    json o = oracle_component(comp, strategy, index_map, noise, rng);
    if (!o.is_null()) arr.push_back(std::move(o));
  }
  return arr;
}

}  // namespace

void NoiseConfig::validate() const {
  for (double rate : {drop_reaction_rate, role_swap_rate, index_corrupt_rate, text_typo_rate})
    if (rate < 0.0 || rate > 1.0) throw ConfigError("noise rates must lie in [0, 1]");
}

bool NoiseConfig::any() const {
  return drop_reaction_rate > 0.0 || role_swap_rate > 0.0 || index_corrupt_rate > 0.0 ||
         text_typo_rate > 0.0;
}

std::string oracle_reply(const AnnotatedDiagram& diagram, Strategy strategy,
                         const IndexMap& index_map, const NoiseConfig& noise,
                         std::uint64_t ordinal) {
  noise.validate();
  const std::uint64_t base = Rng::mix(noise.seed, ordinal);
  json arr = json::array();
  for (std::size_t r = 0; r < diagram.reactions.size(); ++r) {
    Rng rng(Rng::mix(base, r));
    const bool drop = rng.bernoulli(noise.drop_reaction_rate);  // first draw, always
    const bool swap = rng.bernoulli(noise.role_swap_rate);
    if (drop) continue;
    const ReactionAnnotation& rxn = diagram.reactions[r];
    json o;
    json reactants = oracle_role(rxn.reactants, strategy, index_map, noise, rng);
    json conditions = oracle_role(rxn.conditions, strategy, index_map, noise, rng);
    json products = oracle_role(rxn.products, strategy, index_map, noise, rng);
    if (swap) std::swap(reactants, products);
    o["reactants"] = std::move(reactants);
    o["conditions"] = std::move(conditions);
    o["products"] = std::move(products);
    arr.push_back(std::move(o));
  }
  return arr.dump();
}

OracleBackend::OracleBackend(NoiseConfig noise) : noise_(noise) { noise_.validate(); }

void OracleBackend::prime(const std::string& image_hash, OracleEntry entry) {
  std::lock_guard lock(mutex_);
  entries_[image_hash] = std::move(entry);
}

std::string OracleBackend::complete(const CompletionRequest& request) {
  PromptKind kind = PromptKind::bros;
  bool known = false;
  for (PromptKind candidate : all_prompt_kinds()) {
    if (request.prompt == build_prompt(candidate)) {
      kind = candidate;
      known = true;
      break;
    }
  }
  if (!known)
    throw BackendError(BackendErrorKind::config, "oracle backend cannot answer this prompt");
  // Crops handed to the OCR prompt are molecule regions by construction.
  if (kind == PromptKind::ocr) return "[GRAPHICAL_STRUCTURE]";

  OracleEntry entry;
  {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(content_hash(request.image_png));
    if (it == entries_.end())
      throw BackendError(BackendErrorKind::config, "oracle backend not primed for this image");
    entry = it->second;
  }
  switch (kind) {
    case PromptKind::bros:
      return oracle_reply(entry.diagram, Strategy::bros, {}, noise_, entry.ordinal);
    case PromptKind::bivp:
      return oracle_reply(entry.diagram, Strategy::bivp, entry.index_map, noise_, entry.ordinal);
    default: {
      const VqaGroundTruth gt = vqa_ground_truth(entry.diagram);
      json o;
      if (kind == PromptKind::vqa_reaction_count) o["reaction_count"] = gt.reaction_count;
      if (kind == PromptKind::vqa_structure_count) o["structure_count"] = gt.structure_count;
      if (kind == PromptKind::vqa_cyclic) o["cyclic"] = gt.cyclic;
      if (kind == PromptKind::vqa_tree) o["tree"] = gt.tree;
      return o.dump();
    }
  }
}

std::string OracleBackend::id() const {
  if (!noise_.any() && noise_.seed == 0) return "oracle";
  std::ostringstream os;
  os << "oracle;drop=" << noise_.drop_reaction_rate << ";swap=" << noise_.role_swap_rate
     << ";idx=" << noise_.index_corrupt_rate << ";typo=" << noise_.text_typo_rate
     << ";seed=" << noise_.seed;
  return os.str();
}

std::vector<TranscriptEntry> load_transcript(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open transcript: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_array())
    throw ConfigError("transcript must hold a JSON array: " + path);
  std::vector<TranscriptEntry> out;
  for (const auto& entry : doc) {
    if (!entry.contains("image_hash") || !entry.contains("prompt_hash") ||
        !entry.contains("reply"))
      throw ConfigError("transcript entry needs image_hash, prompt_hash and reply");
    out.push_back({entry["image_hash"].get<std::string>(),
                   entry["prompt_hash"].get<std::string>(),
                   entry["reply"].get<std::string>()});
  }
  return out;
}

void save_transcript(const std::vector<TranscriptEntry>& entries, const std::string& path) {
  json doc = json::array();
  for (const TranscriptEntry& entry : entries) {
    doc.push_back({{"image_hash", entry.image_hash},
                   {"prompt_hash", entry.prompt_hash},
                   {"reply", entry.reply}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write transcript: " + path);
  out << doc.dump(2) << "\n";
}

ReplayBackend::ReplayBackend(const std::string& transcript_path) {
  std::ifstream in(transcript_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open transcript: " + transcript_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  file_hash_ = content_hash(buf.str());
  for (const TranscriptEntry& entry : load_transcript(transcript_path))
    replies_[{entry.image_hash, entry.prompt_hash}] = entry.reply;
}

std::string ReplayBackend::complete(const CompletionRequest& request) {
  const auto key = std::make_pair(content_hash(request.image_png), content_hash(request.prompt));
  auto it = replies_.find(key);
  if (it == replies_.end())
    throw BackendError(BackendErrorKind::replay_miss,
                       "no transcript entry for image " + key.first + " prompt " + key.second);
  return it->second;
}

std::string ReplayBackend::id() const { return "replay:" + file_hash_; }

RecordingBackend::RecordingBackend(Backend& inner) : inner_(inner) {}

std::string RecordingBackend::complete(const CompletionRequest& request) {
  std::string reply = inner_.complete(request);
  std::lock_guard lock(mutex_);
  entries_.push_back({content_hash(request.image_png), content_hash(request.prompt), reply});
  return reply;
}

std::string RecordingBackend::id() const { return inner_.id(); }

std::vector<TranscriptEntry> RecordingBackend::transcript() const {
  std::lock_guard lock(mutex_);
  return entries_;
}

void RecordingBackend::save(const std::string& path) const { save_transcript(transcript(), path); }

void HttpBackendOptions::validate() const {
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (retry_base_ms < 0) throw ConfigError("retry_base_ms must be non-negative");
  if (timeout_seconds < 1) throw ConfigError("timeout_seconds must be positive");
  if (requests_per_second <= 0.0) throw ConfigError("requests_per_second must be positive");
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be positive");
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  options_.validate();
}

void HttpBackend::rate_limit_wait() {
  const auto interval = std::chrono::microseconds(
      static_cast<long long>(1e6 / options_.requests_per_second));
  std::chrono::steady_clock::time_point wake;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    wake = next_start_ < now ? now : next_start_;
    next_start_ = wake + interval;
  }
  std::this_thread::sleep_until(wake);
}

std::string HttpBackend::complete(const CompletionRequest& request) {
  const char* key = std::getenv("RXNDP_API_KEY");
  if (key == nullptr || *key == '\0')
    throw BackendError(BackendErrorKind::auth, "RXNDP_API_KEY is not set");
  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [this] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
    peak_in_flight_ = std::max(peak_in_flight_, in_flight_);
  }
  try {
    std::string reply = complete_once(request, key);
    std::lock_guard lock(mutex_);
    --in_flight_;
    slot_free_.notify_one();
    return reply;
  } catch (...) {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    slot_free_.notify_one();
    throw;
  }
}

std::string HttpBackend::complete_once(const CompletionRequest& request, const std::string& key) {
  std::string url = options_.url;
  if (url.empty()) {
    const char* env = std::getenv("RXNDP_API_URL");
    if (env == nullptr || *env == '\0')
      throw BackendError(BackendErrorKind::config, "RXNDP_API_URL is not set");
    url = env;
  }
  const SplitUrl split = split_url(url);

  json content = json::array();
  const std::string marker = "<image>";
  const std::size_t slot = request.prompt.find(marker);
  auto push_text = [&content](const std::string& text) {
    if (!normalize_text(text).empty()) content.push_back({{"type", "text"}, {"text", text}});
  };
  const std::string data_url =
      "data:" + request.media_type + ";base64," + base64_encode(request.image_png);
  if (slot != std::string::npos && !request.image_png.empty()) {
    push_text(request.prompt.substr(0, slot));
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url}}}});
    push_text(request.prompt.substr(slot + marker.size()));
  } else {
    push_text(request.prompt);
    if (!request.image_png.empty())
      content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url}}}});
  }
  json body;
  body["model"] = options_.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", std::move(content)}}});
  body["max_tokens"] = request.max_tokens;
  if (request.deterministic) body["temperature"] = 0;
  const std::string payload = body.dump();

  const httplib::Headers headers = {{"Authorization", "Bearer " + key}};
  std::string last_failure = "request never sent";
  bool saw_rate_limit = false;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      const long long delay = static_cast<long long>(options_.retry_base_ms) << (attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(std::min(delay, 8000LL)));
    }
    rate_limit_wait();
    httplib::Client client(split.base);
    client.set_connection_timeout(options_.timeout_seconds, 0);
    client.set_read_timeout(options_.timeout_seconds, 0);
    auto res = client.Post(split.path, headers, payload, "application/json");
    if (!res) {
      last_failure = "endpoint unreachable";
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw BackendError(BackendErrorKind::auth,
                         "authentication rejected (status " + std::to_string(res->status) + ")");
    if (res->status == 429) {
      saw_rate_limit = true;
      last_failure = "rate limited (status 429)";
      continue;
    }
    if (res->status >= 500) {
      last_failure = "server error (status " + std::to_string(res->status) + ")";
      continue;
    }
    if (res->status != 200)
      throw BackendError(BackendErrorKind::http,
                         "completion failed (status " + std::to_string(res->status) + ")");
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty())
      throw BackendError(BackendErrorKind::http, "malformed completion response");
    const json& message = reply["choices"][0].contains("message")
                              ? reply["choices"][0]["message"]
                              : json();
    if (!message.contains("content"))
      throw BackendError(BackendErrorKind::http, "completion response has no content");
    const json& text = message["content"];
    if (text.is_string()) return text.get<std::string>();
    if (text.is_array()) {
      std::string joined;
      for (const auto& part : text)
        if (part.contains("text") && part["text"].is_string())
          joined += part["text"].get<std::string>();
      return joined;
    }
    throw BackendError(BackendErrorKind::http, "completion content has unexpected shape");
  }
  if (saw_rate_limit)
    throw BackendError(BackendErrorKind::rate_limited, "retries exhausted: " + last_failure);
  throw BackendError(BackendErrorKind::timeout, "retries exhausted: " + last_failure);
}

std::string HttpBackend::id() const {
  std::string url = options_.url;
  if (url.empty()) {
    const char* env = std::getenv("RXNDP_API_URL");
    if (env != nullptr) url = env;
  }
  return "http:" + options_.model + ":" + content_hash(url);
}

int HttpBackend::peak_in_flight() const {
  std::lock_guard lock(mutex_);
  return peak_in_flight_;
}

BackendConfig parse_backend_spec(const std::string& spec) {
  BackendConfig config;
  if (spec == "oracle") {
    config.kind = BackendConfig::Kind::oracle;
    return config;
  }
  if (spec.rfind("replay:", 0) == 0) {
    config.kind = BackendConfig::Kind::replay;
    config.arg = spec.substr(7);
    if (config.arg.empty()) throw ConfigError("replay backend needs a path: replay:PATH");
    return config;
  }
  if (spec == "http") {
    config.kind = BackendConfig::Kind::http;
    return config;
  }
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    config.kind = BackendConfig::Kind::http;
    config.arg = spec;
    return config;
  }
  throw ConfigError("unknown backend spec: " + spec);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendConfig::Kind::oracle:
      return std::make_unique<OracleBackend>(config.noise);
    case BackendConfig::Kind::replay:
      return std::make_unique<ReplayBackend>(config.arg);
    case BackendConfig::Kind::http: {
      HttpBackendOptions options = config.http;
      if (!config.arg.empty()) options.url = config.arg;
      return std::make_unique<HttpBackend>(options);
    }
  }
  throw ConfigError("unknown backend kind");
}

}  // namespace rxndp
