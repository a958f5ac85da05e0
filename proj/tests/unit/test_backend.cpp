#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "rxndp/backend.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/net_util.hpp"
#include "rxndp/prompts.hpp"
#include "rxndp/synthgen.hpp"
#include "rxndp/visual_prompt.hpp"

#include "test_util.hpp"

using namespace rxndp;
using nlohmann::json;
using test::box;
using test::TempDir;

namespace {

IndexMap gt_index_map(const AnnotatedDiagram& d) {
  IndexMap map;
  const auto ordered = assign_indices(d.molecules);
  for (std::size_t i = 0; i < ordered.size(); ++i) map[static_cast<int>(i) + 1] = ordered[i];
  return map;
}

// reactant b1 -> product b2, with optional condition text
AnnotatedDiagram tiny_diagram(const std::string& condition = "") {
  AnnotatedDiagram d;
  d.image = {"tiny.png", 100, 100};
  d.molecules = {box(0.1, 0.1, 0.3, 0.3), box(0.6, 0.6, 0.9, 0.9)};
  ReactionAnnotation r;
  Component lhs = Component::mol_box(d.molecules[0]);
  lhs.index = 1;
  Component rhs = Component::mol_box(d.molecules[1]);
  rhs.index = 2;
  r.reactants = {lhs};
  r.products = {rhs};
  if (!condition.empty()) r.conditions = {Component::text(ComponentKind::txt, condition)};
  d.reactions = {r};
  d.layout = Layout::single_line;
  return d;
}

double soft_f1(const AnnotatedDiagram& gt, const std::vector<ReactionAnnotation>& pred) {
  const EvalCounts counts = evaluate(gt.reactions, pred, MatchMode{MatchKind::soft});
  const double denom = 2.0 * counts.tp + counts.fp + counts.fn;
  return denom == 0.0 ? 1.0 : 2.0 * counts.tp / denom;
}

}  // namespace

TEST_CASE("zero-noise oracle reply reproduces ground truth under bivp") {
  const RenderedDiagram rendered = render_spec(generate_spec(5, Layout::multi_line, 2));
  const AnnotatedDiagram& d = rendered.diagram;
  const IndexMap map = gt_index_map(d);

  const std::string reply = oracle_reply(d, Strategy::bivp, map, {}, 0);
  const ParsedOutput parsed = parse_bivp_output(reply);
  const auto resolved = resolve_bivp(parsed, map);
  CHECK(resolved == d.reactions);

  for (MatchKind kind : {MatchKind::soft, MatchKind::hard, MatchKind::hybrid}) {
    const EvalCounts counts = evaluate(d.reactions, resolved, MatchMode{kind});
    CHECK(counts.tp == d.reactions.size());
    CHECK(counts.fp == 0);
    CHECK(counts.fn == 0);
  }
}

TEST_CASE("oracle replies are deterministic in all their inputs") {
  const RenderedDiagram rendered = render_spec(generate_spec(6, Layout::single_line, 1));
  const AnnotatedDiagram& d = rendered.diagram;
  NoiseConfig noise;
  noise.text_typo_rate = 0.5;
  noise.seed = 9;
  const IndexMap map = gt_index_map(d);
  CHECK(oracle_reply(d, Strategy::bivp, map, noise, 3) ==
        oracle_reply(d, Strategy::bivp, map, noise, 3));
  NoiseConfig other = noise;
  other.seed = 10;
  // different stream, same shape: parses either way
  CHECK(parse_bivp_output(oracle_reply(d, Strategy::bivp, map, other, 3)).reactions.size() ==
        d.reactions.size());
}

TEST_CASE("a full drop rate empties the reply") {
  const AnnotatedDiagram d = tiny_diagram();
  NoiseConfig noise;
  noise.drop_reaction_rate = 1.0;
  CHECK(oracle_reply(d, Strategy::bros, {}, noise, 0) == "[]");
  CHECK(parse_bros_output("[]").reactions.empty());
}

TEST_CASE("index corruption swaps disjoint boxes and kills the soft score") {
  const AnnotatedDiagram d = tiny_diagram();
  const IndexMap map = gt_index_map(d);
  NoiseConfig noise;
  noise.index_corrupt_rate = 1.0;
  noise.seed = 4;
  const auto pred = resolve_bivp(parse_bivp_output(oracle_reply(d, Strategy::bivp, map, noise, 0)), map);
  REQUIRE(pred.size() == 1);
  // with two indices the corrupted one has exactly one place to go
  CHECK(pred[0].reactants[0].bbox == d.molecules[1]);
  CHECK(pred[0].products[0].bbox == d.molecules[0]);
  CHECK(soft_f1(d, pred) == doctest::Approx(0.0));
}

TEST_CASE("single-character typos stay inside the hybrid edit budget") {
  const AnnotatedDiagram d = tiny_diagram("Pd/C, H2");
  const IndexMap map = gt_index_map(d);
  NoiseConfig noise;
  noise.text_typo_rate = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    noise.seed = seed;
    const auto pred =
        resolve_bivp(parse_bivp_output(oracle_reply(d, Strategy::bivp, map, noise, 0)), map);
    const EvalCounts counts = evaluate(d.reactions, pred, MatchMode{MatchKind::hybrid});
    INFO("seed ", seed);
    CHECK(counts.tp == 1);
  }
}

TEST_CASE("raising the drop rate only ever removes reactions") {
  const RenderedDiagram rendered = render_spec(generate_spec(8, Layout::tree, 3));
  const AnnotatedDiagram& d = rendered.diagram;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::size_t previous = d.reactions.size();
    for (double rate : {0.2, 0.5, 0.8}) {
      NoiseConfig noise;
      noise.drop_reaction_rate = rate;
      noise.seed = seed;
      const std::size_t kept =
          parse_bros_output(oracle_reply(d, Strategy::bros, {}, noise, 0)).reactions.size();
      CHECK(kept <= previous);
      previous = kept;
    }
  }
}

TEST_CASE("a half drop rate drops about half over many ordinals") {
  const AnnotatedDiagram d = tiny_diagram();
  NoiseConfig noise;
  noise.drop_reaction_rate = 0.5;
  noise.seed = 7;
  std::size_t kept = 0;
  const int n = 200;
  for (int ordinal = 0; ordinal < n; ++ordinal)
    kept += parse_bros_output(oracle_reply(d, Strategy::bros, {}, noise, ordinal)).reactions.size();
  CHECK(kept >= 70);
  CHECK(kept <= 130);
}

TEST_CASE("role swap exchanges reactants and products") {
  const AnnotatedDiagram d = tiny_diagram("reflux");
  NoiseConfig noise;
  noise.role_swap_rate = 1.0;
  const ParsedOutput parsed = parse_bros_output(oracle_reply(d, Strategy::bros, {}, noise, 0));
  REQUIRE(parsed.reactions.size() == 1);
  const ReactionAnnotation& r = parsed.reactions[0];
  REQUIRE(r.reactants.size() == 1);
  REQUIRE(r.products.size() == 1);
  CHECK(r.reactants[0].bbox == d.molecules[1]);
  CHECK(r.products[0].bbox == d.molecules[0]);
}

TEST_CASE("oracle backend answers primed rxndp and vqa prompts") {
  const RenderedDiagram rendered = render_spec(generate_spec(12, Layout::cyclic, 3));
  const AnnotatedDiagram& d = rendered.diagram;
  const std::string png = encode_png(rendered.image);
  const std::string image_hash = content_hash(png);
  const IndexMap map = gt_index_map(d);

  OracleBackend backend;
  backend.prime(image_hash, {d, map, 0});

  CompletionRequest request;
  request.image_png = png;

  request.prompt = build_prompt(PromptKind::bivp);
  CHECK(backend.complete(request) == oracle_reply(d, Strategy::bivp, map, {}, 0));

  request.prompt = build_prompt(PromptKind::bros);
  CHECK(backend.complete(request) == oracle_reply(d, Strategy::bros, {}, {}, 0));

  request.prompt = build_prompt(PromptKind::vqa_reaction_count);
  CHECK(backend.complete(request) == json{{"reaction_count", 3}}.dump());
  request.prompt = build_prompt(PromptKind::vqa_cyclic);
  CHECK(backend.complete(request) == json{{"cyclic", true}}.dump());
}

TEST_CASE("oracle backend rejects strangers but always answers ocr") {
  OracleBackend backend;
  CompletionRequest request;
  request.image_png = "not even a png";

  request.prompt = "tell me a story";
  CHECK_THROWS_AS(backend.complete(request), BackendError);

  request.prompt = build_prompt(PromptKind::bivp);
  try {
    backend.complete(request);
    FAIL("expected a config error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::config);
  }

  request.prompt = build_prompt(PromptKind::ocr);
  CHECK(backend.complete(request) == "[GRAPHICAL_STRUCTURE]");
}

TEST_CASE("transcripts round trip and feed replay") {
  TempDir dir("backend_transcript");
  const std::vector<TranscriptEntry> entries = {
      {content_hash("img-a"), content_hash("prompt-a"), "reply-a"},
      {content_hash("img-b"), content_hash("prompt-b"), "reply longer\nwith newline"},
  };
  save_transcript(entries, dir.file("t.json"));
  const auto loaded = load_transcript(dir.file("t.json"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].reply == entries[0].reply);
  CHECK(loaded[1].prompt_hash == entries[1].prompt_hash);

  ReplayBackend replay(dir.file("t.json"));
  CompletionRequest request;
  request.image_png = "img-a";
  request.prompt = "prompt-a";
  CHECK(replay.complete(request) == "reply-a");

  request.prompt = "prompt-c";
  try {
    replay.complete(request);
    FAIL("expected a replay miss");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::replay_miss);
  }

  CHECK_THROWS_AS(ReplayBackend(dir.file("absent.json")), ConfigError);

  save_transcript({}, dir.file("empty.json"));
  ReplayBackend empty(dir.file("empty.json"));
  CHECK_THROWS_AS(empty.complete(request), BackendError);
}

TEST_CASE("recording a backend yields an equivalent replay") {
  TempDir dir("backend_record");
  const RenderedDiagram rendered = render_spec(generate_spec(3, Layout::single_line, 1));
  const std::string png = encode_png(rendered.image);
  const IndexMap map = gt_index_map(rendered.diagram);

  OracleBackend oracle;
  oracle.prime(content_hash(png), {rendered.diagram, map, 0});
  RecordingBackend recorder(oracle);
  CHECK(recorder.id() == oracle.id());

  CompletionRequest request;
  request.image_png = png;
  request.prompt = build_prompt(PromptKind::bivp);
  const std::string live = recorder.complete(request);
  request.prompt = build_prompt(PromptKind::vqa_tree);
  const std::string vqa = recorder.complete(request);
  CHECK(recorder.transcript().size() == 2);
  recorder.save(dir.file("t.json"));

  ReplayBackend replay(dir.file("t.json"));
  request.prompt = build_prompt(PromptKind::bivp);
  CHECK(replay.complete(request) == live);
  request.prompt = build_prompt(PromptKind::vqa_tree);
  CHECK(replay.complete(request) == vqa);
}

TEST_CASE("backend ids distinguish configurations") {
  CHECK(OracleBackend{}.id() == "oracle");
  NoiseConfig noise;
  noise.drop_reaction_rate = 0.3;
  noise.seed = 11;
  const std::string noisy = OracleBackend{noise}.id();
  CHECK(noisy.find("drop=0.3") != std::string::npos);
  CHECK(noisy.find("seed=11") != std::string::npos);

  TempDir dir("backend_ids");
  save_transcript({}, dir.file("t.json"));
  CHECK(ReplayBackend(dir.file("t.json")).id().rfind("replay:", 0) == 0);
}

TEST_CASE("noise and http options validate their ranges") {
  NoiseConfig noise;
  noise.text_typo_rate = 1.2;
  CHECK_THROWS_AS(noise.validate(), ConfigError);
  noise.text_typo_rate = -0.1;
  CHECK_THROWS_AS(noise.validate(), ConfigError);
  CHECK(!NoiseConfig{}.any());

  HttpBackendOptions options;
  options.max_in_flight = 0;
  CHECK_THROWS_AS(options.validate(), ConfigError);
  options = {};
  options.requests_per_second = 0.0;
  CHECK_THROWS_AS(options.validate(), ConfigError);
  options = {};
  options.max_retries = -1;
  CHECK_THROWS_AS(options.validate(), ConfigError);
}

TEST_CASE("backend specs parse into the right kinds") {
  CHECK(parse_backend_spec("oracle").kind == BackendConfig::Kind::oracle);
  const BackendConfig replay = parse_backend_spec("replay:/tmp/t.json");
  CHECK(replay.kind == BackendConfig::Kind::replay);
  CHECK(replay.arg == "/tmp/t.json");
  CHECK_THROWS_AS(parse_backend_spec("replay:"), ConfigError);
  CHECK(parse_backend_spec("http").kind == BackendConfig::Kind::http);
  const BackendConfig url = parse_backend_spec("https://api.example.com/v1/chat/completions");
  CHECK(url.kind == BackendConfig::Kind::http);
  CHECK(url.arg == "https://api.example.com/v1/chat/completions");
  CHECK_THROWS_AS(parse_backend_spec("carrier-pigeon"), ConfigError);

  BackendConfig noisy = parse_backend_spec("oracle");
  noisy.noise.drop_reaction_rate = 0.25;
  CHECK(make_backend(noisy)->id().find("drop=0.25") != std::string::npos);
}

namespace {

struct TestServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;

  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~TestServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  }
};

std::string chat_reply(const std::string& text) {
  json message;
  message["content"] = text;
  json choice;
  choice["message"] = message;
  json body;
  body["choices"] = json::array({choice});
  return body.dump();
}

HttpBackendOptions fast_options(const std::string& url) {
  HttpBackendOptions options;
  options.url = url;
  options.retry_base_ms = 1;
  options.requests_per_second = 1000.0;
  options.max_retries = 2;
  return options;
}

}  // namespace

TEST_CASE("http backend refuses to start without credentials") {
  unsetenv("RXNDP_API_KEY");
  HttpBackendOptions options;
  options.url = "http://127.0.0.1:1/v1/chat/completions";
  HttpBackend backend(options);
  try {
    backend.complete({"hi", ""});
    FAIL("expected an auth error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::auth);
  }
}

TEST_CASE("http backend sends an openai-style multimodal request") {
  setenv("RXNDP_API_KEY", "test-key-123", 1);
  TestServer ts;
  std::string seen_auth;
  json seen_body;
  ts.server.Post("/v1/chat/completions",
                 [&](const httplib::Request& req, httplib::Response& res) {
                   seen_auth = req.get_header_value("Authorization");
                   seen_body = json::parse(req.body);
                   res.set_content(chat_reply("pong"), "application/json");
                 });
  ts.start();

  HttpBackendOptions options = fast_options(ts.url());
  options.model = "test-model-7";
  HttpBackend backend(options);
  CompletionRequest request;
  request.prompt = "Count the reactions.\n<image>\nAnswer as JSON.";
  request.image_png = std::string("\x89PNG\r\n fake bytes \x00\x01", 20);
  CHECK(backend.complete(request) == "pong");

  CHECK(seen_auth == "Bearer test-key-123");
  CHECK(seen_body["model"] == "test-model-7");
  CHECK(seen_body["temperature"] == 0);
  const json& content = seen_body["messages"][0]["content"];
  REQUIRE(content.is_array());
  REQUIRE(content.size() == 3);
  CHECK(content[0]["type"] == "text");
  CHECK(content[0]["text"] == "Count the reactions.\n");
  CHECK(content[1]["type"] == "image_url");
  const std::string data_url = content[1]["image_url"]["url"].get<std::string>();
  const std::string prefix = "data:image/png;base64,";
  REQUIRE(data_url.rfind(prefix, 0) == 0);
  CHECK(base64_decode(data_url.substr(prefix.size())) == request.image_png);
  CHECK(content[2]["text"] == "\nAnswer as JSON.");
  CHECK(backend.id().rfind("http:test-model-7:", 0) == 0);
}

TEST_CASE("http backend treats auth rejections as final") {
  setenv("RXNDP_API_KEY", "test-key-123", 1);
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 401;
    res.set_content("{}", "application/json");
  });
  ts.start();
  HttpBackend backend(fast_options(ts.url()));
  try {
    backend.complete({"hello", ""});
    FAIL("expected an auth error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::auth);
  }
  CHECK(hits.load() == 1);
}

TEST_CASE("http backend retries rate limits until the budget runs out") {
  setenv("RXNDP_API_KEY", "test-key-123", 1);
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 429;
    res.set_content("{}", "application/json");
  });
  ts.start();
  HttpBackend backend(fast_options(ts.url()));  // max_retries = 2
  try {
    backend.complete({"hello", ""});
    FAIL("expected a rate-limit error");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::rate_limited);
  }
  CHECK(hits.load() == 3);
}

TEST_CASE("http backend rides out transient server failures") {
  setenv("RXNDP_API_KEY", "test-key-123", 1);
  TestServer ts;
  std::atomic<int> hits{0};
  ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int n = ++hits;
    if (n <= 2) {
      res.status = 500;
      res.set_content("{}", "application/json");
    } else {
      res.set_content(chat_reply("recovered"), "application/json");
    }
  });
  ts.start();
  HttpBackend backend(fast_options(ts.url()));
  CHECK(backend.complete({"hello", ""}) == "recovered");
  CHECK(hits.load() == 3);
}

TEST_CASE("http backend joins content returned as text parts") {
  setenv("RXNDP_API_KEY", "test-key-123", 1);
  TestServer ts;
  ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    json left;
    left["type"] = "text";
    left["text"] = "left ";
    json right;
    right["type"] = "text";
    right["text"] = "right";
    json message;
    message["content"] = json::array({left, right});
    json choice;
    choice["message"] = message;
    json body;
    body["choices"] = json::array({choice});
    res.set_content(body.dump(), "application/json");
  });
  ts.start();
  HttpBackend backend(fast_options(ts.url()));
  CHECK(backend.complete({"hello", ""}) == "left right");
}

TEST_CASE("http backend caps concurrent requests") {
  setenv("RXNDP_API_KEY", "test-key-123", 1);
  TestServer ts;
  std::atomic<int> current{0};
  std::atomic<int> peak{0};
  ts.server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    const int now = ++current;
    int seen = peak.load();
    while (seen < now && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(30));
    --current;
    res.set_content(chat_reply("ok"), "application/json");
  });
  ts.start();

  HttpBackendOptions options = fast_options(ts.url());
  options.max_in_flight = 2;
  HttpBackend backend(options);
  std::vector<std::thread> callers;
  std::atomic<int> good{0};
  for (int i = 0; i < 6; ++i)
    callers.emplace_back([&] {
      if (backend.complete({"hello", ""}) == "ok") ++good;
    });
  for (auto& t : callers) t.join();
  CHECK(good.load() == 6);
  CHECK(peak.load() <= 2);
  CHECK(backend.peak_in_flight() <= 2);
  CHECK(backend.peak_in_flight() >= 1);
}
