#include <doctest.h>

#include <string>

#include "rxndp/errors.hpp"
#include "rxndp/parse.hpp"
#include "rxndp/rng.hpp"

#include "test_util.hpp"

using namespace rxndp;
using test::box;

namespace {

// the example payloads shipped inside the two prompt templates
const char* kBrosExample = R"([{
  "reactants": [{"category": "structure",
        "bbox": [0.1, 0.2, 0.3, 0.4]}],
  "conditions": [{"category": "text",
        "bbox": [0.32, 0.21, 0.4, 0.25]}],
  "products": [{"category": "structure",
        "bbox": [0.45, 0.2, 0.6, 0.4]}]
}])";

const char* kBivpExample = R"([
  {
    "reactants": [
    {"type": "mol", "index": 1},
    {"type": "txt", "content": "NaCl"}
    ],
    "conditions": [
    {"type": "mol", "index": 3},
    {"type": "txt", "content": "H2O, 25°C"}
    ],
    "products": [
    {"type": "mol", "index": 2},
    {"type": "idt", "content": "1a"}
    ]
  }
])";

ParseErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ParseError& e) {
    return e.kind();
  }
  throw std::logic_error("expected a ParseError");
}

}  // namespace

TEST_CASE("bros template example parses to one reaction") {
  const ParsedOutput out = parse_bros_output(kBrosExample);
  CHECK(out.strategy == Strategy::bros);
  REQUIRE(out.reactions.size() == 1);
  const ReactionAnnotation& rxn = out.reactions[0];
  REQUIRE(rxn.reactants.size() == 1);
  CHECK(rxn.reactants[0].kind == ComponentKind::mol);
  CHECK(*rxn.reactants[0].bbox == box(0.1, 0.2, 0.3, 0.4));
  CHECK(rxn.conditions[0].kind == ComponentKind::txt);
  CHECK(*rxn.conditions[0].bbox == box(0.32, 0.21, 0.4, 0.25));
  CHECK(rxn.products[0].kind == ComponentKind::mol);
  CHECK(out.dropped_empty == 0);
}

TEST_CASE("markdown fences and prose around the payload are ignored") {
  const std::string wrapped = "Sure! Here is the extraction you asked for:\n```json\n" +
                              std::string(kBrosExample) +
                              "\n```\nLet me know if you need anything else.";
  const ParsedOutput out = parse_bros_output(wrapped);
  REQUIRE(out.reactions.size() == 1);
  CHECK(*out.reactions[0].reactants[0].bbox == box(0.1, 0.2, 0.3, 0.4));
}

TEST_CASE("a bracket inside prose does not derail extraction") {
  const std::string tricky =
      "The list [see note] is below:\n" + std::string(kBrosExample);
  CHECK(parse_bros_output(tricky).reactions.size() == 1);
}

TEST_CASE("refusal text raises a no-json error") {
  CHECK(kind_of([] { parse_bros_output("I cannot parse this image."); }) ==
        ParseErrorKind::no_json);
  CHECK(kind_of([] { parse_bivp_output(""); }) == ParseErrorKind::no_json);
}

TEST_CASE("broken bracket soup raises bad-json") {
  CHECK(kind_of([] { parse_bros_output("result: [{\"reactants\": ]"); }) ==
        ParseErrorKind::bad_json);
}

TEST_CASE("bivp template example parses role by role") {
  const ParsedOutput out = parse_bivp_output(kBivpExample);
  CHECK(out.strategy == Strategy::bivp);
  REQUIRE(out.reactions.size() == 1);
  const ReactionAnnotation& rxn = out.reactions[0];
  REQUIRE(rxn.reactants.size() == 2);
  CHECK(rxn.reactants[0].kind == ComponentKind::mol);
  CHECK(rxn.reactants[0].index == 1);
  CHECK(rxn.reactants[1].content == "NaCl");
  CHECK(rxn.conditions[0].index == 3);
  CHECK(rxn.conditions[1].content == "H2O, 25°C");
  CHECK(rxn.products[0].index == 2);
  CHECK(rxn.products[1].kind == ComponentKind::idt);
  CHECK(rxn.products[1].content == "1a");
}

TEST_CASE("an empty list is a valid reply with zero reactions") {
  const ParsedOutput out = parse_bivp_output("[]");
  CHECK(out.reactions.empty());
  CHECK(out.dropped_empty == 0);
}

TEST_CASE("typed errors for every malformed component shape") {
  CHECK(kind_of([] {
          parse_bivp_output(R"([{"reactants": [{"type": "mol", "content": "X"}]}])");
        }) == ParseErrorKind::schema);
  CHECK(kind_of([] {
          parse_bivp_output(R"([{"reactants": [{"type": "mol", "index": 0}]}])");
        }) == ParseErrorKind::index_invalid);
  CHECK(kind_of([] {
          parse_bivp_output(R"([{"reactants": [{"type": "mol", "index": -3}]}])");
        }) == ParseErrorKind::index_invalid);
  CHECK(kind_of([] {
          parse_bivp_output(R"([{"reactants": [{"type": "txt"}]}])");
        }) == ParseErrorKind::content_missing);
  CHECK(kind_of([] {
          parse_bivp_output(R"([{"reactants": [{"type": "blob", "index": 1}]}])");
        }) == ParseErrorKind::schema);
  CHECK(kind_of([] {
          parse_bros_output(R"([{"reactants": [{"category": "structure", "bbox": [0.3, 0.2, 0.1, 0.4]}]}])");
        }) == ParseErrorKind::bbox_invalid);
  CHECK(kind_of([] {
          parse_bros_output(R"([{"reactants": [{"category": "structure", "bbox": [0, 0, 2, 1]}]}])");
        }) == ParseErrorKind::bbox_invalid);
  CHECK(kind_of([] {
          parse_bros_output(R"([{"reactants": [{"category": "structure"}]}])");
        }) == ParseErrorKind::schema);
  CHECK(kind_of([] { parse_bros_output("[42]"); }) == ParseErrorKind::schema);
  CHECK(kind_of([] {
          parse_bros_output(R"([{"reactants": {"category": "structure"}}])");
        }) == ParseErrorKind::schema);
}

TEST_CASE("reactions with neither reactants nor products are dropped and counted") {
  const ParsedOutput out = parse_bivp_output(
      R"([{"conditions": [{"type": "txt", "content": "heat"}]},
          {"reactants": [{"type": "mol", "index": 1}],
           "products": [{"type": "mol", "index": 2}]}])");
  CHECK(out.dropped_empty == 1);
  REQUIRE(out.reactions.size() == 1);
  CHECK(out.reactions[0].reactants[0].index == 1);
}

TEST_CASE("extract_first_json_array returns the first well-formed array") {
  CHECK(extract_first_json_array("prefix [1, 2] suffix [3]") == "[1,2]");
  CHECK(extract_first_json_array("[broken [2]") == "[2]");
  CHECK_FALSE(extract_first_json_array("no arrays here").has_value());
}

TEST_CASE("resolve_bivp replaces indices with mapped boxes") {
  ParsedOutput out = parse_bivp_output(
      R"([{"reactants": [{"type": "mol", "index": 2}],
           "products": [{"type": "txt", "content": "done"}]}])");
  IndexMap map;
  map[1] = box(0, 0, 0.1, 0.1);
  map[2] = box(0.2, 0, 0.3, 0.1);
  const auto resolved = resolve_bivp(out, map);
  REQUIRE(resolved.size() == 1);
  CHECK(*resolved[0].reactants[0].bbox == box(0.2, 0, 0.3, 0.1));
  // the index stays on the component for traceability
  CHECK(resolved[0].reactants[0].index == 2);
}

TEST_CASE("resolve_bivp names a dangling index") {
  ParsedOutput out = parse_bivp_output(R"([{"reactants": [{"type": "mol", "index": 9}]}])");
  IndexMap map;
  map[1] = box(0, 0, 0.1, 0.1);
  map[2] = box(0.2, 0, 0.3, 0.1);
  map[3] = box(0.4, 0, 0.5, 0.1);
  try {
    resolve_bivp(out, map);
    FAIL("expected a ParseError");
  } catch (const ParseError& e) {
    CHECK(e.kind() == ParseErrorKind::index_invalid);
    CHECK(std::string(e.what()).find("9") != std::string::npos);
  }
}

TEST_CASE("strategy names round trip") {
  CHECK(strategy_from_string("bros") == Strategy::bros);
  CHECK(strategy_from_string("bivp") == Strategy::bivp);
  CHECK(strategy_from_string(to_string(Strategy::bivp)) == Strategy::bivp);
  CHECK_THROWS_AS(strategy_from_string("hybrid"), ConfigError);
}

TEST_CASE("mutated payloads always yield a result or a typed error") {
  Rng rng(0xf022u);
  const std::string bases[] = {std::string(kBrosExample), std::string(kBivpExample)};
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 2000; ++i) {
    std::string payload = bases[i % 2];
    const int edits = rng.uniform_int(1, 8);
    for (int e = 0; e < edits; ++e) {
      const int op = rng.uniform_int(0, 2);
      const char c = static_cast<char>(rng.uniform_int(32, 126));
      const int at = rng.uniform_int(0, static_cast<int>(payload.size()) - 1);
      if (op == 0) payload[static_cast<std::size_t>(at)] = c;
      else if (op == 1) payload.insert(payload.begin() + at, c);
      else payload.erase(payload.begin() + at);
    }
    try {
      const ParsedOutput out = (i % 2 == 0) ? parse_bros_output(payload)
                                            : parse_bivp_output(payload);
      CHECK(out.raw == payload);
      ++parsed;
    } catch (const ParseError&) {
      ++rejected;
    }
  }
  CHECK(parsed + rejected == 2000);
  CHECK(parsed > 0);
  CHECK(rejected > 0);
}
