#include <doctest.h>

#include <string>
#include <vector>

#include "rxndp/errors.hpp"
#include "rxndp/prompts.hpp"
#include "rxndp/synthgen.hpp"

#include "prompt_pins.hpp"
#include "test_util.hpp"

using namespace rxndp;

TEST_CASE("every template carries the image marker") {
  for (PromptKind kind : all_prompt_kinds()) {
    const std::string text = build_prompt(kind);
    CHECK(text.find("<image>") != std::string::npos);
    CHECK(!text.empty());
  }
}

TEST_CASE("templates mention their key phrases") {
  CHECK(build_prompt(PromptKind::vqa_reaction_count).find("reaction_count") != std::string::npos);
  CHECK(build_prompt(PromptKind::bivp).find("return an empty list") != std::string::npos);
  CHECK(build_prompt(PromptKind::ocr).find("[GRAPHICAL_STRUCTURE]") != std::string::npos);
  CHECK(build_prompt(PromptKind::bros).find("bbox") != std::string::npos);
}

TEST_CASE("template hashes match their pins") {
  for (const auto& [kind, pin] : test::prompt_hash_pins()) {
    INFO("kind ", to_string(kind));
    CHECK(prompt_hash(kind) == pin);
  }
  CHECK(test::prompt_hash_pins().size() == all_prompt_kinds().size());
}

TEST_CASE("prompt kind names round trip") {
  for (PromptKind kind : all_prompt_kinds())
    CHECK(prompt_kind_from_string(to_string(kind)) == kind);
  CHECK(prompt_kind_from_string("vqa-reaction-count") == PromptKind::vqa_reaction_count);
  CHECK_THROWS_AS(prompt_kind_from_string("haiku"), ConfigError);
}

TEST_CASE("kind lists cover the expected questions") {
  CHECK(all_prompt_kinds().size() == 7);
  CHECK(vqa_prompt_kinds().size() == 4);
  for (PromptKind kind : vqa_prompt_kinds()) {
    const std::string name = to_string(kind);
    CHECK(name.rfind("vqa_", 0) == 0);
  }
}

TEST_CASE("vqa ground truth reads off the diagram") {
  const RenderedDiagram rendered = render_spec(generate_spec(9, Layout::cyclic, 3));
  const VqaGroundTruth gt = vqa_ground_truth(rendered.diagram);
  CHECK(gt.reaction_count == 3);
  CHECK(gt.structure_count == static_cast<int>(rendered.diagram.molecules.size()));
  CHECK(gt.cyclic);
  CHECK(!gt.tree);

  const RenderedDiagram tree = render_spec(generate_spec(9, Layout::tree, 2));
  const VqaGroundTruth tree_gt = vqa_ground_truth(tree.diagram);
  CHECK(!tree_gt.cyclic);
  CHECK(tree_gt.tree);
}

namespace {

VqaGroundTruth make_gt(int reactions, int structures, bool cyclic, bool tree) {
  VqaGroundTruth gt;
  gt.reaction_count = reactions;
  gt.structure_count = structures;
  gt.cyclic = cyclic;
  gt.tree = tree;
  return gt;
}

}  // namespace

TEST_CASE("score_vqa grades exact matches per question kind") {
  const VqaGroundTruth gt = make_gt(3, 7, false, true);
  std::vector<VqaItem> items = {
      {PromptKind::vqa_reaction_count, R"({"reaction_count": 3})", gt},
      {PromptKind::vqa_structure_count, R"({"structure_count": 7})", gt},
      {PromptKind::vqa_cyclic, R"({"cyclic": false})", gt},
      {PromptKind::vqa_tree, R"({"tree": true})", gt},
  };
  const VqaReport all_right = score_vqa(items);
  CHECK(all_right.mean == doctest::Approx(100.0));
  for (PromptKind kind : vqa_prompt_kinds()) {
    CHECK(all_right.accuracy.at(kind) == doctest::Approx(100.0));
    CHECK(all_right.counts.at(kind) == 1);
    CHECK(all_right.undecodable.count(kind) == 0);
  }

  items[0].reply = R"({"reaction_count": 4})";
  items[2].reply = R"({"cyclic": true})";
  const VqaReport half = score_vqa(items);
  CHECK(half.accuracy.at(PromptKind::vqa_reaction_count) == doctest::Approx(0.0));
  CHECK(half.accuracy.at(PromptKind::vqa_cyclic) == doctest::Approx(0.0));
  CHECK(half.accuracy.at(PromptKind::vqa_tree) == doctest::Approx(100.0));
  CHECK(half.mean == doctest::Approx(50.0));
}

TEST_CASE("score_vqa decodes strictly and tolerates prose wrappers") {
  const VqaGroundTruth gt = make_gt(3, 7, false, true);

  // prose around a well-formed object still decodes
  const VqaReport wrapped = score_vqa(
      {{PromptKind::vqa_reaction_count,
        "Sure, here is the answer:\n```json\n{\"reaction_count\": 3}\n```\nHope that helps.", gt}});
  CHECK(wrapped.accuracy.at(PromptKind::vqa_reaction_count) == doctest::Approx(100.0));
  CHECK(wrapped.undecodable.count(PromptKind::vqa_reaction_count) == 0);

  // a stringified number is not an integer answer
  const VqaReport stringy =
      score_vqa({{PromptKind::vqa_reaction_count, R"({"reaction_count": "3"})", gt}});
  CHECK(stringy.accuracy.at(PromptKind::vqa_reaction_count) == doctest::Approx(0.0));
  CHECK(stringy.undecodable.at(PromptKind::vqa_reaction_count) == 1);

  // missing key, non-bool, and plain refusals all land in undecodable
  const VqaReport junk = score_vqa({
      {PromptKind::vqa_cyclic, R"({"tree": true})", gt},
      {PromptKind::vqa_cyclic, R"({"cyclic": "no"})", gt},
      {PromptKind::vqa_cyclic, "I cannot tell from the image.", gt},
  });
  CHECK(junk.accuracy.at(PromptKind::vqa_cyclic) == doctest::Approx(0.0));
  CHECK(junk.undecodable.at(PromptKind::vqa_cyclic) == 3);
  CHECK(junk.counts.at(PromptKind::vqa_cyclic) == 3);
}

TEST_CASE("score_vqa with no items reports a clean slate") {
  const VqaReport empty = score_vqa({});
  CHECK(empty.mean == doctest::Approx(100.0));
  CHECK(empty.accuracy.empty());
  CHECK(empty.counts.empty());
}
