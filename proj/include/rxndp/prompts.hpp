#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "rxndp/types.hpp"

namespace rxndp {

enum class PromptKind {
  bros,
  bivp,
  vqa_reaction_count,
  vqa_structure_count,
  vqa_cyclic,
  vqa_tree,
  ocr,
};

std::string to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& name);
const std::vector<PromptKind>& all_prompt_kinds();
const std::vector<PromptKind>& vqa_prompt_kinds();

/// Verbatim template text for the given kind. The "<image>" marker inside the
/// text is where backends attach the image.
std::string build_prompt(PromptKind kind);

/// Stable content hash of the template, used for replay keys and pin tests.
std::string prompt_hash(PromptKind kind);

struct VqaGroundTruth {
  int reaction_count = 0;
  int structure_count = 0;
  bool cyclic = false;
  bool tree = false;
};

VqaGroundTruth vqa_ground_truth(const AnnotatedDiagram& diagram);

struct VqaItem {
  PromptKind kind = PromptKind::vqa_reaction_count;
  std::string reply;  // raw model text
  VqaGroundTruth gt;
};

struct VqaReport {
  std::map<PromptKind, double> accuracy;  // percent, exact match
  std::map<PromptKind, std::size_t> undecodable;
  std::map<PromptKind, std::size_t> counts;
  double mean = 100.0;  // unweighted over question kinds present
};

/// Exact-match accuracy per question kind. Replies that cannot be decoded to
/// the expected JSON shape count as wrong and are tallied separately.
VqaReport score_vqa(const std::vector<VqaItem>& items);

namespace detail {
struct EmbeddedPrompt {
  const char* name;
  const char* text;
};
extern const EmbeddedPrompt kEmbeddedPrompts[];
extern const std::size_t kEmbeddedPromptCount;
}  // namespace detail

}  // namespace rxndp
