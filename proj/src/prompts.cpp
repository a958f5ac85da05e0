#include "rxndp/prompts.hpp"

#include <optional>

#include "json.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/hash.hpp"

namespace rxndp {
namespace {

using nlohmann::json;

// First balanced {...} region that parses as JSON, scanning left to right.
std::optional<json> first_json_object(const std::string& text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

const char* vqa_key(PromptKind kind) {
  switch (kind) {
    case PromptKind::vqa_reaction_count: return "reaction_count";
    case PromptKind::vqa_structure_count: return "structure_count";
    case PromptKind::vqa_cyclic: return "cyclic";
    case PromptKind::vqa_tree: return "tree";
    default: throw ConfigError("not a VQA question kind: " + to_string(kind));
  }
}

// nullopt when the reply does not decode to the expected shape.
std::optional<bool> decode_and_check(const VqaItem& item) {
  const auto obj = first_json_object(item.reply);
  if (!obj) return std::nullopt;
  const char* key = vqa_key(item.kind);
  if (!obj->contains(key)) return std::nullopt;
  const json& value = (*obj)[key];
  switch (item.kind) {
    case PromptKind::vqa_reaction_count:
    case PromptKind::vqa_structure_count: {
      if (!value.is_number_integer()) return std::nullopt;
      const long long pred = value.get<long long>();
      const long long want = item.kind == PromptKind::vqa_reaction_count
                                 ? item.gt.reaction_count
                                 : item.gt.structure_count;
      return pred == want;
    }
    case PromptKind::vqa_cyclic:
      if (!value.is_boolean()) return std::nullopt;
      return value.get<bool>() == item.gt.cyclic;
    case PromptKind::vqa_tree:
      if (!value.is_boolean()) return std::nullopt;
      return value.get<bool>() == item.gt.tree;
    default:
      return std::nullopt;
  }
}

}  // namespace

std::string to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::bros: return "bros";
    case PromptKind::bivp: return "bivp";
    case PromptKind::vqa_reaction_count: return "vqa_reaction_count";
    case PromptKind::vqa_structure_count: return "vqa_structure_count";
    case PromptKind::vqa_cyclic: return "vqa_cyclic";
    case PromptKind::vqa_tree: return "vqa_tree";
    case PromptKind::ocr: return "ocr";
  }
  return "unknown";
}

PromptKind prompt_kind_from_string(const std::string& name) {
  std::string canon = name;
  for (char& c : canon)
    if (c == '-') c = '_';
  for (PromptKind kind : all_prompt_kinds())
    if (to_string(kind) == canon) return kind;
  throw ConfigError("unknown prompt kind: " + name);
}

const std::vector<PromptKind>& all_prompt_kinds() {
  static const std::vector<PromptKind> kinds = {
      PromptKind::bros,        PromptKind::bivp,
      PromptKind::vqa_reaction_count, PromptKind::vqa_structure_count,
      PromptKind::vqa_cyclic,  PromptKind::vqa_tree,
      PromptKind::ocr,
  };
  return kinds;
}

const std::vector<PromptKind>& vqa_prompt_kinds() {
  static const std::vector<PromptKind> kinds = {
      PromptKind::vqa_reaction_count,
      PromptKind::vqa_structure_count,
      PromptKind::vqa_cyclic,
      PromptKind::vqa_tree,
  };
  return kinds;
}

std::string build_prompt(PromptKind kind) {
  const std::string name = to_string(kind);
  for (std::size_t i = 0; i < detail::kEmbeddedPromptCount; ++i)
    if (name == detail::kEmbeddedPrompts[i].name) return detail::kEmbeddedPrompts[i].text;
  throw ConfigError("no embedded template for prompt kind: " + name);
}

std::string prompt_hash(PromptKind kind) { return content_hash(build_prompt(kind)); }

VqaGroundTruth vqa_ground_truth(const AnnotatedDiagram& diagram) {
  VqaGroundTruth gt;
  gt.reaction_count = static_cast<int>(diagram.reactions.size());
  gt.structure_count = static_cast<int>(diagram.molecules.size());
  gt.cyclic = diagram.layout == Layout::cyclic;
  gt.tree = diagram.layout == Layout::tree;
  return gt;
}

VqaReport score_vqa(const std::vector<VqaItem>& items) {
  std::map<PromptKind, std::size_t> correct;
  VqaReport report;
  for (const VqaItem& item : items) {
    ++report.counts[item.kind];
    const auto verdict = decode_and_check(item);
    if (!verdict) {
      ++report.undecodable[item.kind];
      continue;  // wrong, just tallied separately
    }
    if (*verdict) ++correct[item.kind];
  }
  double sum = 0.0;
  for (const auto& [kind, total] : report.counts) {
    const double acc = 100.0 * static_cast<double>(correct[kind]) / static_cast<double>(total);
    report.accuracy[kind] = acc;
    sum += acc;
  }
  report.mean = report.counts.empty() ? 100.0 : sum / static_cast<double>(report.counts.size());
  return report;
}

}  // namespace rxndp
