#include "rxndp/parse.hpp"

#include <sstream>

#include <json.hpp>

#include "rxndp/errors.hpp"

namespace rxndp {
namespace {

using nlohmann::json;

/// Drops markdown fence marker lines (``` or ```lang) so fenced payloads are
/// scanned like bare ones.
std::string strip_fences(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (line.compare(i, 3, "```") == 0) continue;
    out += line;
    out += '\n';
  }
  return out;
}

/// Returns the end offset (one past the closing bracket) of the balanced
/// region starting at `start`, or npos when the text ends first.
std::size_t balanced_end(const std::string& text, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '[' || c == '{') ++depth;
    else if (c == ']' || c == '}') {
      --depth;
      if (depth == 0) return i + 1;
    }
  }
  return std::string::npos;
}

[[noreturn]] void parse_fail(ParseErrorKind kind, const std::string& what) {
  throw ParseError(kind, what);
}

json extract_array_json(const std::string& raw) {
  const std::string text = strip_fences(raw);
  bool saw_bracket = false;
  for (std::size_t pos = text.find('['); pos != std::string::npos; pos = text.find('[', pos + 1)) {
    saw_bracket = true;
    const std::size_t end = balanced_end(text, pos);
    if (end == std::string::npos) continue;
    json candidate = json::parse(text.substr(pos, end - pos), nullptr, false);
    if (!candidate.is_discarded() && candidate.is_array()) return candidate;
  }
  if (saw_bracket) parse_fail(ParseErrorKind::bad_json, "no well-formed JSON array in reply");
  parse_fail(ParseErrorKind::no_json, "no JSON array in reply");
}

BBox parse_reply_bbox(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4) {
    parse_fail(ParseErrorKind::schema, where + ": bbox must be an array of 4 numbers");
  }
  for (const auto& v : j) {
    if (!v.is_number()) parse_fail(ParseErrorKind::schema, where + ": bbox must be numeric");
  }
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) parse_fail(ParseErrorKind::bbox_invalid, where + ": bbox out of range");
  return b;
}

Component parse_bros_component(const json& j, const std::string& where) {
  if (!j.is_object()) parse_fail(ParseErrorKind::schema, where + ": component must be an object");
  if (!j.contains("category") || !j["category"].is_string()) {
    parse_fail(ParseErrorKind::schema, where + ": missing category");
  }
  const std::string cat = j["category"].get<std::string>();
  Component c;
  if (cat == "structure") c.kind = ComponentKind::mol;
  else if (cat == "text") c.kind = ComponentKind::txt;
  else if (cat == "identifier") c.kind = ComponentKind::idt;
  else if (cat == "supplement") c.kind = ComponentKind::supplement;
  else parse_fail(ParseErrorKind::schema, where + ": unknown category \"" + cat + "\"");
  if (!j.contains("bbox")) parse_fail(ParseErrorKind::schema, where + ": missing bbox");
  c.bbox = parse_reply_bbox(j["bbox"], where);
  if (j.contains("content") && j["content"].is_string()) {
    c.content = j["content"].get<std::string>();
  }
  return c;
}

Component parse_bivp_component(const json& j, const std::string& where) {
  if (!j.is_object()) parse_fail(ParseErrorKind::schema, where + ": component must be an object");
  if (!j.contains("type") || !j["type"].is_string()) {
    parse_fail(ParseErrorKind::schema, where + ": missing type");
  }
  const std::string type = j["type"].get<std::string>();
  Component c;
  if (type == "mol") {
    c.kind = ComponentKind::mol;
    if (!j.contains("index")) parse_fail(ParseErrorKind::schema, where + ": mol requires an index");
    const json& idx = j["index"];
    if (!idx.is_number_integer() || idx.get<long long>() <= 0) {
      parse_fail(ParseErrorKind::index_invalid, where + ": index must be a positive integer");
    }
    c.index = static_cast<int>(idx.get<long long>());
    return c;
  }
  if (type == "txt") c.kind = ComponentKind::txt;
  else if (type == "idt") c.kind = ComponentKind::idt;
  else parse_fail(ParseErrorKind::schema, where + ": unknown type \"" + type + "\"");
  if (!j.contains("content") || !j["content"].is_string()) {
    parse_fail(ParseErrorKind::content_missing, where + ": " + type + " requires content");
  }
  c.content = j["content"].get<std::string>();
  return c;
}

template <typename ComponentParser>
ParsedOutput parse_reply(Strategy strategy, const std::string& raw, ComponentParser parse_component) {
  ParsedOutput out;
  out.strategy = strategy;
  out.raw = raw;
  const json root = extract_array_json(raw);
  for (std::size_t r = 0; r < root.size(); ++r) {
    const json& jr = root[r];
    const std::string where = "reaction " + std::to_string(r);
    if (!jr.is_object()) parse_fail(ParseErrorKind::schema, where + ": must be an object");
    ReactionAnnotation rxn;
    const std::pair<const char*, std::vector<Component>*> roles[] = {
        {"reactants", &rxn.reactants},
        {"conditions", &rxn.conditions},
        {"products", &rxn.products},
    };
    for (const auto& [key, dst] : roles) {
      if (!jr.contains(key)) continue;
      const json& jrole = jr[key];
      if (!jrole.is_array()) parse_fail(ParseErrorKind::schema, where + ": " + key + " must be an array");
      for (std::size_t i = 0; i < jrole.size(); ++i) {
        dst->push_back(parse_component(
            jrole[i], where + " " + key + "[" + std::to_string(i) + "]"));
      }
    }
    if (rxn.reactants.empty() && rxn.products.empty()) {
      ++out.dropped_empty;
      continue;
    }
    out.reactions.push_back(std::move(rxn));
  }
  return out;
}

}  // namespace

const char* to_string(Strategy strategy) {
  return strategy == Strategy::bros ? "bros" : "bivp";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "bros" || name == "BROS") return Strategy::bros;
  if (name == "bivp" || name == "BIVP") return Strategy::bivp;
  throw ConfigError("unknown strategy: " + name);
}

std::optional<std::string> extract_first_json_array(const std::string& raw) {
  try {
    return extract_array_json(raw).dump();
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

ParsedOutput parse_bros_output(const std::string& raw) {
  return parse_reply(Strategy::bros, raw, parse_bros_component);
}

ParsedOutput parse_bivp_output(const std::string& raw) {
  return parse_reply(Strategy::bivp, raw, parse_bivp_component);
}

std::vector<ReactionAnnotation> resolve_bivp(const ParsedOutput& output, const IndexMap& index_map) {
  std::vector<ReactionAnnotation> resolved = output.reactions;
  for (auto& rxn : resolved) {
    for (auto* role : {&rxn.reactants, &rxn.conditions, &rxn.products}) {
      for (auto& c : *role) {
        if (c.kind != ComponentKind::mol) continue;
        if (!c.index) {
          throw ParseError(ParseErrorKind::index_invalid, "mol component lacks an index");
        }
        const auto it = index_map.find(*c.index);
        if (it == index_map.end()) {
          throw ParseError(ParseErrorKind::index_invalid,
                           "dangling index " + std::to_string(*c.index));
        }
        c.bbox = it->second;
      }
    }
  }
  return resolved;
}

}  // namespace rxndp
