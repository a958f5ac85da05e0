#include "rxndp/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rxndp/errors.hpp"
#include "rxndp/reading_order.hpp"
#include "rxndp/text.hpp"

namespace rxndp {
namespace {

using nlohmann::json;

[[noreturn]] void fail(std::size_t record, const std::string& field, const std::string& what) {
  std::ostringstream os;
  os << "record " << record << ": " << field << ": " << what;
  throw CorpusError(os.str());
}

BBox parse_bbox(const json& j, std::size_t record, const std::string& field) {
  if (!j.is_array() || j.size() != 4) fail(record, field, "expected an array of 4 numbers");
  for (const auto& v : j) {
    if (!v.is_number()) fail(record, field, "expected an array of 4 numbers");
  }
  BBox b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  if (!b.valid()) {
    fail(record, field, "invalid bbox (need 0 <= x1 < x2 <= 1 and 0 <= y1 < y2 <= 1)");
  }
  return b;
}

std::optional<std::string> parse_content(const json& j, std::size_t record, const std::string& field) {
  if (!j.contains("content")) return std::nullopt;
  if (!j["content"].is_string()) fail(record, field + ".content", "expected a string");
  return j["content"].get<std::string>();
}

Component parse_component_rxncaption(const json& j, std::size_t record, const std::string& field) {
  if (!j.is_object()) fail(record, field, "expected a component object");
  if (!j.contains("kind") || !j["kind"].is_string()) {
    fail(record, field + ".kind", "missing or not a string");
  }
  const std::string kind = j["kind"].get<std::string>();
  Component c;
  if (kind == "mol") c.kind = ComponentKind::mol;
  else if (kind == "txt") c.kind = ComponentKind::txt;
  else if (kind == "idt") c.kind = ComponentKind::idt;
  else if (kind == "supplement") c.kind = ComponentKind::supplement;
  else fail(record, field + ".kind", "unknown kind \"" + kind + "\"");

  if (j.contains("bbox")) c.bbox = parse_bbox(j["bbox"], record, field + ".bbox");
  c.content = parse_content(j, record, field);

  if (c.kind == ComponentKind::mol) {
    if (!c.bbox) fail(record, field, "mol component requires a bbox");
  } else if (!c.bbox && !c.content) {
    fail(record, field, "text component requires content or a bbox");
  }
  return c;
}

Component parse_component_rxnscribe(const json& j, std::size_t record, const std::string& field) {
  if (!j.is_object()) fail(record, field, "expected a component object");
  if (!j.contains("category") || !j["category"].is_string()) {
    fail(record, field + ".category", "missing or not a string");
  }
  const std::string cat = j["category"].get<std::string>();
  Component c;
  if (cat == "structure") c.kind = ComponentKind::mol;
  else if (cat == "text") c.kind = ComponentKind::txt;
  else if (cat == "identifier") c.kind = ComponentKind::idt;
  else if (cat == "supplement") c.kind = ComponentKind::supplement;
  else fail(record, field + ".category", "unknown category \"" + cat + "\"");

  if (!j.contains("bbox")) fail(record, field + ".bbox", "missing");
  c.bbox = parse_bbox(j["bbox"], record, field + ".bbox");
  c.content = parse_content(j, record, field);
  return c;
}

bool same_component_identity(const Component& a, const Component& b) {
  if (a.kind != b.kind) return false;
  if (a.bbox && b.bbox && *a.bbox == *b.bbox) return true;
  if (a.content && b.content &&
      normalize_text(*a.content) == normalize_text(*b.content) && !a.bbox && !b.bbox) {
    return true;
  }
  return false;
}

std::vector<Component> parse_role(const json& j, CorpusFormat format, std::size_t record,
                                  const std::string& field) {
  if (!j.is_array()) fail(record, field, "expected an array");
  std::vector<Component> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = field + "[" + std::to_string(i) + "]";
    Component c = format == CorpusFormat::rxncaption
                      ? parse_component_rxncaption(j[i], record, path)
                      : parse_component_rxnscribe(j[i], record, path);
    if (c.content && normalize_text(*c.content).empty()) {
      fail(record, path + ".content", "empty after normalization");
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (same_component_identity(out[k], c)) {
        fail(record, path, "duplicate of " + field + "[" + std::to_string(k) + "]");
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

ReactionAnnotation parse_reaction(const json& j, CorpusFormat format, std::size_t record,
                                  const std::string& field) {
  if (!j.is_object()) fail(record, field, "expected a reaction object");
  ReactionAnnotation rxn;
  if (j.contains("reactants")) rxn.reactants = parse_role(j["reactants"], format, record, field + ".reactants");
  if (j.contains("conditions")) rxn.conditions = parse_role(j["conditions"], format, record, field + ".conditions");
  if (j.contains("products")) rxn.products = parse_role(j["products"], format, record, field + ".products");
  if (rxn.reactants.empty() && rxn.products.empty()) {
    fail(record, field, "reaction has neither reactants nor products");
  }
  return rxn;
}

int require_positive_int(const json& j, std::size_t record, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) {
    fail(record, field, "expected a positive integer");
  }
  return static_cast<int>(j.get<long long>());
}

bool contains_box(const std::vector<BBox>& boxes, const BBox& b) {
  return std::find(boxes.begin(), boxes.end(), b) != boxes.end();
}

template <typename Fn>
void for_each_mol_component(AnnotatedDiagram& d, Fn fn) {
  for (auto& rxn : d.reactions) {
    for (auto* role : {&rxn.reactants, &rxn.conditions, &rxn.products}) {
      for (auto& c : *role) {
        if (c.kind == ComponentKind::mol && c.bbox) fn(c);
      }
    }
  }
}

/// Fills diagram.molecules (reading order when the corpus gave none) and
/// stamps each mol component with its 1-based index.
void finalize_indices(AnnotatedDiagram& d, bool molecules_given) {
  if (!molecules_given) {
    std::vector<BBox> boxes;
    for_each_mol_component(d, [&](Component& c) {
      if (!contains_box(boxes, *c.bbox)) boxes.push_back(*c.bbox);
    });
    const auto perm = reading_order(boxes);
    d.molecules.clear();
    d.molecules.reserve(boxes.size());
    for (std::size_t p : perm) d.molecules.push_back(boxes[p]);
  }
  stamp_component_indices(d);
}

AnnotatedDiagram parse_diagram(const json& j, CorpusFormat format, std::size_t record) {
  if (!j.is_object()) fail(record, "(record)", "expected an object");
  AnnotatedDiagram d;
  if (!j.contains("image") || !j["image"].is_string()) fail(record, "image", "missing or not a string");
  d.image.path = j["image"].get<std::string>();
  if (!j.contains("width")) fail(record, "width", "missing");
  d.image.width = require_positive_int(j["width"], record, "width");
  if (!j.contains("height")) fail(record, "height", "missing");
  d.image.height = require_positive_int(j["height"], record, "height");

  if (j.contains("layout")) {
    if (!j["layout"].is_string()) fail(record, "layout", "expected a string");
    try {
      d.layout = layout_from_string(j["layout"].get<std::string>());
    } catch (const ConfigError&) {
      fail(record, "layout", "unknown layout \"" + j["layout"].get<std::string>() + "\"");
    }
  }

  bool molecules_given = false;
  if (j.contains("molecules")) {
    if (!j["molecules"].is_array()) fail(record, "molecules", "expected an array");
    molecules_given = true;
    for (std::size_t i = 0; i < j["molecules"].size(); ++i) {
      d.molecules.push_back(
          parse_bbox(j["molecules"][i], record, "molecules[" + std::to_string(i) + "]"));
    }
  }

  if (!j.contains("reactions") || !j["reactions"].is_array()) {
    fail(record, "reactions", "missing or not an array");
  }
  for (std::size_t i = 0; i < j["reactions"].size(); ++i) {
    d.reactions.push_back(
        parse_reaction(j["reactions"][i], format, record, "reactions[" + std::to_string(i) + "]"));
  }

  finalize_indices(d, molecules_given);
  return d;
}

json bbox_to_json(const BBox& b) { return json::array({b.x1, b.y1, b.x2, b.y2}); }

json component_to_json(const Component& c) {
  json j;
  j["kind"] = to_string(c.kind);
  if (c.bbox) j["bbox"] = bbox_to_json(*c.bbox);
  if (c.content) j["content"] = *c.content;
  return j;
}

json role_to_json(const std::vector<Component>& role) {
  json j = json::array();
  for (const auto& c : role) j.push_back(component_to_json(c));
  return j;
}

}  // namespace

CorpusFormat corpus_format_from_string(const std::string& name) {
  if (name == "rxnscribe") return CorpusFormat::rxnscribe;
  if (name == "rxncaption") return CorpusFormat::rxncaption;
  throw ConfigError("unknown corpus format: " + name);
}

Corpus parse_corpus(const std::string& json_text, CorpusFormat format) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CorpusError(std::string("invalid corpus JSON: ") + e.what());
  }
  if (!root.is_array()) throw CorpusError("corpus root must be a JSON array");
  Corpus corpus;
  corpus.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    corpus.push_back(parse_diagram(root[i], format, i));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), format);
}

std::string corpus_to_json(const Corpus& corpus) {
  json root = json::array();
  for (const auto& d : corpus) {
    json e;
    e["image"] = d.image.path;
    e["width"] = d.image.width;
    e["height"] = d.image.height;
    e["layout"] = to_string(d.layout);
    json mols = json::array();
    for (const auto& b : d.molecules) mols.push_back(bbox_to_json(b));
    e["molecules"] = mols;
    json rxns = json::array();
    for (const auto& r : d.reactions) {
      json jr;
      jr["reactants"] = role_to_json(r.reactants);
      jr["conditions"] = role_to_json(r.conditions);
      jr["products"] = role_to_json(r.products);
      rxns.push_back(jr);
    }
    e["reactions"] = rxns;
    root.push_back(e);
  }
  return root.dump(2) + "\n";
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write corpus file: " + path);
  out << corpus_to_json(corpus);
  if (!out) throw CorpusError("write failed: " + path);
}

void stamp_component_indices(AnnotatedDiagram& diagram) {
  for_each_mol_component(diagram, [&](Component& c) {
    if (!contains_box(diagram.molecules, *c.bbox)) diagram.molecules.push_back(*c.bbox);
  });
  for_each_mol_component(diagram, [&](Component& c) {
    const auto it = std::find(diagram.molecules.begin(), diagram.molecules.end(), *c.bbox);
    c.index = static_cast<int>(it - diagram.molecules.begin()) + 1;
  });
}

Corpus filter_fully_annotated(const Corpus& corpus) {
  Corpus kept;
  for (const auto& d : corpus) {
    std::vector<BBox> used;
    for (const auto& rxn : d.reactions) {
      for (const auto* role : {&rxn.reactants, &rxn.conditions, &rxn.products}) {
        for (const auto& c : *role) {
          if (c.kind == ComponentKind::mol && c.bbox) used.push_back(*c.bbox);
        }
      }
    }
    const bool all_used = std::all_of(d.molecules.begin(), d.molecules.end(),
                                      [&](const BBox& b) { return contains_box(used, b); });
    if (all_used) kept.push_back(d);
  }
  return kept;
}

}  // namespace rxndp
