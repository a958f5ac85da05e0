#include "rxndp/types.hpp"

#include "rxndp/errors.hpp"

namespace rxndp {

const char* to_string(ComponentKind kind) {
  switch (kind) {
    case ComponentKind::mol: return "mol";
    case ComponentKind::txt: return "txt";
    case ComponentKind::idt: return "idt";
    case ComponentKind::supplement: return "supplement";
  }
  return "?";
}

Component Component::text(ComponentKind kind, std::string content) {
  Component c;
  c.kind = kind;
  c.content = std::move(content);
  return c;
}

const char* to_string(Layout layout) {
  switch (layout) {
    case Layout::single_line: return "single-line";
    case Layout::multi_line: return "multi-line";
    case Layout::tree: return "tree";
    case Layout::cyclic: return "cyclic";
    case Layout::unknown: return "unknown";
  }
  return "?";
}

Layout layout_from_string(const std::string& name) {
  if (name == "single-line" || name == "single_line") return Layout::single_line;
  if (name == "multi-line" || name == "multi_line") return Layout::multi_line;
  if (name == "tree") return Layout::tree;
  if (name == "cyclic") return Layout::cyclic;
  if (name == "unknown") return Layout::unknown;
  throw ConfigError("unknown layout name: " + name);
}

}  // namespace rxndp
