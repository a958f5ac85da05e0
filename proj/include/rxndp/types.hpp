#pragma once

#include <compare>
#include <optional>
#include <string>
#include <vector>

namespace rxndp {

/// Axis-aligned box in normalized image coordinates, x toward the right,
/// y toward the bottom. Valid boxes satisfy 0 <= x1 < x2 <= 1 and
/// 0 <= y1 < y2 <= 1 (strictly positive area).
struct BBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }
  double cx() const { return 0.5 * (x1 + x2); }
  double cy() const { return 0.5 * (y1 + y2); }

  bool valid() const {
    return x1 >= 0.0 && y1 >= 0.0 && x2 <= 1.0 && y2 <= 1.0 && x1 < x2 && y1 < y2;
  }

  friend auto operator<=>(const BBox&, const BBox&) = default;
};

enum class ComponentKind { mol, txt, idt, supplement };

const char* to_string(ComponentKind kind);

/// One reaction participant: a molecular box (bbox and/or 1-based index) or a
/// text-like element. Ground truth carries content for text kinds; raw BROS
/// output carries boxes only, so text kinds may hold a bbox instead.
struct Component {
  ComponentKind kind = ComponentKind::mol;
  std::optional<BBox> bbox;
  std::optional<int> index;  // molecule index, 1-based; mol kind only
  std::optional<std::string> content;

  friend auto operator<=>(const Component&, const Component&) = default;

  static Component mol_box(const BBox& box) {
    Component c;
    c.kind = ComponentKind::mol;
    c.bbox = box;
    return c;
  }
  static Component mol_index(int idx) {
    Component c;
    c.kind = ComponentKind::mol;
    c.index = idx;
    return c;
  }
  static Component text(ComponentKind kind, std::string content);
};

/// One reaction: three role lists. At least one of reactants/products must be
/// non-empty for ground truth (model output may break this and gets dropped
/// with a warning counter instead).
struct ReactionAnnotation {
  std::vector<Component> reactants;
  std::vector<Component> conditions;
  std::vector<Component> products;

  friend auto operator<=>(const ReactionAnnotation&, const ReactionAnnotation&) = default;
};

enum class Layout { single_line, multi_line, tree, cyclic, unknown };

const char* to_string(Layout layout);
Layout layout_from_string(const std::string& name);

struct ImageRef {
  std::string path;
  int width = 0;
  int height = 0;

  friend auto operator<=>(const ImageRef&, const ImageRef&) = default;
};

/// One diagram with its full annotation; the unit of corpora. `molecules`
/// holds every molecule box in the diagram (free molecules included) in
/// index order: molecules[i] is molecule index i+1.
struct AnnotatedDiagram {
  ImageRef image;
  std::vector<BBox> molecules;
  std::vector<ReactionAnnotation> reactions;
  Layout layout = Layout::unknown;

  friend auto operator<=>(const AnnotatedDiagram&, const AnnotatedDiagram&) = default;
};

using Corpus = std::vector<AnnotatedDiagram>;

}  // namespace rxndp
