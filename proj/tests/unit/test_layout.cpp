#include <doctest.h>

#include "rxndp/errors.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/types.hpp"

#include "test_util.hpp"

using namespace rxndp;
using test::box;

namespace {

AnnotatedDiagram diagram_with(std::vector<ReactionAnnotation> reactions) {
  AnnotatedDiagram d;
  d.image.width = 1000;
  d.image.height = 1000;
  d.reactions = std::move(reactions);
  for (const auto& rxn : d.reactions) {
    for (const auto* role : {&rxn.reactants, &rxn.conditions, &rxn.products}) {
      for (const auto& c : *role) {
        if (c.kind != ComponentKind::mol || !c.bbox) continue;
        if (std::find(d.molecules.begin(), d.molecules.end(), *c.bbox) == d.molecules.end()) {
          d.molecules.push_back(*c.bbox);
        }
      }
    }
  }
  return d;
}

ReactionAnnotation arrow(const BBox& from, const BBox& to) {
  ReactionAnnotation r;
  r.reactants.push_back(Component::mol_box(from));
  r.products.push_back(Component::mol_box(to));
  return r;
}

}  // namespace

TEST_CASE("no reactions means unknown") {
  AnnotatedDiagram d;
  d.molecules.push_back(box(0.1, 0.1, 0.2, 0.2));
  CHECK(classify_layout(d) == Layout::unknown);
}

TEST_CASE("one reaction on one band is single-line") {
  // all y-centers within 0.1 of each other
  const AnnotatedDiagram d =
      diagram_with({arrow(box(0.05, 0.42, 0.2, 0.6), box(0.6, 0.4, 0.75, 0.62))});
  CHECK(classify_layout(d) == Layout::single_line);
}

TEST_CASE("a chain spilling over the band is multi-line") {
  const BBox a = box(0.1, 0.05, 0.25, 0.2);
  const BBox b = box(0.6, 0.05, 0.75, 0.2);
  const BBox c = box(0.6, 0.7, 0.75, 0.85);
  const AnnotatedDiagram d = diagram_with({arrow(a, b), arrow(b, c)});
  CHECK(classify_layout(d) == Layout::multi_line);
}

TEST_CASE("the single-line band scales with the median molecule height") {
  // heights 0.2; rows 0.25 apart stay inside 1.5 * 0.2, rows 0.4 apart do not
  const BBox a = box(0.1, 0.1, 0.25, 0.3);
  const BBox b = box(0.6, 0.35, 0.75, 0.55);
  CHECK(classify_layout(diagram_with({arrow(a, b)})) == Layout::single_line);

  const BBox c = box(0.6, 0.5, 0.75, 0.7);
  CHECK(classify_layout(diagram_with({arrow(a, c)})) == Layout::multi_line);
}

TEST_CASE("a two-cycle is cyclic") {
  const BBox a = box(0.1, 0.1, 0.25, 0.25);
  const BBox b = box(0.6, 0.6, 0.75, 0.75);
  const AnnotatedDiagram d = diagram_with({arrow(a, b), arrow(b, a)});
  CHECK(classify_layout(d) == Layout::cyclic);
}

TEST_CASE("a three-cycle is cyclic even with extra feeders") {
  const BBox a = box(0.1, 0.1, 0.2, 0.2);
  const BBox b = box(0.6, 0.1, 0.7, 0.2);
  const BBox c = box(0.35, 0.6, 0.45, 0.7);
  const AnnotatedDiagram d = diagram_with({arrow(a, b), arrow(b, c), arrow(c, a)});
  CHECK(classify_layout(d) == Layout::cyclic);
}

TEST_CASE("one reactant feeding two reactions is a tree") {
  const BBox root = box(0.1, 0.4, 0.25, 0.55);
  const BBox p1 = box(0.6, 0.1, 0.75, 0.25);
  const BBox p2 = box(0.6, 0.7, 0.75, 0.85);
  const AnnotatedDiagram d = diagram_with({arrow(root, p1), arrow(root, p2)});
  CHECK(classify_layout(d) == Layout::tree);
}

TEST_CASE("one product fed by two reactions is a tree") {
  const BBox a = box(0.1, 0.1, 0.25, 0.25);
  const BBox b = box(0.1, 0.7, 0.25, 0.85);
  const BBox sink = box(0.6, 0.4, 0.75, 0.55);
  const AnnotatedDiagram d = diagram_with({arrow(a, sink), arrow(b, sink)});
  CHECK(classify_layout(d) == Layout::tree);
}

TEST_CASE("cyclic takes precedence over tree") {
  const BBox a = box(0.1, 0.1, 0.2, 0.2);
  const BBox b = box(0.6, 0.1, 0.7, 0.2);
  const BBox c = box(0.35, 0.6, 0.45, 0.7);
  // a cycle a->b->a plus a branch a->c (out-degree 2 on a)
  const AnnotatedDiagram d = diagram_with({arrow(a, b), arrow(b, a), arrow(a, c)});
  CHECK(classify_layout(d) == Layout::cyclic);
}

TEST_CASE("condition molecules do not join the reaction graph") {
  const BBox a = box(0.1, 0.4, 0.25, 0.55);
  const BBox b = box(0.6, 0.4, 0.75, 0.55);
  const BBox catalyst = box(0.38, 0.1, 0.48, 0.2);
  ReactionAnnotation r1 = arrow(a, b);
  r1.conditions.push_back(Component::mol_box(catalyst));
  ReactionAnnotation r2 = arrow(b, catalyst);
  // were conditions graph nodes, catalyst -> r1 -> r2 -> catalyst would cycle
  const AnnotatedDiagram d = diagram_with({r1, r2});
  CHECK(classify_layout(d) == Layout::multi_line);
}

TEST_CASE("layout names round trip") {
  for (Layout layout : {Layout::single_line, Layout::multi_line, Layout::tree, Layout::cyclic,
                        Layout::unknown}) {
    CHECK(layout_from_string(to_string(layout)) == layout);
  }
  CHECK_THROWS_AS(layout_from_string("spiral"), ConfigError);
}
