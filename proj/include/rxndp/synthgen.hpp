#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rxndp/raster.hpp"
#include "rxndp/types.hpp"

namespace rxndp {

/// One reaction in glyph-id space, before any geometry exists. Glyph ids
/// index DiagramSpec::molecule_shapes; a shared id is the same molecule.
struct AbstractReaction {
  std::vector<int> reactant_glyphs;
  std::vector<int> condition_glyphs;        // 0 or 1
  std::vector<std::string> condition_texts;  // 0 or 1, from the fixed vocabulary
  std::vector<int> product_glyphs;
  std::vector<std::string> product_identifiers;  // 0 or 1, e.g. "3a"
};

struct DiagramSpec {
  std::uint64_t seed = 0;
  Layout layout = Layout::single_line;
  std::vector<AbstractReaction> reactions;
  std::vector<int> molecule_shapes;  // glyph id -> shape index
  std::vector<int> free_glyphs;      // molecules outside every reaction
  int canvas_width = 1024;
  int canvas_height = 768;
};

struct SynthOptions {
  int canvas_width = 1024;
  int canvas_height = 768;
  double p_extra_reactant = 0.35;
  double p_second_product = 0.25;  // independent multi-line rows only
  double p_condition_text = 0.7;
  double p_condition_mol = 0.25;
  double p_identifier = 0.4;
  double p_free_molecule = 0.3;
};

int glyph_shape_count();
const std::vector<std::string>& condition_vocabulary();

/// Deterministic in (seed, layout, n_reactions, options). Cyclic and tree
/// layouts need at least two reactions to be realizable.
DiagramSpec generate_spec(std::uint64_t seed, Layout layout, int n_reactions,
                          const SynthOptions& options = {});

struct RenderedDiagram {
  AnnotatedDiagram diagram;
  Image image;
};

/// Draws the spec on a white canvas. Ground-truth boxes are taken from the
/// painted ink (one pixel of margin), so they tightly contain each glyph.
RenderedDiagram render_spec(const DiagramSpec& spec);

/// Balanced corpus: 4 * per_layout_count diagrams cycling through the
/// layouts, PNGs plus corpus.json under out_dir. Returns the corpus with
/// image paths relative to out_dir.
Corpus generate_corpus(std::uint64_t seed, int per_layout_count, const std::string& out_dir,
                       const SynthOptions& options = {});

std::string corpus_manifest_hash(const Corpus& corpus);

}  // namespace rxndp
