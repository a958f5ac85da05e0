#pragma once

#include <string>

#include "rxndp/types.hpp"

namespace rxndp {

enum class CorpusFormat { rxnscribe, rxncaption };

CorpusFormat corpus_format_from_string(const std::string& name);

/// Parses corpus JSON text. Throws CorpusError naming the record ordinal and
/// field on any schema or invariant breach. Molecule indices are assigned
/// from the diagram's molecule list (reading order when the list is absent).
Corpus parse_corpus(const std::string& json_text, CorpusFormat format);

Corpus load_corpus(const std::string& path, CorpusFormat format);

/// Serializes to the rxncaption layout. Text components keep whichever of
/// bbox/content they carry so rxnscribe-loaded corpora survive a round trip.
std::string corpus_to_json(const Corpus& corpus);

void save_corpus(const Corpus& corpus, const std::string& path);

/// Keeps only diagrams where every molecule box participates in at least one
/// reaction, i.e. no free molecules.
Corpus filter_fully_annotated(const Corpus& corpus);

/// Sets every reaction mol component's 1-based index from its position in
/// diagram.molecules; boxes missing from the list are appended first.
void stamp_component_indices(AnnotatedDiagram& diagram);

}  // namespace rxndp
