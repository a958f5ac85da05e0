#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rxndp/types.hpp"

namespace rxndp {

enum class Strategy { bros, bivp };

const char* to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);

using IndexMap = std::map<int, BBox>;

/// Model reply after decoding. `reactions` mirrors the reply; under bivp the
/// mol components carry indices awaiting resolve_bivp. Replies may contain
/// reactions with no reactants and no products; those are dropped and
/// counted rather than treated as fatal.
struct ParsedOutput {
  Strategy strategy = Strategy::bros;
  std::string raw;
  std::vector<ReactionAnnotation> reactions;
  int dropped_empty = 0;
};

/// Finds the first well-formed top-level JSON array in free-form model text,
/// ignoring markdown code fences and surrounding prose. Exposed for tests.
std::optional<std::string> extract_first_json_array(const std::string& raw);

ParsedOutput parse_bros_output(const std::string& raw);
ParsedOutput parse_bivp_output(const std::string& raw);

/// Replaces every mol index with its bbox from the render-time index map.
/// Indices stay on the components for traceability. Throws on an index the
/// map does not contain.
std::vector<ReactionAnnotation> resolve_bivp(const ParsedOutput& output, const IndexMap& index_map);

}  // namespace rxndp
