#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rxndp/types.hpp"

namespace rxndp {

enum class MatchKind { soft, hard, hybrid };

const char* to_string(MatchKind kind);
MatchKind match_kind_from_string(const std::string& name);

struct MatchMode {
  MatchKind kind = MatchKind::soft;
  double iou_threshold = 0.5;
  double edit_ratio_threshold = 0.2;

  void validate() const;  // thresholds must lie in (0, 1]
};

double iou(const BBox& a, const BBox& b);

/// True iff the edit-distance ratio between the normalized strings is at or
/// below the threshold. The denominator is the longer codepoint length.
bool text_match(const std::string& gt, const std::string& pred, double threshold);

/// Perfect per-role component matching under the mode's transformation:
/// supplement components are always dropped; soft additionally drops text
/// and folds condition components into the reactants.
bool reaction_matches(const ReactionAnnotation& gt, const ReactionAnnotation& pred,
                      const MatchMode& mode);

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (gt ordinal, pred ordinal)
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
};

struct EvalCounts {
  Assignment assignment;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

EvalCounts evaluate(const std::vector<ReactionAnnotation>& gt,
                    const std::vector<ReactionAnnotation>& pred, const MatchMode& mode);

/// Maximum-cardinality bipartite matching via augmenting paths. adjacency is
/// indexed [left][right]; returns the matched right index per left node or
/// -1. Left nodes are processed in ascending order and right candidates
/// scanned in ascending order, so ties resolve to the lowest ordinals.
std::vector<int> max_bipartite_match(const std::vector<std::vector<char>>& adjacency);

struct DetectorPR {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t matched = 0;
};

DetectorPR detector_pr(const std::vector<BBox>& gt, const std::vector<BBox>& pred,
                       double iou_threshold = 0.5);

/// Layout from reaction geometry: cyclic when the reaction digraph (product
/// box feeding a later reaction's reactants) has a cycle; tree when some
/// molecule box is a reactant of two reactions or a product of two; else a
/// chain, split single/multi-line by whether every bboxed component's
/// y-center fits in one band of 1.5 x the median molecule height.
Layout classify_layout(const AnnotatedDiagram& diagram);

}  // namespace rxndp
