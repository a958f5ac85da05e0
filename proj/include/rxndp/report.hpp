#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "rxndp/matching.hpp"
#include "rxndp/types.hpp"

namespace rxndp {

// Empty-denominator conventions: perfect score when nothing could be wrong,
// zero F1 when both rates vanish.
double precision_of(std::size_t tp, std::size_t fp);
double recall_of(std::size_t tp, std::size_t fn);
double f1_of(double precision, double recall);

struct LayoutCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// One diagram's contribution to a corpus score.
struct DiagramResult {
  Layout layout = Layout::unknown;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct MatchReport {
  MatchKind mode = MatchKind::soft;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
  std::map<Layout, LayoutCounts> per_layout;
};

/// Micro aggregation: counts summed over the corpus, rates from the sums.
MatchReport aggregate(const std::vector<DiagramResult>& results, MatchKind mode);

struct MacroScores {
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 1.0;
};

/// Unweighted mean of the per-layout rates present in the report.
MacroScores macro_scores(const MatchReport& report);

}  // namespace rxndp
