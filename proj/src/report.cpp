#include "rxndp/report.hpp"

namespace rxndp {

double precision_of(std::size_t tp, std::size_t fp) {
  return tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 1.0;
}

double recall_of(std::size_t tp, std::size_t fn) {
  return tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 1.0;
}

double f1_of(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

MatchReport aggregate(const std::vector<DiagramResult>& results, MatchKind mode) {
  MatchReport report;
  report.mode = mode;
  for (const auto& r : results) {
    report.tp += r.tp;
    report.fp += r.fp;
    report.fn += r.fn;
    auto& slice = report.per_layout[r.layout];
    slice.tp += r.tp;
    slice.fp += r.fp;
    slice.fn += r.fn;
  }
  report.precision = precision_of(report.tp, report.fp);
  report.recall = recall_of(report.tp, report.fn);
  report.f1 = f1_of(report.precision, report.recall);
  return report;
}

MacroScores macro_scores(const MatchReport& report) {
  MacroScores out;
  if (report.per_layout.empty()) return out;
  double p = 0.0, r = 0.0, f = 0.0;
  for (const auto& [layout, c] : report.per_layout) {
    const double lp = precision_of(c.tp, c.fp);
    const double lr = recall_of(c.tp, c.fn);
    p += lp;
    r += lr;
    f += f1_of(lp, lr);
  }
  const double n = static_cast<double>(report.per_layout.size());
  out.precision = p / n;
  out.recall = r / n;
  out.f1 = f / n;
  return out;
}

}  // namespace rxndp
