#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "rxndp/types.hpp"

namespace rxndp {

inline double median_box_height(const std::vector<BBox>& boxes) {
  if (boxes.empty()) return 0.0;
  std::vector<double> hs;
  hs.reserve(boxes.size());
  for (const auto& b : boxes) hs.push_back(b.height());
  std::sort(hs.begin(), hs.end());
  const std::size_t n = hs.size();
  if (n % 2 == 1) return hs[n / 2];
  return 0.5 * (hs[n / 2 - 1] + hs[n / 2]);
}

/// Permutation putting boxes into reading order: rows first (y-center
/// quantized by the median box height), left to right within a row. Ties
/// fall back to the raw coordinates so the result is a pure function of the
/// box set, independent of input order.
inline std::vector<std::size_t> reading_order(const std::vector<BBox>& boxes) {
  std::vector<std::size_t> perm(boxes.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  if (boxes.size() < 2) return perm;
  const double band = std::max(median_box_height(boxes), 1e-9);
  auto row_of = [&](const BBox& b) { return std::floor(b.cy() / band); };
  std::sort(perm.begin(), perm.end(), [&](std::size_t i, std::size_t j) {
    const BBox& a = boxes[i];
    const BBox& b = boxes[j];
    const double ra = row_of(a), rb = row_of(b);
    if (ra != rb) return ra < rb;
    if (a.cx() != b.cx()) return a.cx() < b.cx();
    return std::tie(a.y1, a.x1, a.y2, a.x2) < std::tie(b.y1, b.x1, b.y2, b.x2);
  });
  return perm;
}

}  // namespace rxndp
