#include "rxndp/matching.hpp"

#include <algorithm>
#include <functional>

#include "rxndp/errors.hpp"
#include "rxndp/reading_order.hpp"
#include "rxndp/text.hpp"

namespace rxndp {
namespace {

bool component_pair_matches(const Component& gt, const Component& pred, const MatchMode& mode) {
  if (gt.kind != pred.kind) return false;
  const bool both_boxed = gt.bbox && pred.bbox;
  if (gt.kind == ComponentKind::mol) {
    return both_boxed && iou(*gt.bbox, *pred.bbox) > mode.iou_threshold;
  }
  const bool both_content = gt.content && pred.content;
  switch (mode.kind) {
    case MatchKind::soft:
      return false;  // text never survives the soft transform
    case MatchKind::hard:
      // Box overlap when both sides carry boxes; ground truth that stores
      // only text falls back to exact content equality.
      if (both_boxed) return iou(*gt.bbox, *pred.bbox) > mode.iou_threshold;
      if (!gt.bbox && !pred.bbox && both_content) {
        return normalize_text(*gt.content) == normalize_text(*pred.content);
      }
      return false;
    case MatchKind::hybrid:
      if (both_content) return text_match(*gt.content, *pred.content, mode.edit_ratio_threshold);
      if (!gt.content && !pred.content && both_boxed) {
        return iou(*gt.bbox, *pred.bbox) > mode.iou_threshold;
      }
      return false;
  }
  return false;
}

struct TransformedReaction {
  std::vector<Component> reactants;
  std::vector<Component> conditions;
  std::vector<Component> products;
};

TransformedReaction transform(const ReactionAnnotation& rxn, const MatchMode& mode) {
  TransformedReaction out;
  auto keep = [&](const Component& c) {
    if (c.kind == ComponentKind::supplement) return false;
    if (mode.kind == MatchKind::soft && c.kind != ComponentKind::mol) return false;
    return true;
  };
  for (const auto& c : rxn.reactants) {
    if (keep(c)) out.reactants.push_back(c);
  }
  for (const auto& c : rxn.conditions) {
    if (!keep(c)) continue;
    if (mode.kind == MatchKind::soft) out.reactants.push_back(c);
    else out.conditions.push_back(c);
  }
  for (const auto& c : rxn.products) {
    if (keep(c)) out.products.push_back(c);
  }
  return out;
}

bool role_matches(const std::vector<Component>& gt, const std::vector<Component>& pred,
                  const MatchMode& mode) {
  if (gt.size() != pred.size()) return false;
  if (gt.empty()) return true;
  std::vector<std::vector<char>> adj(gt.size(), std::vector<char>(pred.size(), 0));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      adj[i][j] = component_pair_matches(gt[i], pred[j], mode) ? 1 : 0;
    }
  }
  const auto match = max_bipartite_match(adj);
  return std::none_of(match.begin(), match.end(), [](int m) { return m < 0; });
}

struct BoxRole {
  std::vector<std::size_t> reactant_of;  // reaction ordinals using the box as reactant
  std::vector<std::size_t> product_of;
};

bool reaction_digraph_has_cycle(const std::vector<std::vector<std::size_t>>& edges) {
  const std::size_t n = edges.size();
  std::vector<int> color(n, 0);  // 0 unseen, 1 on stack, 2 done
  std::function<bool(std::size_t)> dfs = [&](std::size_t u) {
    color[u] = 1;
    for (std::size_t v : edges[u]) {
      if (color[v] == 1) return true;
      if (color[v] == 0 && dfs(v)) return true;
    }
    color[u] = 2;
    return false;
  };
  for (std::size_t u = 0; u < n; ++u) {
    if (color[u] == 0 && dfs(u)) return true;
  }
  return false;
}

}  // namespace

const char* to_string(MatchKind kind) {
  switch (kind) {
    case MatchKind::soft: return "soft";
    case MatchKind::hard: return "hard";
    case MatchKind::hybrid: return "hybrid";
  }
  return "?";
}

MatchKind match_kind_from_string(const std::string& name) {
  if (name == "soft") return MatchKind::soft;
  if (name == "hard") return MatchKind::hard;
  if (name == "hybrid") return MatchKind::hybrid;
  throw ConfigError("unknown match mode: " + name);
}

void MatchMode::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ConfigError("iou_threshold must be in (0, 1]");
  }
  if (!(edit_ratio_threshold > 0.0 && edit_ratio_threshold <= 1.0)) {
    throw ConfigError("edit_ratio_threshold must be in (0, 1]");
  }
}

double iou(const BBox& a, const BBox& b) {
  const double ix1 = std::max(a.x1, b.x1);
  const double iy1 = std::max(a.y1, b.y1);
  const double ix2 = std::min(a.x2, b.x2);
  const double iy2 = std::min(a.y2, b.y2);
  const double iw = ix2 - ix1;
  const double ih = iy2 - iy1;
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool text_match(const std::string& gt, const std::string& pred, double threshold) {
  return edit_ratio(normalize_text(gt), normalize_text(pred)) <= threshold;
}

bool reaction_matches(const ReactionAnnotation& gt, const ReactionAnnotation& pred,
                      const MatchMode& mode) {
  const TransformedReaction tg = transform(gt, mode);
  const TransformedReaction tp = transform(pred, mode);
  return role_matches(tg.reactants, tp.reactants, mode) &&
         role_matches(tg.conditions, tp.conditions, mode) &&
         role_matches(tg.products, tp.products, mode);
}

std::vector<int> max_bipartite_match(const std::vector<std::vector<char>>& adjacency) {
  const std::size_t n_left = adjacency.size();
  const std::size_t n_right = n_left == 0 ? 0 : adjacency[0].size();
  std::vector<int> match_right(n_right, -1);
  std::vector<char> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t u) {
    for (std::size_t v = 0; v < n_right; ++v) {
      if (!adjacency[u][v] || visited[v]) continue;
      visited[v] = 1;
      if (match_right[v] < 0 || augment(static_cast<std::size_t>(match_right[v]))) {
        match_right[v] = static_cast<int>(u);
        return true;
      }
    }
    return false;
  };
  for (std::size_t u = 0; u < n_left; ++u) {
    visited.assign(n_right, 0);
    augment(u);
  }
  std::vector<int> match_left(n_left, -1);
  for (std::size_t v = 0; v < n_right; ++v) {
    if (match_right[v] >= 0) match_left[static_cast<std::size_t>(match_right[v])] = static_cast<int>(v);
  }
  return match_left;
}

EvalCounts evaluate(const std::vector<ReactionAnnotation>& gt,
                    const std::vector<ReactionAnnotation>& pred, const MatchMode& mode) {
  std::vector<std::vector<char>> adj(gt.size(), std::vector<char>(pred.size(), 0));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      adj[i][j] = reaction_matches(gt[i], pred[j], mode) ? 1 : 0;
    }
  }
  const auto match_left = max_bipartite_match(adj);

  EvalCounts out;
  std::vector<char> pred_taken(pred.size(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (match_left[i] >= 0) {
      out.assignment.pairs.emplace_back(i, static_cast<std::size_t>(match_left[i]));
      pred_taken[static_cast<std::size_t>(match_left[i])] = 1;
    } else {
      out.assignment.unmatched_gt.push_back(i);
    }
  }
  for (std::size_t j = 0; j < pred.size(); ++j) {
    if (!pred_taken[j]) out.assignment.unmatched_pred.push_back(j);
  }
  out.tp = out.assignment.pairs.size();
  out.fp = out.assignment.unmatched_pred.size();
  out.fn = out.assignment.unmatched_gt.size();
  return out;
}

DetectorPR detector_pr(const std::vector<BBox>& gt, const std::vector<BBox>& pred,
                       double iou_threshold) {
  std::vector<std::vector<char>> adj(gt.size(), std::vector<char>(pred.size(), 0));
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < pred.size(); ++j) {
      adj[i][j] = iou(gt[i], pred[j]) > iou_threshold ? 1 : 0;
    }
  }
  const auto match_left = max_bipartite_match(adj);
  DetectorPR out;
  out.matched = static_cast<std::size_t>(
      std::count_if(match_left.begin(), match_left.end(), [](int m) { return m >= 0; }));
  out.precision = pred.empty() ? 1.0 : static_cast<double>(out.matched) / pred.size();
  out.recall = gt.empty() ? 1.0 : static_cast<double>(out.matched) / gt.size();
  return out;
}

Layout classify_layout(const AnnotatedDiagram& diagram) {
  if (diagram.reactions.empty()) return Layout::unknown;

  // Distinct molecule boxes with the reactions they feed and the reactions
  // producing them. Conditions stay out of the graph; catalysts above an
  // arrow neither chain nor branch a scheme.
  std::vector<BBox> boxes;
  std::vector<BoxRole> roles;
  auto slot = [&](const BBox& b) -> BoxRole& {
    const auto it = std::find(boxes.begin(), boxes.end(), b);
    if (it != boxes.end()) return roles[static_cast<std::size_t>(it - boxes.begin())];
    boxes.push_back(b);
    roles.emplace_back();
    return roles.back();
  };
  for (std::size_t r = 0; r < diagram.reactions.size(); ++r) {
    for (const auto& c : diagram.reactions[r].reactants) {
      if (c.kind == ComponentKind::mol && c.bbox) slot(*c.bbox).reactant_of.push_back(r);
    }
    for (const auto& c : diagram.reactions[r].products) {
      if (c.kind == ComponentKind::mol && c.bbox) slot(*c.bbox).product_of.push_back(r);
    }
  }

  std::vector<std::vector<std::size_t>> edges(diagram.reactions.size());
  for (const auto& role : roles) {
    for (std::size_t producer : role.product_of) {
      for (std::size_t consumer : role.reactant_of) {
        if (producer != consumer) edges[producer].push_back(consumer);
      }
    }
  }
  if (reaction_digraph_has_cycle(edges)) return Layout::cyclic;

  for (const auto& role : roles) {
    if (role.reactant_of.size() >= 2 || role.product_of.size() >= 2) return Layout::tree;
  }

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& rxn : diagram.reactions) {
    for (const auto* role : {&rxn.reactants, &rxn.conditions, &rxn.products}) {
      for (const auto& c : *role) {
        if (!c.bbox) continue;
        const double cy = c.bbox->cy();
        if (!any) {
          lo = hi = cy;
          any = true;
        } else {
          lo = std::min(lo, cy);
          hi = std::max(hi, cy);
        }
      }
    }
  }
  if (!any) return Layout::unknown;

  const std::vector<BBox>& mols = diagram.molecules.empty() ? boxes : diagram.molecules;
  const double band = 1.5 * median_box_height(mols);
  return (hi - lo) <= band ? Layout::single_line : Layout::multi_line;
}

}  // namespace rxndp
