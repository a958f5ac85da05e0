#include "rxndp/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "rxndp/bitmap_font.hpp"
#include "rxndp/corpus.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/rng.hpp"
#include "rxndp/visual_prompt.hpp"

namespace rxndp {
namespace {

constexpr int kMargin = 24;
constexpr int kRowPitch = 180;
constexpr int kJointGap = 10;   // clearance between any two inked elements
constexpr int kCornerGap = 8;   // break at connector corners
constexpr int kInkThickness = 2;
constexpr int kTextCell = 2;
constexpr int kPlusCell = 3;

// Control points in [0,1]^2; every shape is one connected stroke set and
// touches all four sides so the drawn glyph nearly fills its tile.
struct ShapeDef {
  std::vector<std::vector<std::pair<double, double>>> lines;
  std::vector<bool> closed;
};

const std::vector<ShapeDef>& shape_library() {
  static const std::vector<ShapeDef> shapes = {
      // hexagon ring
      {{{{0.5, 0}, {1, 0.25}, {1, 0.75}, {0.5, 1}, {0, 0.75}, {0, 0.25}}}, {true}},
      // hexagon with an inner chord
      {{{{0.5, 0}, {1, 0.25}, {1, 0.75}, {0.5, 1}, {0, 0.75}, {0, 0.25}},
        {{1, 0.25}, {0.55, 0.5}, {1, 0.75}}},
       {true, false}},
      // fused six-rings
      {{{{0.25, 0}, {0.5, 0.2}, {0.5, 0.8}, {0.25, 1}, {0, 0.8}, {0, 0.2}},
        {{0.75, 0}, {1, 0.2}, {1, 0.8}, {0.75, 1}, {0.5, 0.8}, {0.5, 0.2}}},
       {true, true}},
      // zig-zag chain
      {{{{0, 1}, {0.2, 0}, {0.4, 1}, {0.6, 0}, {0.8, 1}, {1, 0}}}, {false}},
      // chain with a vertical branch
      {{{{0, 1}, {0.25, 0.2}, {0.5, 1}, {0.75, 0.2}, {1, 1}}, {{0.5, 1}, {0.5, 0}}},
       {false, false}},
      // triangle ring with a tail
      {{{{0, 1}, {0.45, 0}, {0.9, 1}}, {{0.9, 1}, {1, 0.55}}}, {true, false}},
      // square ring with a diagonal
      {{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 0}, {1, 1}}}, {true, false}},
      // pentagon ring
      {{{{0.5, 0}, {1, 0.4}, {0.8, 1}, {0.2, 1}, {0, 0.4}}}, {true}},
      // long chain
      {{{{0, 0}, {0.17, 1}, {0.33, 0}, {0.5, 1}, {0.67, 0}, {0.83, 1}, {1, 0}}}, {false}},
      // cross
      {{{{0, 0.5}, {1, 0.5}}, {{0.5, 0}, {0.5, 1}}}, {false, false}},
      // diamond ring
      {{{{0.5, 0}, {1, 0.5}, {0.5, 1}, {0, 0.5}}}, {true}},
      // ring with a chain tail
      {{{{0.35, 0.1}, {0.7, 0.32}, {0.7, 0.75}, {0.35, 1}, {0, 0.75}, {0, 0.32}},
        {{0.7, 0.32}, {0.85, 0}, {1, 0.35}}},
       {true, false}},
  };
  return shapes;
}

const std::vector<std::string>& vocab() {
  static const std::vector<std::string> v = {
      "NaH THF",     "Pd/C, H2",     "H2O, 25°C",   "DMF, 80°C",
      "EtOH, reflux", "K2CO3, DMSO",  "TFA, DCM",    "LiAlH4, Et2O",
      "NaOH, MeOH",  "AcOH, 100°C", "Et3N, rt",    "TiCl4, -78°C",
  };
  return v;
}

struct PixelRect {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // half-open

  int w() const { return x2 - x1; }
  int h() const { return y2 - y1; }
  int cx() const { return (x1 + x2) / 2; }
  int cy() const { return (y1 + y2) / 2; }
};

struct MolPlacement {
  int glyph_id = 0;
  PixelRect tile;
};

struct TextPlacement {
  std::string text;
  int x = 0, y = 0;
  int cell = kTextCell;
};

struct Segment {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  bool head = false;  // arrowhead at (x2, y2)
};

struct Plan {
  std::vector<MolPlacement> mols;
  std::vector<TextPlacement> texts;
  std::vector<Segment> segments;
};

struct Build {
  const DiagramSpec& spec;
  Rng rng;
  std::vector<std::pair<int, int>> tile_size;  // glyph id -> (w, h)
  Plan plan;
  int W = 0, H = 0;

  void place(int id, int cx, int cy) {
    const auto [w, h] = tile_size[static_cast<std::size_t>(id)];
    plan.mols.push_back({id, {cx - w / 2, cy - h / 2, cx - w / 2 + w, cy - h / 2 + h}});
  }

  [[noreturn]] void overflow() const {
    throw RenderError("canvas too small for requested reaction count");
  }

  void check_x(int x) const {
    if (x > W - kMargin) overflow();
  }
};

int ident_width(const std::string& s) { return text_width_px(s, kTextCell); }

/// Lays one reaction left to right on a baseline. skip_first skips placing
/// reactant 0 (the shared molecule of a chain). Returns the new cursor.
int build_inline_reaction(Build& b, const AbstractReaction& rxn, int x, int baseline,
                          bool skip_first) {
  auto tile_w = [&](int id) { return b.tile_size[static_cast<std::size_t>(id)].first; };
  auto tile_h = [&](int id) { return b.tile_size[static_cast<std::size_t>(id)].second; };

  auto place_group = [&](const std::vector<int>& ids, bool skip_head) {
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (k == 0 && skip_head) continue;
      if (k > 0 || skip_head) {
        const int pw = text_width_px("+", kPlusCell);
        b.plan.texts.push_back({"+", x + kJointGap, baseline - text_height_px(kPlusCell) / 2,
                                kPlusCell});
        x += kJointGap + pw + kJointGap;
      }
      const int w = tile_w(ids[k]);
      b.place(ids[k], x + w / 2, baseline);
      x += w;
      b.check_x(x);
    }
  };

  place_group(rxn.reactant_glyphs, skip_first);

  const std::string cond = rxn.condition_texts.empty() ? "" : rxn.condition_texts[0];
  const int tw = cond.empty() ? 0 : text_width_px(cond, kTextCell);
  const int alen = std::max(70 + b.rng.uniform_int(0, 40), tw + 16);
  const int ax1 = x + kJointGap;
  const int ax2 = ax1 + alen;
  b.plan.segments.push_back({ax1, baseline, ax2, baseline, true});
  int stack_bottom = baseline - 12;  // next free y above the arrow
  if (!cond.empty()) {
    const int ty = stack_bottom - text_height_px(kTextCell);
    b.plan.texts.push_back({cond, (ax1 + ax2) / 2 - tw / 2, ty, kTextCell});
    stack_bottom = ty - kJointGap;
  }
  if (!rxn.condition_glyphs.empty()) {
    const int id = rxn.condition_glyphs[0];
    const int h = tile_h(id);
    b.place(id, (ax1 + ax2) / 2, stack_bottom - h + h / 2);  // tile bottom at stack_bottom
  }
  x = ax2 + kJointGap;
  b.check_x(x);

  place_group(rxn.product_glyphs, false);

  if (!rxn.product_identifiers.empty()) {
    const int pid = rxn.product_glyphs[0];
    const MolPlacement* pm = nullptr;
    for (const auto& m : b.plan.mols) {
      if (m.glyph_id == pid) pm = &m;
    }
    const std::string& ident = rxn.product_identifiers[0];
    b.plan.texts.push_back({ident, pm->tile.cx() - ident_width(ident) / 2,
                            pm->tile.y2 + kJointGap, kTextCell});
  }
  return x;
}

void build_single_line(Build& b) {
  const int lo = 110;
  const int hi = b.H - 158;
  if (hi < lo) b.overflow();
  const int baseline = lo + b.rng.uniform_int(0, hi - lo);
  int x = kMargin + b.rng.uniform_int(0, 16);
  for (std::size_t r = 0; r < b.spec.reactions.size(); ++r) {
    x = build_inline_reaction(b, b.spec.reactions[r], x, baseline, r > 0);
  }
}

void build_multi_line(Build& b) {
  const int y0 = 110;
  if (b.spec.reactions.size() == 1) {
    const int y1 = y0 + kRowPitch;
    if (y1 + 60 > b.H - 98) b.overflow();
    const auto& rxn = b.spec.reactions[0];
    int x = kMargin + b.rng.uniform_int(0, 40);
    // reactants on the top row
    for (std::size_t k = 0; k < rxn.reactant_glyphs.size(); ++k) {
      if (k > 0) {
        const int pw = text_width_px("+", kPlusCell);
        b.plan.texts.push_back({"+", x + kJointGap, y0 - text_height_px(kPlusCell) / 2,
                                kPlusCell});
        x += kJointGap + pw + kJointGap;
      }
      const int w = b.tile_size[static_cast<std::size_t>(rxn.reactant_glyphs[k])].first;
      b.place(rxn.reactant_glyphs[k], x + w / 2, y0);
      x += w;
      b.check_x(x);
    }
    // elbow: short shelf, a broken drop, then the arrow into the product row
    const int xc = x + kJointGap + 40 + kCornerGap;
    b.plan.segments.push_back({x + kJointGap, y0, xc - kCornerGap, y0, false});
    b.plan.segments.push_back({xc, y0 + kCornerGap, xc, y1 - kCornerGap, false});
    const std::string cond = rxn.condition_texts.empty() ? "" : rxn.condition_texts[0];
    const int tw = cond.empty() ? 0 : text_width_px(cond, kTextCell);
    const int alen = std::max(60 + b.rng.uniform_int(0, 30), tw + 16);
    const int ax1 = xc + kCornerGap;
    b.plan.segments.push_back({ax1, y1, ax1 + alen, y1, true});
    if (!cond.empty()) {
      b.plan.texts.push_back({cond, (2 * ax1 + alen) / 2 - tw / 2,
                              y1 - 12 - text_height_px(kTextCell), kTextCell});
    }
    int px = ax1 + alen + kJointGap;
    const int pid = rxn.product_glyphs[0];
    const int pw2 = b.tile_size[static_cast<std::size_t>(pid)].first;
    b.place(pid, px + pw2 / 2, y1);
    px += pw2;
    b.check_x(px);
    if (!rxn.product_identifiers.empty()) {
      const auto& tile = b.plan.mols.back().tile;
      const std::string& ident = rxn.product_identifiers[0];
      b.plan.texts.push_back({ident, tile.cx() - ident_width(ident) / 2, tile.y2 + kJointGap,
                              kTextCell});
    }
    return;
  }
  const int n = static_cast<int>(b.spec.reactions.size());
  if (y0 + kRowPitch * (n - 1) + 60 > b.H - 98) b.overflow();
  for (int r = 0; r < n; ++r) {
    const int baseline = y0 + kRowPitch * r;
    const int x = kMargin + b.rng.uniform_int(0, 40);
    build_inline_reaction(b, b.spec.reactions[static_cast<std::size_t>(r)], x, baseline, false);
  }
}

void build_tree(Build& b) {
  const int n = static_cast<int>(b.spec.reactions.size());
  const int cy = b.H / 2;
  if (cy - kRowPitch * (n - 1) / 2 - 84 < kMargin ||
      cy + kRowPitch * (n - 1) / 2 + 60 > b.H - kMargin) {
    b.overflow();
  }
  const int root = b.spec.reactions[0].reactant_glyphs[0];
  const int rw = b.tile_size[static_cast<std::size_t>(root)].first;
  const int rx = kMargin + b.rng.uniform_int(0, 30);
  b.place(root, rx + rw / 2, cy);
  const PixelRect a = b.plan.mols.back().tile;

  // Separate fan-out columns so no two connectors share ink
  int max_corner = 0;
  std::vector<int> exit_y(static_cast<std::size_t>(n));
  std::vector<int> corner_x(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    exit_y[static_cast<std::size_t>(k)] = cy + (2 * k - (n - 1)) * 7;
    corner_x[static_cast<std::size_t>(k)] = a.x2 + 26 + 14 * k;
    max_corner = std::max(max_corner, corner_x[static_cast<std::size_t>(k)]);
  }
  const int arrow_start = max_corner + kCornerGap;
  const int px_col = arrow_start + 60 + b.rng.uniform_int(0, 30) + kJointGap;

  for (int k = 0; k < n; ++k) {
    const int row = cy + (2 * k - (n - 1)) * (kRowPitch / 2);
    const int ey = exit_y[static_cast<std::size_t>(k)];
    const int xk = corner_x[static_cast<std::size_t>(k)];
    if (std::abs(row - ey) < 20) {
      b.plan.segments.push_back({a.x2 + kJointGap, row, px_col - kJointGap, row, true});
    } else {
      b.plan.segments.push_back({a.x2 + kJointGap, ey, xk - kCornerGap, ey, false});
      const int vy1 = ey < row ? ey + kCornerGap : ey - kCornerGap;
      const int vy2 = ey < row ? row - kCornerGap : row + kCornerGap;
      b.plan.segments.push_back({xk, vy1, xk, vy2, false});
      b.plan.segments.push_back({xk + kCornerGap, row, px_col - kJointGap, row, true});
    }
    const int pid = b.spec.reactions[static_cast<std::size_t>(k)].product_glyphs[0];
    const int pw = b.tile_size[static_cast<std::size_t>(pid)].first;
    b.place(pid, px_col + pw / 2, row);
    b.check_x(px_col + pw);
    const auto& rxn = b.spec.reactions[static_cast<std::size_t>(k)];
    if (!rxn.product_identifiers.empty()) {
      const auto& tile = b.plan.mols.back().tile;
      const std::string& ident = rxn.product_identifiers[0];
      b.plan.texts.push_back({ident, tile.cx() - ident_width(ident) / 2, tile.y2 + kJointGap,
                              kTextCell});
    }
  }
}

void build_cyclic(Build& b) {
  const int n = static_cast<int>(b.spec.reactions.size());
  std::vector<int> ids;
  for (const auto& rxn : b.spec.reactions) ids.push_back(rxn.reactant_glyphs[0]);

  const int cx = b.W / 2;
  const int cy = b.H / 2;
  if (n == 2) {
    const int half = 140 + b.rng.uniform_int(0, 20);
    b.place(ids[0], cx - half, cy);
    const PixelRect ta = b.plan.mols.back().tile;
    b.place(ids[1], cx + half, cy);
    const PixelRect tb = b.plan.mols.back().tile;
    b.plan.segments.push_back({ta.x2 + kJointGap, cy - 16, tb.x1 - kJointGap, cy - 16, true});
    b.plan.segments.push_back({tb.x1 - kJointGap, cy + 16, ta.x2 + kJointGap, cy + 16, true});
    return;
  }

  const int radius = std::min(230, std::min(b.W, b.H) / 2 - 70);
  if (radius < 90) b.overflow();
  std::vector<PixelRect> tiles(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double th = -1.5707963267948966 + 2.0 * 3.141592653589793 * k / n;
    const int mx = cx + static_cast<int>(std::lround(radius * std::cos(th)));
    const int my = cy + static_cast<int>(std::lround(radius * std::sin(th)));
    b.place(ids[static_cast<std::size_t>(k)], mx, my);
    tiles[static_cast<std::size_t>(k)] = b.plan.mols.back().tile;
  }
  for (int k = 0; k < n; ++k) {
    const PixelRect& mi = tiles[static_cast<std::size_t>(k)];
    const PixelRect& mj = tiles[static_cast<std::size_t>((k + 1) % n)];
    if (std::abs(mi.cy() - mj.cy()) < 24) {
      // facing pair: one straight arrow, dropped slightly below the centers
      const int y = mi.cy() + 18;
      if (mj.cx() > mi.cx()) {
        b.plan.segments.push_back({mi.x2 + kJointGap, y, mj.x1 - kJointGap, y, true});
      } else {
        b.plan.segments.push_back({mi.x1 - kJointGap, y, mj.x2 + kJointGap, y, true});
      }
      continue;
    }
    if (std::abs(mi.cx() - mj.cx()) < 24) {
      const int x = mi.cx();
      if (mj.cy() > mi.cy()) {
        b.plan.segments.push_back({x, mi.y2 + kJointGap, x, mj.y1 - kJointGap, true});
      } else {
        b.plan.segments.push_back({x, mi.y1 - kJointGap, x, mj.y2 + kJointGap, true});
      }
      continue;
    }
    // horizontal exit above the source's center line, then a vertical drop
    const int ey = mi.cy() - 18;
    const int corner_x = mj.cx();
    if (corner_x > mi.cx()) {
      b.plan.segments.push_back({mi.x2 + kJointGap, ey, corner_x - kCornerGap, ey, false});
    } else {
      b.plan.segments.push_back({mi.x1 - kJointGap, ey, corner_x + kCornerGap, ey, false});
    }
    if (mj.cy() > ey) {
      b.plan.segments.push_back({corner_x, ey + kCornerGap, corner_x, mj.y1 - kJointGap, true});
    } else {
      b.plan.segments.push_back({corner_x, ey - kCornerGap, corner_x, mj.y2 + kJointGap, true});
    }
  }
}

void build_free_molecules(Build& b) {
  for (int id : b.spec.free_glyphs) {
    const auto [w, h] = b.tile_size[static_cast<std::size_t>(id)];
    const int x = b.W - kMargin - w - b.rng.uniform_int(0, 8);
    const int y = b.H - kMargin - h - b.rng.uniform_int(0, 8);
    b.plan.mols.push_back({id, {x, y, x + w, y + h}});
  }
}

PixelRect draw_glyph(Image& img, const PixelRect& tile, const ShapeDef& shape) {
  const int inset = 3;
  const int sx = tile.x1 + inset, sy = tile.y1 + inset;
  const int sw = tile.w() - 2 * inset - 1, sh = tile.h() - 2 * inset - 1;
  for (std::size_t li = 0; li < shape.lines.size(); ++li) {
    std::vector<PixelPoint> pts;
    pts.reserve(shape.lines[li].size());
    for (const auto& [u, v] : shape.lines[li]) {
      pts.emplace_back(sx + static_cast<int>(std::lround(u * sw)),
                       sy + static_cast<int>(std::lround(v * sh)));
    }
    draw_polyline(img, pts, kBlack, kInkThickness, shape.closed[li]);
  }
  // actual ink extent; the ground-truth box hugs it with 1 px to spare
  int ix1 = tile.x2, iy1 = tile.y2, ix2 = tile.x1, iy2 = tile.y1;
  for (int y = tile.y1; y < tile.y2; ++y) {
    for (int x = tile.x1; x < tile.x2; ++x) {
      const Rgb c = img.get(x, y);
      if ((c.r * 299 + c.g * 587 + c.b * 114) / 1000 < 128) {
        ix1 = std::min(ix1, x);
        iy1 = std::min(iy1, y);
        ix2 = std::max(ix2, x + 1);
        iy2 = std::max(iy2, y + 1);
      }
    }
  }
  return {ix1 - 1, iy1 - 1, ix2 + 1, iy2 + 1};
}

void draw_segment(Image& img, const Segment& s) {
  draw_line(img, s.x1, s.y1, s.x2, s.y2, kBlack, kInkThickness);
  if (!s.head) return;
  const int tip_x = s.x2, tip_y = s.y2;
  if (s.y1 == s.y2) {
    const int d = s.x2 > s.x1 ? -6 : 6;
    draw_line(img, tip_x + d, tip_y - 5, tip_x, tip_y, kBlack, kInkThickness);
    draw_line(img, tip_x + d, tip_y + 5, tip_x, tip_y, kBlack, kInkThickness);
  } else {
    const int d = s.y2 > s.y1 ? -6 : 6;
    draw_line(img, tip_x - 5, tip_y + d, tip_x, tip_y, kBlack, kInkThickness);
    draw_line(img, tip_x + 5, tip_y + d, tip_x, tip_y, kBlack, kInkThickness);
  }
}

BBox normalize_rect(const PixelRect& r, int W, int H) {
  return BBox{static_cast<double>(r.x1) / W, static_cast<double>(r.y1) / H,
              static_cast<double>(r.x2) / W, static_cast<double>(r.y2) / H};
}

std::string make_identifier(Rng& rng) {
  return std::to_string(rng.uniform_int(1, 9)) +
         static_cast<char>('a' + rng.uniform_int(0, 5));
}

void require_realizable(Layout layout, int n_reactions) {
  if (n_reactions < 1) throw ConfigError("n_reactions must be >= 1");
  if (layout == Layout::cyclic && n_reactions < 2) {
    throw ConfigError("cyclic layout needs at least 2 reactions");
  }
  if (layout == Layout::tree && n_reactions < 2) {
    throw ConfigError("tree layout needs at least 2 reactions");
  }
  if (layout == Layout::unknown) throw ConfigError("cannot generate an unknown layout");
}

}  // namespace

int glyph_shape_count() { return static_cast<int>(shape_library().size()); }

const std::vector<std::string>& condition_vocabulary() { return vocab(); }

DiagramSpec generate_spec(std::uint64_t seed, Layout layout, int n_reactions,
                          const SynthOptions& options) {
  require_realizable(layout, n_reactions);
  DiagramSpec spec;
  spec.seed = seed;
  spec.layout = layout;
  spec.canvas_width = options.canvas_width;
  spec.canvas_height = options.canvas_height;

  Rng rng(seed);
  auto new_glyph = [&] {
    spec.molecule_shapes.push_back(rng.uniform_int(0, glyph_shape_count() - 1));
    return static_cast<int>(spec.molecule_shapes.size()) - 1;
  };
  auto maybe_cond = [&](AbstractReaction& rxn, bool allow_mol) {
    if (rng.bernoulli(options.p_condition_text)) {
      rxn.condition_texts.push_back(rng.pick(vocab()));
    }
    if (allow_mol && rng.bernoulli(options.p_condition_mol)) {
      rxn.condition_glyphs.push_back(new_glyph());
    }
  };
  auto maybe_ident = [&](AbstractReaction& rxn) {
    if (rng.bernoulli(options.p_identifier)) {
      rxn.product_identifiers.push_back(make_identifier(rng));
    }
  };

  switch (layout) {
    case Layout::single_line: {
      int cur = new_glyph();
      for (int r = 0; r < n_reactions; ++r) {
        AbstractReaction rxn;
        rxn.reactant_glyphs.push_back(cur);
        if (r == 0 && rng.bernoulli(options.p_extra_reactant)) {
          rxn.reactant_glyphs.push_back(new_glyph());
        }
        maybe_cond(rxn, true);
        cur = new_glyph();
        rxn.product_glyphs.push_back(cur);
        maybe_ident(rxn);
        spec.reactions.push_back(std::move(rxn));
      }
      break;
    }
    case Layout::multi_line: {
      for (int r = 0; r < n_reactions; ++r) {
        AbstractReaction rxn;
        rxn.reactant_glyphs.push_back(new_glyph());
        if (n_reactions > 1 && rng.bernoulli(options.p_extra_reactant)) {
          rxn.reactant_glyphs.push_back(new_glyph());
        }
        maybe_cond(rxn, n_reactions > 1);
        rxn.product_glyphs.push_back(new_glyph());
        if (n_reactions > 1 && rng.bernoulli(options.p_second_product)) {
          rxn.product_glyphs.push_back(new_glyph());
        }
        maybe_ident(rxn);
        spec.reactions.push_back(std::move(rxn));
      }
      break;
    }
    case Layout::tree: {
      const int root = new_glyph();
      for (int r = 0; r < n_reactions; ++r) {
        AbstractReaction rxn;
        rxn.reactant_glyphs.push_back(root);
        rxn.product_glyphs.push_back(new_glyph());
        maybe_ident(rxn);
        spec.reactions.push_back(std::move(rxn));
      }
      break;
    }
    case Layout::cyclic: {
      std::vector<int> ids;
      for (int k = 0; k < n_reactions; ++k) ids.push_back(new_glyph());
      for (int k = 0; k < n_reactions; ++k) {
        AbstractReaction rxn;
        rxn.reactant_glyphs.push_back(ids[static_cast<std::size_t>(k)]);
        rxn.product_glyphs.push_back(ids[static_cast<std::size_t>((k + 1) % n_reactions)]);
        spec.reactions.push_back(std::move(rxn));
      }
      break;
    }
    case Layout::unknown:
      break;  // unreachable, require_realizable rejects it
  }
  if ((layout == Layout::single_line || layout == Layout::multi_line) &&
      rng.bernoulli(options.p_free_molecule)) {
    spec.free_glyphs.push_back(new_glyph());
  }
  return spec;
}

RenderedDiagram render_spec(const DiagramSpec& spec) {
  require_realizable(spec.layout, static_cast<int>(spec.reactions.size()));
  const int W = spec.canvas_width, H = spec.canvas_height;
  if (W < 320 || H < 240) throw RenderError("canvas too small for requested reaction count");

  std::set<int> cond_ids, free_ids;
  for (const auto& rxn : spec.reactions) {
    for (int id : rxn.condition_glyphs) cond_ids.insert(id);
  }
  for (int id : spec.free_glyphs) free_ids.insert(id);

  Build b{spec, Rng(Rng::mix(spec.seed, 0x72656e64ULL)), {}, {}, W, H};
  for (std::size_t id = 0; id < spec.molecule_shapes.size(); ++id) {
    const int iid = static_cast<int>(id);
    int w = 44 + b.rng.uniform_int(0, 28);
    int h = 44 + b.rng.uniform_int(0, 28);
    if (cond_ids.count(iid)) {
      w = 44 + w % 5;
      h = 44 + h % 5;
    } else if (free_ids.count(iid)) {
      w = 44 + w % 13;
      h = 44 + h % 13;
    }
    b.tile_size.emplace_back(w, h);
  }

  switch (spec.layout) {
    case Layout::single_line: build_single_line(b); break;
    case Layout::multi_line: build_multi_line(b); break;
    case Layout::tree: build_tree(b); break;
    case Layout::cyclic: build_cyclic(b); break;
    case Layout::unknown: break;
  }
  build_free_molecules(b);

  RenderedDiagram out;
  out.image = Image::blank(W, H, kWhite);
  std::vector<BBox> gt(spec.molecule_shapes.size());
  std::vector<bool> drawn(spec.molecule_shapes.size(), false);
  for (const auto& m : b.plan.mols) {
    const auto& shape =
        shape_library()[static_cast<std::size_t>(spec.molecule_shapes[static_cast<std::size_t>(m.glyph_id)])];
    const PixelRect ink = draw_glyph(out.image, m.tile, shape);
    if (ink.x1 < 0 || ink.y1 < 0 || ink.x2 > W || ink.y2 > H) {
      throw RenderError("canvas too small for requested reaction count");
    }
    gt[static_cast<std::size_t>(m.glyph_id)] = normalize_rect(ink, W, H);
    drawn[static_cast<std::size_t>(m.glyph_id)] = true;
  }
  for (const auto& s : b.plan.segments) draw_segment(out.image, s);
  for (const auto& t : b.plan.texts) draw_text(out.image, t.x, t.y, t.text, kBlack, t.cell);

  for (std::size_t id = 0; id < drawn.size(); ++id) {
    if (!drawn[id]) throw RenderError("glyph " + std::to_string(id) + " was never placed");
  }

  AnnotatedDiagram& d = out.diagram;
  d.image.width = W;
  d.image.height = H;
  d.layout = spec.layout;
  std::vector<BBox> all_boxes = gt;
  d.molecules = assign_indices(all_boxes);
  for (const auto& rxn : spec.reactions) {
    ReactionAnnotation ga;
    for (int id : rxn.reactant_glyphs) {
      ga.reactants.push_back(Component::mol_box(gt[static_cast<std::size_t>(id)]));
    }
    for (int id : rxn.condition_glyphs) {
      ga.conditions.push_back(Component::mol_box(gt[static_cast<std::size_t>(id)]));
    }
    for (const auto& text : rxn.condition_texts) {
      ga.conditions.push_back(Component::text(ComponentKind::txt, text));
    }
    for (int id : rxn.product_glyphs) {
      ga.products.push_back(Component::mol_box(gt[static_cast<std::size_t>(id)]));
    }
    for (const auto& ident : rxn.product_identifiers) {
      ga.products.push_back(Component::text(ComponentKind::idt, ident));
    }
    d.reactions.push_back(std::move(ga));
  }
  stamp_component_indices(d);
  return out;
}

Corpus generate_corpus(std::uint64_t seed, int per_layout_count, const std::string& out_dir,
                       const SynthOptions& options) {
  if (per_layout_count < 1) throw ConfigError("per_layout_count must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw CorpusError("cannot create output directory: " + out_dir);

  const Layout cycle[] = {Layout::single_line, Layout::multi_line, Layout::tree, Layout::cyclic};
  Corpus corpus;
  const int total = per_layout_count * 4;
  for (int i = 0; i < total; ++i) {
    const Layout layout = cycle[i % 4];
    Rng dr(Rng::mix(seed, static_cast<std::uint64_t>(i)));
    const int n = (layout == Layout::tree || layout == Layout::cyclic)
                      ? 2 + dr.uniform_int(0, 1)
                      : 1 + dr.uniform_int(0, 2);
    const DiagramSpec spec = generate_spec(dr.next(), layout, n, options);
    RenderedDiagram rendered = render_spec(spec);
    char name[32];
    std::snprintf(name, sizeof(name), "diagram_%04d.png", i);
    rendered.diagram.image.path = name;
    save_png(rendered.image, (fs::path(out_dir) / name).string());
    corpus.push_back(std::move(rendered.diagram));
  }
  save_corpus(corpus, (fs::path(out_dir) / "corpus.json").string());
  return corpus;
}

std::string corpus_manifest_hash(const Corpus& corpus) {
  return content_hash(corpus_to_json(corpus));
}

}  // namespace rxndp
