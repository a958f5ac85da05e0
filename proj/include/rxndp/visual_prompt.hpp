#pragma once

#include <string>
#include <vector>

#include "rxndp/parse.hpp"
#include "rxndp/raster.hpp"
#include "rxndp/types.hpp"

namespace rxndp {

enum class LabelCorner { top_left, top_right };

struct VisualPromptStyle {
  int stroke_width_px = 3;
  std::vector<Rgb> palette;  // empty means the default 8-color set
  LabelCorner label_corner = LabelCorner::top_left;
  double label_scale = 2.0;
  int padding_px = 2;  // gap between box edge and label
  bool draw_labels = true;

  void validate() const;
  const std::vector<Rgb>& effective_palette() const;
  std::string cache_key() const;
};

const std::vector<Rgb>& default_palette();

/// Boxes in index order: result[i] is molecule index i+1. Reading order,
/// independent of the input permutation.
std::vector<BBox> assign_indices(const std::vector<BBox>& boxes);

/// Everything render_visual_prompt will touch for one box, in pixels.
/// label_* fields are meaningful only when the style draws labels.
struct BoxOverlay {
  int index = 0;  // 1-based
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  Rgb color;
  std::string label;
  int label_x = 0;
  int label_y = 0;
  int label_cell = 1;
};

/// Pixel-space drawing plan for boxes already in index order. Throws when a
/// box collapses below one pixel after scaling.
std::vector<BoxOverlay> plan_overlay(int width, int height, const std::vector<BBox>& ordered,
                                     const VisualPromptStyle& style);

struct RenderResult {
  Image image;
  IndexMap index_map;
};

RenderResult render_visual_prompt(const Image& input, const std::vector<BBox>& boxes,
                                  const VisualPromptStyle& style);

}  // namespace rxndp
