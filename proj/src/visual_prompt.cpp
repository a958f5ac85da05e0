#include "rxndp/visual_prompt.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rxndp/bitmap_font.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/reading_order.hpp"

namespace rxndp {
namespace {

int px(double v, int extent) {
  return static_cast<int>(std::lround(v * extent));
}

}  // namespace

const std::vector<Rgb>& default_palette() {
  static const std::vector<Rgb> palette = {
      {230, 25, 75},    // red
      {0, 92, 230},     // blue
      {0, 140, 60},     // green
      {245, 130, 30},   // orange
      {145, 30, 180},   // purple
      {0, 150, 160},    // teal
      {200, 25, 130},   // magenta
      {120, 90, 10},    // brown
  };
  return palette;
}

void VisualPromptStyle::validate() const {
  if (stroke_width_px < 1) throw ConfigError("stroke_width_px must be >= 1");
  if (label_scale <= 0.0) throw ConfigError("label_scale must be > 0");
  if (padding_px < 0) throw ConfigError("padding_px must be >= 0");
}

const std::vector<Rgb>& VisualPromptStyle::effective_palette() const {
  return palette.empty() ? default_palette() : palette;
}

std::string VisualPromptStyle::cache_key() const {
  std::ostringstream os;
  os << "stroke=" << stroke_width_px << ";corner="
     << (label_corner == LabelCorner::top_left ? "tl" : "tr") << ";scale=" << label_scale
     << ";pad=" << padding_px << ";labels=" << (draw_labels ? 1 : 0) << ";palette=";
  for (const Rgb& c : effective_palette()) {
    os << static_cast<int>(c.r) << "." << static_cast<int>(c.g) << "." << static_cast<int>(c.b)
       << ",";
  }
  return content_hash(os.str());
}

std::vector<BBox> assign_indices(const std::vector<BBox>& boxes) {
  const auto perm = reading_order(boxes);
  std::vector<BBox> ordered;
  ordered.reserve(boxes.size());
  for (std::size_t p : perm) ordered.push_back(boxes[p]);
  return ordered;
}

std::vector<BoxOverlay> plan_overlay(int width, int height, const std::vector<BBox>& ordered,
                                     const VisualPromptStyle& style) {
  style.validate();
  const auto& palette = style.effective_palette();
  const int cell = std::max(1, static_cast<int>(std::lround(style.label_scale)));

  std::vector<BoxOverlay> plan;
  plan.reserve(ordered.size());
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    const BBox& b = ordered[i];
    if (!b.valid()) throw RenderError("box outside the unit square");
    BoxOverlay ov;
    ov.index = static_cast<int>(i) + 1;
    ov.x1 = std::clamp(px(b.x1, width), 0, width);
    ov.x2 = std::clamp(px(b.x2, width), 0, width);
    ov.y1 = std::clamp(px(b.y1, height), 0, height);
    ov.y2 = std::clamp(px(b.y2, height), 0, height);
    if (ov.x2 - ov.x1 < 1 || ov.y2 - ov.y1 < 1) {
      throw RenderError("box " + std::to_string(ov.index) + " is smaller than one pixel");
    }
    ov.color = palette[i % palette.size()];
    if (style.draw_labels) {
      ov.label = std::to_string(ov.index);
      ov.label_cell = cell;
      const int lw = text_width_px(ov.label, cell);
      const int lh = text_height_px(cell);
      ov.label_x = style.label_corner == LabelCorner::top_left ? ov.x1 : ov.x2 - lw;
      ov.label_x = std::clamp(ov.label_x, 1, std::max(1, width - lw - 1));
      ov.label_y = ov.y1 - lh - style.padding_px;
      if (ov.label_y < 1) ov.label_y = ov.y1 + style.stroke_width_px + style.padding_px;
    }
    plan.push_back(std::move(ov));
  }
  return plan;
}

RenderResult render_visual_prompt(const Image& input, const std::vector<BBox>& boxes,
                                  const VisualPromptStyle& style) {
  if (input.width <= 0 || input.height <= 0) throw RenderError("empty input image");
  const auto ordered = assign_indices(boxes);
  const auto plan = plan_overlay(input.width, input.height, ordered, style);

  RenderResult out;
  out.image = input;
  const int s = style.stroke_width_px;
  for (const auto& ov : plan) {
    fill_rect(out.image, ov.x1, ov.y1, ov.x2, ov.y1 + s, ov.color);
    fill_rect(out.image, ov.x1, ov.y2 - s, ov.x2, ov.y2, ov.color);
    fill_rect(out.image, ov.x1, ov.y1, ov.x1 + s, ov.y2, ov.color);
    fill_rect(out.image, ov.x2 - s, ov.y1, ov.x2, ov.y2, ov.color);
    if (style.draw_labels) {
      draw_text_with_halo(out.image, ov.label_x, ov.label_y, ov.label, ov.color, kWhite,
                          ov.label_cell);
    }
  }
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    out.index_map.emplace(static_cast<int>(i) + 1, ordered[i]);
  }
  return out;
}

}  // namespace rxndp
