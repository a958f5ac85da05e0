#include "rxndp/bitmap_font.hpp"

#include <unordered_map>

#include "rxndp/text.hpp"

namespace rxndp {
namespace {

struct GlyphDef {
  char32_t cp;
  GlyphRows rows;
};

// 5x7 typeface, one row byte per scanline, bit 4 leftmost.
constexpr GlyphDef kGlyphs[] = {
    {U'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {U'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {U'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {U'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {U'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {U'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {U'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {U'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {U'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {U'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {U'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {U'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {U'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {U'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {U'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {U'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {U'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {U'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {U'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {U'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {U'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {U'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {U'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {U'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {U'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {U'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {U'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {U'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {U'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {U'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {U'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {U'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {U'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {U'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {U'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {U'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {U'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
    {U'b', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1E}},
    {U'c', {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E}},
    {U'd', {0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F}},
    {U'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
    {U'f', {0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08}},
    {U'g', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
    {U'h', {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11}},
    {U'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
    {U'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C}},
    {U'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
    {U'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {U'm', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x11, 0x11}},
    {U'n', {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11}},
    {U'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
    {U'p', {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10}},
    {U'q', {0x00, 0x00, 0x0D, 0x13, 0x0F, 0x01, 0x01}},
    {U'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
    {U's', {0x00, 0x00, 0x0E, 0x10, 0x0E, 0x01, 0x1E}},
    {U't', {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06}},
    {U'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D}},
    {U'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {U'w', {0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A}},
    {U'x', {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11}},
    {U'y', {0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
    {U'z', {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F}},
    {U' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {U',', {0x00, 0x00, 0x00, 0x00, 0x06, 0x04, 0x08}},
    {U'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {U'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {U'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {U'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {U'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {U')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {U'[', {0x0E, 0x08, 0x08, 0x08, 0x08, 0x08, 0x0E}},
    {U']', {0x0E, 0x02, 0x02, 0x02, 0x02, 0x02, 0x0E}},
    {U'°', {0x0C, 0x12, 0x12, 0x0C, 0x00, 0x00, 0x00}},
    {U'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {U':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {U'\'', {0x0C, 0x04, 0x08, 0x00, 0x00, 0x00, 0x00}},
    {U'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {U'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
};

constexpr GlyphRows kFallback{0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F};

const std::unordered_map<char32_t, GlyphRows>& glyph_table() {
  static const std::unordered_map<char32_t, GlyphRows> table = [] {
    std::unordered_map<char32_t, GlyphRows> t;
    for (const auto& g : kGlyphs) t.emplace(g.cp, g.rows);
    return t;
  }();
  return table;
}

void draw_codepoint(Image& img, int x, int y, char32_t cp, Rgb color, int cell) {
  const GlyphRows& rows = glyph_rows(cp);
  for (int gy = 0; gy < kGlyphHeight; ++gy) {
    for (int gx = 0; gx < kGlyphWidth; ++gx) {
      if (!(rows[gy] >> (kGlyphWidth - 1 - gx) & 1)) continue;
      fill_rect(img, x + gx * cell, y + gy * cell, x + (gx + 1) * cell, y + (gy + 1) * cell, color);
    }
  }
}

void draw_decoded(Image& img, int x, int y, const std::vector<char32_t>& cps, Rgb color, int cell) {
  int cx = x;
  for (char32_t cp : cps) {
    draw_codepoint(img, cx, y, cp, color, cell);
    cx += (kGlyphWidth + kGlyphSpacing) * cell;
  }
}

}  // namespace

const GlyphRows& glyph_rows(char32_t cp) {
  const auto& table = glyph_table();
  const auto it = table.find(cp);
  return it != table.end() ? it->second : kFallback;
}

bool font_has_glyph(char32_t cp) { return glyph_table().count(cp) != 0; }

int text_width_px(const std::string& utf8, int cell) {
  const auto cps = utf8_decode(utf8);
  if (cps.empty()) return 0;
  const int n = static_cast<int>(cps.size());
  return (n * kGlyphWidth + (n - 1) * kGlyphSpacing) * cell;
}

void draw_text(Image& img, int x, int y, const std::string& utf8, Rgb color, int cell) {
  draw_decoded(img, x, y, utf8_decode(utf8), color, cell);
}

void draw_text_with_halo(Image& img, int x, int y, const std::string& utf8, Rgb color, Rgb halo,
                         int cell) {
  const auto cps = utf8_decode(utf8);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      draw_decoded(img, x + dx, y + dy, cps, halo, cell);
    }
  }
  draw_decoded(img, x, y, cps, color, cell);
}

}  // namespace rxndp
