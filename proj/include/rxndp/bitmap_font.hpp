#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "rxndp/raster.hpp"

namespace rxndp {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kGlyphSpacing = 1;

using GlyphRows = std::array<std::uint8_t, kGlyphHeight>;

/// Row bitmap for the codepoint, or the boxed fallback glyph when the font
/// has no entry. Bit 4 of each row is the leftmost column.
const GlyphRows& glyph_rows(char32_t cp);

bool font_has_glyph(char32_t cp);

/// Width of the rendered string: each codepoint is one glyph cell, with one
/// font column between neighbours, all scaled by `cell`.
int text_width_px(const std::string& utf8, int cell = 1);

constexpr int text_height_px(int cell) { return kGlyphHeight * cell; }

/// Draws UTF-8 text with its top-left corner at (x, y); every font pixel
/// becomes a cell x cell block.
void draw_text(Image& img, int x, int y, const std::string& utf8, Rgb color, int cell = 1);

/// Same, over a one-pixel halo in `halo` drawn at the 8 neighbouring
/// offsets. Ink pixels end up exactly where draw_text puts them.
void draw_text_with_halo(Image& img, int x, int y, const std::string& utf8, Rgb color, Rgb halo,
                         int cell = 1);

}  // namespace rxndp
