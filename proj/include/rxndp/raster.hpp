#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rxndp {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};

/// Row-major RGB8 raster, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static Image blank(int width, int height, Rgb color = kWhite);

  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  Rgb get(int x, int y) const {
    const std::size_t off = (static_cast<std::size_t>(y) * width + x) * 3;
    return {pixels[off], pixels[off + 1], pixels[off + 2]};
  }

  void set(int x, int y, Rgb c) {
    if (!in_bounds(x, y)) return;
    const std::size_t off = (static_cast<std::size_t>(y) * width + x) * 3;
    pixels[off] = c.r;
    pixels[off + 1] = c.g;
    pixels[off + 2] = c.b;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

using PixelPoint = std::pair<int, int>;

/// Fills the half-open rectangle [x1,x2) x [y1,y2), clamped to the image.
void fill_rect(Image& img, int x1, int y1, int x2, int y2, Rgb color);

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb color, int thickness = 1);

void draw_polyline(Image& img, const std::vector<PixelPoint>& points, Rgb color,
                   int thickness = 1, bool closed = false);

void fill_polygon(Image& img, const std::vector<PixelPoint>& points, Rgb color);

Image decode_image(const std::string& bytes);
std::string encode_png(const Image& img);
Image load_image(const std::string& path);
void save_png(const Image& img, const std::string& path);

std::size_t pixel_diff_count(const Image& a, const Image& b);

}  // namespace rxndp
