#include <doctest.h>

#include <string>

#include "rxndp/bitmap_font.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/raster.hpp"
#include "rxndp/rng.hpp"

#include "test_util.hpp"

using namespace rxndp;
using test::TempDir;

namespace {

Image random_image(int w, int h, std::uint64_t seed) {
  Image img = Image::blank(w, h);
  Rng rng(seed);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.set(x, y, {static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                     static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                     static_cast<std::uint8_t>(rng.uniform_int(0, 255))});
    }
  }
  return img;
}

int count_color(const Image& img, Rgb c) {
  int n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.get(x, y) == c) ++n;
    }
  }
  return n;
}

int popcount_rows(const GlyphRows& rows) {
  int n = 0;
  for (std::uint8_t r : rows) {
    for (int b = 0; b < 8; ++b) n += (r >> b) & 1;
  }
  return n;
}

}  // namespace

TEST_CASE("blank image is uniformly the fill color") {
  const Image img = Image::blank(7, 3, {10, 20, 30});
  CHECK(img.width == 7);
  CHECK(img.height == 3);
  CHECK(img.pixels.size() == 7u * 3u * 3u);
  CHECK(count_color(img, {10, 20, 30}) == 21);
}

TEST_CASE("fill_rect is half-open and clamps to the canvas") {
  Image img = Image::blank(10, 10);
  fill_rect(img, -5, -5, 3, 2, kBlack);
  CHECK(count_color(img, kBlack) == 6);
  CHECK(img.get(0, 0) == kBlack);
  CHECK(img.get(2, 1) == kBlack);
  CHECK(img.get(3, 0) == kWhite);
  CHECK(img.get(0, 2) == kWhite);

  fill_rect(img, 8, 8, 40, 40, kBlack);
  CHECK(img.get(9, 9) == kBlack);
}

TEST_CASE("draw_line paints exact pixels for axis-aligned strokes") {
  Image img = Image::blank(10, 10);
  draw_line(img, 2, 5, 7, 5, kBlack, 1);
  for (int x = 2; x <= 7; ++x) CHECK(img.get(x, 5) == kBlack);
  CHECK(count_color(img, kBlack) == 6);
}

TEST_CASE("pixel_diff_count counts changed pixels") {
  Image a = Image::blank(5, 5);
  Image b = a;
  CHECK(pixel_diff_count(a, b) == 0);
  b.set(1, 1, kBlack);
  b.set(3, 4, kBlack);
  CHECK(pixel_diff_count(a, b) == 2);
}

TEST_CASE("png encode and decode round trip exactly") {
  const Image img = random_image(37, 23, 7);
  const Image back = decode_image(encode_png(img));
  CHECK(back == img);
}

TEST_CASE("png file io round trips and bad bytes are typed errors") {
  TempDir dir("raster");
  const Image img = random_image(12, 9, 8);
  save_png(img, dir.file("x.png"));
  CHECK(load_image(dir.file("x.png")) == img);
  CHECK_THROWS_AS(decode_image("this is not a png"), RenderError);
  CHECK_THROWS_AS(load_image(dir.file("missing.png")), RenderError);
}

TEST_CASE("font covers digits, ascii text and the arrow") {
  for (char c = '0'; c <= '9'; ++c) CHECK(font_has_glyph(static_cast<char32_t>(c)));
  for (char c = 'A'; c <= 'Z'; ++c) CHECK(font_has_glyph(static_cast<char32_t>(c)));
  CHECK(font_has_glyph(U'+'));
  CHECK(font_has_glyph(U'°'));
  CHECK_FALSE(font_has_glyph(U'中'));
  // unknown codepoints still render something visible
  CHECK(popcount_rows(glyph_rows(U'中')) > 0);
}

TEST_CASE("digit glyphs are pairwise distinct") {
  for (char a = '0'; a <= '9'; ++a) {
    for (char b = static_cast<char>(a + 1); b <= '9'; ++b) {
      CHECK(glyph_rows(static_cast<char32_t>(a)) != glyph_rows(static_cast<char32_t>(b)));
    }
  }
}

TEST_CASE("text width accounts for cells and spacing") {
  CHECK(text_width_px("1") == 5);
  CHECK(text_width_px("12") == 11);
  CHECK(text_width_px("12", 2) == 22);
  CHECK(text_width_px("") == 0);
  CHECK(text_height_px(3) == 21);
}

TEST_CASE("draw_text ink count matches the glyph bitmap") {
  Image img = Image::blank(40, 20);
  draw_text(img, 3, 4, "1", kBlack);
  CHECK(count_color(img, kBlack) == popcount_rows(glyph_rows(U'1')));

  Image scaled = Image::blank(80, 40);
  draw_text(scaled, 3, 4, "1", kBlack, 3);
  CHECK(count_color(scaled, kBlack) == popcount_rows(glyph_rows(U'1')) * 9);
}

TEST_CASE("halo drawing leaves ink pixels exactly where draw_text puts them") {
  const Rgb ink{200, 0, 0};
  const Rgb halo{0, 0, 200};
  Image plain = Image::blank(60, 30);
  draw_text(plain, 10, 8, "42", ink, 2);
  Image haloed = Image::blank(60, 30);
  draw_text_with_halo(haloed, 10, 8, "42", ink, halo, 2);
  for (int y = 0; y < plain.height; ++y) {
    for (int x = 0; x < plain.width; ++x) {
      if (plain.get(x, y) == ink) {
        CHECK(haloed.get(x, y) == ink);
      } else if (haloed.get(x, y) != halo) {
        CHECK(haloed.get(x, y) == plain.get(x, y));
      }
    }
  }
  CHECK(count_color(haloed, ink) == count_color(plain, ink));
}

TEST_CASE("painted digits decode back through the template matcher") {
  const Rgb ink{0, 92, 230};
  for (int value : {1, 7, 10, 14, 99}) {
    Image img = Image::blank(120, 40);
    BoxOverlay ov;
    ov.label = std::to_string(value);
    ov.label_x = 9;
    ov.label_y = 6;
    ov.label_cell = 3;
    ov.color = ink;
    draw_text(img, ov.label_x, ov.label_y, ov.label, ink, ov.label_cell);
    CHECK(test::decode_label(img, ov) == value);
  }
}
