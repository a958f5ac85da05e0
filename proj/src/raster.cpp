#include "rxndp/raster.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "rxndp/errors.hpp"

namespace rxndp {
namespace {

cv::Mat view(Image& img) {
  return cv::Mat(img.height, img.width, CV_8UC3, img.pixels.data());
}

cv::Scalar scalar(Rgb c) { return cv::Scalar(c.r, c.g, c.b); }

std::vector<cv::Point> to_cv(const std::vector<PixelPoint>& points) {
  std::vector<cv::Point> pts;
  pts.reserve(points.size());
  for (const auto& [x, y] : points) pts.emplace_back(x, y);
  return pts;
}

}  // namespace

Image Image::blank(int width, int height, Rgb color) {
  Image img;
  img.width = width;
  img.height = height;
  img.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t off = 0; off < img.pixels.size(); off += 3) {
    img.pixels[off] = color.r;
    img.pixels[off + 1] = color.g;
    img.pixels[off + 2] = color.b;
  }
  return img;
}

void fill_rect(Image& img, int x1, int y1, int x2, int y2, Rgb color) {
  x1 = std::max(x1, 0);
  y1 = std::max(y1, 0);
  x2 = std::min(x2, img.width);
  y2 = std::min(y2, img.height);
  for (int y = y1; y < y2; ++y) {
    for (int x = x1; x < x2; ++x) img.set(x, y, color);
  }
}

void draw_line(Image& img, int x0, int y0, int x1, int y1, Rgb color, int thickness) {
  cv::Mat m = view(img);
  cv::line(m, {x0, y0}, {x1, y1}, scalar(color), thickness, cv::LINE_8);
}

void draw_polyline(Image& img, const std::vector<PixelPoint>& points, Rgb color, int thickness,
                   bool closed) {
  if (points.size() < 2) return;
  cv::Mat m = view(img);
  const std::vector<std::vector<cv::Point>> pts{to_cv(points)};
  cv::polylines(m, pts, closed, scalar(color), thickness, cv::LINE_8);
}

void fill_polygon(Image& img, const std::vector<PixelPoint>& points, Rgb color) {
  if (points.size() < 3) return;
  cv::Mat m = view(img);
  const std::vector<std::vector<cv::Point>> pts{to_cv(points)};
  cv::fillPoly(m, pts, scalar(color), cv::LINE_8);
}

Image decode_image(const std::string& bytes) {
  const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                    const_cast<char*>(bytes.data()));
  cv::Mat bgr = cv::imdecode(raw, cv::IMREAD_COLOR);
  if (bgr.empty()) throw RenderError("undecodable image");
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image img;
  img.width = rgb.cols;
  img.height = rgb.rows;
  img.pixels.assign(rgb.data, rgb.data + static_cast<std::size_t>(rgb.total()) * 3);
  return img;
}

std::string encode_png(const Image& img) {
  if (img.width <= 0 || img.height <= 0) throw RenderError("cannot encode an empty image");
  const cv::Mat rgb(img.height, img.width, CV_8UC3,
                    const_cast<std::uint8_t*>(img.pixels.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  std::vector<std::uint8_t> buf;
  if (!cv::imencode(".png", bgr, buf)) throw RenderError("PNG encode failed");
  return std::string(buf.begin(), buf.end());
}

Image load_image(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RenderError("cannot open image: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_image(buf.str());
  } catch (const RenderError&) {
    throw RenderError("undecodable image: " + path);
  }
}

void save_png(const Image& img, const std::string& path) {
  const std::string bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RenderError("cannot write image: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RenderError("write failed: " + path);
}

std::size_t pixel_diff_count(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) {
    throw RenderError("pixel_diff_count: size mismatch");
  }
  std::size_t n = 0;
  for (int y = 0; y < a.height; ++y) {
    for (int x = 0; x < a.width; ++x) {
      if (a.get(x, y) != b.get(x, y)) ++n;
    }
  }
  return n;
}

}  // namespace rxndp
