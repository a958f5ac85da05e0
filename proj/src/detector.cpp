#include "rxndp/detector.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <opencv2/imgproc.hpp>

#include "httplib.h"
#include "json.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/net_util.hpp"
#include "rxndp/reading_order.hpp"

namespace rxndp {
namespace {

using nlohmann::json;

struct PixelBlob {
  int x1 = 0, y1 = 0, x2 = 0, y2 = 0;  // half-open pixel bounds
  long ink = 0;
};

// Gap between two intervals [a1,a2) and [b1,b2); 0 when they overlap.
int axis_gap(int a1, int a2, int b1, int b2) {
  if (a2 <= b1) return b1 - a2;
  if (b2 <= a1) return a1 - b2;
  return 0;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void DetectorParams::validate() const {
  if (binarize_threshold < 1 || binarize_threshold > 255)
    throw ConfigError("binarize_threshold must be in [1, 255]");
  if (min_area_px < 1) throw ConfigError("min_area_px must be positive");
  if (merge_gap_px < 0) throw ConfigError("merge_gap_px must be non-negative");
  if (min_side_px < 1) throw ConfigError("min_side_px must be positive");
  if (max_aspect < 1.0) throw ConfigError("max_aspect must be at least 1");
  if (min_ink_density <= 0.0 || min_ink_density > 1.0)
    throw ConfigError("min_ink_density must be in (0, 1]");
}

std::string DetectorParams::cache_key() const {
  std::ostringstream os;
  os << "blob;t=" << binarize_threshold << ";a=" << min_area_px << ";g=" << merge_gap_px
     << ";s=" << min_side_px << ";r=" << max_aspect << ";d=" << min_ink_density;
  return content_hash(os.str());
}

std::vector<BBox> detect_blobs(const Image& img, const DetectorParams& params) {
  params.validate();
  if (img.width <= 0 || img.height <= 0) return {};

  cv::Mat binary(img.height, img.width, CV_8UC1);
  for (int y = 0; y < img.height; ++y) {
    std::uint8_t* row = binary.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      const Rgb p = img.get(x, y);
      const int luma = (p.r * 299 + p.g * 587 + p.b * 114) / 1000;
      row[x] = luma < params.binarize_threshold ? 255 : 0;
    }
  }

  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(binary, labels, stats, centroids, 8, CV_32S);

  std::vector<PixelBlob> blobs;
  for (int i = 1; i < n; ++i) {  // label 0 is background
    const int area = stats.at<int>(i, cv::CC_STAT_AREA);
    if (area < params.min_area_px) continue;  // speckle never seeds a merge
    PixelBlob b;
    b.x1 = stats.at<int>(i, cv::CC_STAT_LEFT);
    b.y1 = stats.at<int>(i, cv::CC_STAT_TOP);
    b.x2 = b.x1 + stats.at<int>(i, cv::CC_STAT_WIDTH);
    b.y2 = b.y1 + stats.at<int>(i, cv::CC_STAT_HEIGHT);
    b.ink = area;
    blobs.push_back(b);
  }

  UnionFind uf(blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    for (std::size_t j = i + 1; j < blobs.size(); ++j) {
      const int dx = axis_gap(blobs[i].x1, blobs[i].x2, blobs[j].x1, blobs[j].x2);
      const int dy = axis_gap(blobs[i].y1, blobs[i].y2, blobs[j].y1, blobs[j].y2);
      if (dx <= params.merge_gap_px && dy <= params.merge_gap_px)
        uf.unite(static_cast<int>(i), static_cast<int>(j));
    }
  }

  std::map<int, PixelBlob> merged;
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    const int root = uf.find(static_cast<int>(i));
    auto it = merged.find(root);
    if (it == merged.end()) {
      merged.emplace(root, blobs[i]);
    } else {
      PixelBlob& m = it->second;
      m.x1 = std::min(m.x1, blobs[i].x1);
      m.y1 = std::min(m.y1, blobs[i].y1);
      m.x2 = std::max(m.x2, blobs[i].x2);
      m.y2 = std::max(m.y2, blobs[i].y2);
      m.ink += blobs[i].ink;
    }
  }

  std::vector<BBox> out;
  for (const auto& [root, b] : merged) {
    const int w = b.x2 - b.x1;
    const int h = b.y2 - b.y1;
    if (std::min(w, h) < params.min_side_px) continue;
    const double aspect = static_cast<double>(std::max(w, h)) / std::max(1, std::min(w, h));
    if (aspect > params.max_aspect) continue;
    const double density = static_cast<double>(b.ink) / (static_cast<double>(w) * h);
    if (density < params.min_ink_density) continue;
    BBox box{static_cast<double>(b.x1) / img.width, static_cast<double>(b.y1) / img.height,
             static_cast<double>(b.x2) / img.width, static_cast<double>(b.y2) / img.height};
    out.push_back(box);
  }

  std::vector<BBox> ordered;
  ordered.reserve(out.size());
  for (std::size_t idx : reading_order(out)) ordered.push_back(out[idx]);
  return ordered;
}

namespace {

class BlobDetector final : public Detector {
 public:
  explicit BlobDetector(DetectorParams params) : params_(params) { params_.validate(); }

  std::vector<BBox> detect(const Image& img, const std::string&) override {
    return detect_blobs(img, params_);
  }

  std::string cache_key() const override { return params_.cache_key(); }

 private:
  DetectorParams params_;
};

class FileDetector final : public Detector {
 public:
  explicit FileDetector(const std::string& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open detections file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    raw_ = buf.str();
    detections_ = load_detections(path);
  }

  std::vector<BBox> detect(const Image&, const std::string& image_path) override {
    auto it = detections_.find(image_path);
    if (it == detections_.end()) {
      // Stored paths may carry directories the caller does not use.
      const std::size_t slash = image_path.find_last_of('/');
      const std::string base = slash == std::string::npos ? image_path : image_path.substr(slash + 1);
      for (const auto& [key, boxes] : detections_) {
        const std::size_t ks = key.find_last_of('/');
        if ((ks == std::string::npos ? key : key.substr(ks + 1)) == base) return boxes;
      }
      throw ConfigError("no detections recorded for image: " + image_path);
    }
    return it->second;
  }

  std::string cache_key() const override { return "file:" + content_hash(raw_); }

 private:
  std::string path_;
  std::string raw_;
  DetectionsFile detections_;
};

class HttpDetector final : public Detector {
 public:
  explicit HttpDetector(const std::string& url) : url_(url), split_(split_url(url)) {}

  std::vector<BBox> detect(const Image& img, const std::string& image_path) override {
    json body;
    body["image"] = base64_encode(encode_png(img));
    body["path"] = image_path;
    httplib::Client client(split_.base);
    client.set_read_timeout(30, 0);
    auto res = client.Post(split_.path, body.dump(), "application/json");
    if (!res) throw BackendError(BackendErrorKind::http, "detector endpoint unreachable: " + url_);
    if (res->status != 200)
      throw BackendError(BackendErrorKind::http,
                         "detector endpoint returned status " + std::to_string(res->status));
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("boxes") || !reply["boxes"].is_array())
      throw BackendError(BackendErrorKind::http, "detector reply missing boxes array");
    std::vector<BBox> boxes;
    for (const auto& item : reply["boxes"]) {
      if (!item.is_array() || item.size() != 4)
        throw BackendError(BackendErrorKind::http, "detector reply box is not a 4-tuple");
      BBox b{item[0].get<double>(), item[1].get<double>(), item[2].get<double>(),
             item[3].get<double>()};
      if (!b.valid())
        throw BackendError(BackendErrorKind::http, "detector reply box is degenerate");
      boxes.push_back(b);
    }
    return boxes;
  }

  std::string cache_key() const override { return "http:" + content_hash(url_); }

 private:
  std::string url_;
  SplitUrl split_;
};

}  // namespace

DetectorConfig parse_detector_spec(const std::string& spec) {
  DetectorConfig config;
  if (spec == "blob") {
    config.kind = DetectorConfig::Kind::blob;
    return config;
  }
  if (spec.rfind("file:", 0) == 0) {
    config.kind = DetectorConfig::Kind::file;
    config.arg = spec.substr(5);
    if (config.arg.empty()) throw ConfigError("file detector needs a path: file:PATH");
    return config;
  }
  if (spec.rfind("http:", 0) == 0) {
    config.kind = DetectorConfig::Kind::http;
    config.arg = spec.substr(5);
    // Allow both "http:URL" and a bare http(s) URL.
    if (config.arg.rfind("//", 0) == 0) config.arg = "http:" + config.arg;
    if (config.arg.empty()) throw ConfigError("http detector needs an endpoint: http:URL");
    return config;
  }
  if (spec.rfind("https://", 0) == 0) {
    config.kind = DetectorConfig::Kind::http;
    config.arg = spec;
    return config;
  }
  throw ConfigError("unknown detector spec: " + spec);
}

std::unique_ptr<Detector> make_detector(const DetectorConfig& config) {
  switch (config.kind) {
    case DetectorConfig::Kind::blob:
      return std::make_unique<BlobDetector>(config.params);
    case DetectorConfig::Kind::file:
      return std::make_unique<FileDetector>(config.arg);
    case DetectorConfig::Kind::http:
      return std::make_unique<HttpDetector>(config.arg);
  }
  throw ConfigError("unknown detector kind");
}

DetectionsFile load_detections(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open detections file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_array())
    throw ConfigError("detections file must hold a JSON array: " + path);
  DetectionsFile out;
  for (const auto& entry : doc) {
    if (!entry.contains("image") || !entry["image"].is_string())
      throw ConfigError("detections entry missing image path");
    const std::string image = entry["image"].get<std::string>();
    if (!entry.contains("boxes") || !entry["boxes"].is_array())
      throw ConfigError("detections entry missing boxes array: " + image);
    std::vector<BBox> boxes;
    for (const auto& item : entry["boxes"]) {
      if (!item.is_array() || item.size() != 4 || !item[0].is_number())
        throw ConfigError("detections box must be [x1, y1, x2, y2]: " + image);
      BBox b{item[0].get<double>(), item[1].get<double>(), item[2].get<double>(),
             item[3].get<double>()};
      if (!b.valid()) throw ConfigError("degenerate detections box for image: " + image);
      boxes.push_back(b);
    }
    out[image] = std::move(boxes);
  }
  return out;
}

void save_detections(const DetectionsFile& detections, const std::string& path) {
  json doc = json::array();
  for (const auto& [image, boxes] : detections) {
    json entry;
    entry["image"] = image;
    json arr = json::array();
    for (const BBox& b : boxes) arr.push_back({b.x1, b.y1, b.x2, b.y2});
    entry["boxes"] = std::move(arr);
    doc.push_back(std::move(entry));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write detections file: " + path);
  out << doc.dump(2) << "\n";
}

std::string resolve_image_path(const std::string& image_root, const std::string& image_path) {
  if (image_root.empty() || (!image_path.empty() && image_path.front() == '/')) return image_path;
  if (image_root.back() == '/') return image_root + image_path;
  return image_root + "/" + image_path;
}

DetectorEval evaluate_detector(const Corpus& corpus, const std::string& image_root,
                               Detector& detector, double iou_threshold) {
  DetectorEval eval;
  for (const AnnotatedDiagram& diagram : corpus) {
    const Image img = load_image(resolve_image_path(image_root, diagram.image.path));
    const std::vector<BBox> pred = detector.detect(img, diagram.image.path);
    const DetectorPR pr = detector_pr(diagram.molecules, pred, iou_threshold);
    eval.matched += pr.matched;
    eval.n_pred += pred.size();
    eval.n_gt += diagram.molecules.size();
  }
  eval.precision = eval.n_pred == 0 ? 1.0 : static_cast<double>(eval.matched) / eval.n_pred;
  eval.recall = eval.n_gt == 0 ? 1.0 : static_cast<double>(eval.matched) / eval.n_gt;
  return eval;
}

}  // namespace rxndp
