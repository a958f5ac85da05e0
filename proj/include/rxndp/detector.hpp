#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rxndp/raster.hpp"
#include "rxndp/types.hpp"

namespace rxndp {

struct DetectorParams {
  int binarize_threshold = 128;  // luminance below this is ink
  int min_area_px = 30;          // component ink pixels before merging
  int merge_gap_px = 4;          // bridge components this close
  int min_side_px = 24;          // reject thin arrows, text, plus signs
  double max_aspect = 6.0;
  double min_ink_density = 0.02;

  void validate() const;
  std::string cache_key() const;
};

/// Connected-component molecule detector: binarize, merge nearby blobs,
/// suppress connector shapes. Boxes come back normalized, reading order.
std::vector<BBox> detect_blobs(const Image& img, const DetectorParams& params = {});

/// Precision/recall of predicted boxes against ground truth across a corpus,
/// micro-aggregated. Images are resolved relative to image_root.
struct DetectorEval {
  double precision = 1.0;
  double recall = 1.0;
  std::size_t matched = 0;
  std::size_t n_pred = 0;
  std::size_t n_gt = 0;
};

class Detector {
 public:
  virtual ~Detector() = default;
  /// image_path is the corpus-relative path, used by lookup-based sources.
  virtual std::vector<BBox> detect(const Image& img, const std::string& image_path) = 0;
  virtual std::string cache_key() const = 0;
};

struct DetectorConfig {
  enum class Kind { blob, file, http };
  Kind kind = Kind::blob;
  std::string arg;  // file path or endpoint URL
  DetectorParams params;
};

/// Accepts "blob", "file:PATH" or "http:URL".
DetectorConfig parse_detector_spec(const std::string& spec);

std::unique_ptr<Detector> make_detector(const DetectorConfig& config);

using DetectionsFile = std::map<std::string, std::vector<BBox>>;

DetectionsFile load_detections(const std::string& path);
void save_detections(const DetectionsFile& detections, const std::string& path);

DetectorEval evaluate_detector(const Corpus& corpus, const std::string& image_root,
                               Detector& detector, double iou_threshold = 0.5);

std::string resolve_image_path(const std::string& image_root, const std::string& image_path);

}  // namespace rxndp
