#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "rxndp/backend.hpp"
#include "rxndp/detector.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/parse.hpp"
#include "rxndp/prompts.hpp"
#include "rxndp/report.hpp"
#include "rxndp/types.hpp"
#include "rxndp/visual_prompt.hpp"

namespace rxndp {

enum class BoxSource { detected, gt };

const char* to_string(BoxSource source);
BoxSource box_source_from_string(const std::string& name);

struct PipelineConfig {
  Strategy strategy = Strategy::bivp;
  BoxSource boxes = BoxSource::gt;
  VisualPromptStyle style;
  int workers = 1;

  /// Folds in the detector/backend identities so stored predictions are only
  /// reused for the identical setup.
  std::string config_hash(const std::string& detector_id, const std::string& backend_id) const;
};

/// One diagram's trip through the pipeline. A failed stage leaves reactions
/// empty and names the stage, so evaluation scores the diagram all-FN
/// without aborting the run.
struct PredictionRecord {
  std::string image;  // corpus-relative path
  std::string image_hash;
  std::string config_hash;
  std::string strategy;
  std::string detector_id;
  std::string backend_id;
  std::string style_hash;
  std::string prompt_hash;
  std::string reply;
  std::vector<ReactionAnnotation> reactions;
  std::vector<BBox> boxes;  // boxes drawn on the visual prompt (bivp only)
  int dropped_empty = 0;
  std::string error_stage;  // "", "render", "backend", "parse", "resolve"
  std::string error_kind;
  std::string error_message;
  std::string recorded_at;  // UTC, provenance only, never folded into reports

  bool failed() const { return !error_stage.empty(); }
};

std::vector<PredictionRecord> load_prediction_store(const std::string& path);

struct PipelineResult {
  std::vector<PredictionRecord> records;  // corpus order
  std::size_t executed = 0;
  std::size_t resumed = 0;
  std::map<std::string, std::size_t> error_counts;  // "stage:kind" -> n
};

/// Runs detect/render/prompt/parse/resolve for every diagram, fanning out
/// across config.workers threads. When store_path is non-empty, records
/// append there as NDJSON and diagrams already present for the same config
/// hash are resumed instead of re-executed.
PipelineResult run_pipeline(const Corpus& corpus, const std::string& image_root,
                            Detector& detector, Backend& backend, const PipelineConfig& config,
                            const std::string& store_path = "");

struct EvaluationOutcome {
  MatchReport report;
  std::vector<DiagramResult> per_diagram;  // corpus order
  std::map<std::string, std::size_t> error_counts;
  std::size_t failed_diagrams = 0;
};

/// Scores records against the corpus ground truth. Records match diagrams by
/// image path; a missing or failed record scores that diagram all-FN.
EvaluationOutcome evaluate_predictions(const Corpus& corpus,
                                       const std::vector<PredictionRecord>& records,
                                       const MatchMode& mode);

enum class AblationMode { full, gt_boxes, gt_extraction };

const char* to_string(AblationMode mode);
AblationMode ablation_mode_from_string(const std::string& name);

struct AblationOutcome {
  AblationMode mode = AblationMode::full;
  MatchReport soft;
  MatchReport hybrid;
  std::map<std::string, std::size_t> error_counts;
};

/// Progressive ideal stages: full = detector boxes + backend; gt_boxes = GT
/// molecule boxes as the visual prompt; gt_extraction = detector boxes with
/// GT reactions remapped onto them by IoU, keeping only reactions whose
/// molecules were all recalled (no backend involved).
AblationOutcome run_ablation(const Corpus& corpus, const std::string& image_root,
                             Detector& detector, Backend& backend, AblationMode mode,
                             const PipelineConfig& config, const std::string& store_path = "");

/// gt_extraction predictions for one diagram, exposed for cross-checks.
std::vector<ReactionAnnotation> gt_extraction_predictions(const AnnotatedDiagram& diagram,
                                                          const std::vector<BBox>& detected,
                                                          double iou_threshold = 0.5);

struct LabeledReport {
  std::string label;  // empty for a single unlabeled report
  MatchReport report;
};

enum class ReportFormat { markdown, csv, svg };

ReportFormat report_format_from_string(const std::string& name);

/// Writes report files under out_dir and returns their paths. Output is
/// byte-stable for identical inputs. Values are shown as percentages with
/// one decimal; stored values keep full precision.
std::vector<std::string> emit_report(const std::vector<LabeledReport>& reports,
                                     ReportFormat format, const std::string& out_dir,
                                     bool include_macro = false);

/// "66.7" for 2/3. Presentation-only rounding.
std::string percent1(double fraction);

/// Reaction lists as JSON text in the prediction-record component shape
/// ({"kind", "bbox"?, "index"?, "content"?}); used by the store and the
/// python bindings.
std::string reactions_to_json_text(const std::vector<ReactionAnnotation>& reactions);
std::vector<ReactionAnnotation> reactions_from_json_text(const std::string& text);

struct VqaRunOutcome {
  VqaReport report;
  std::map<std::string, std::size_t> error_counts;
};

/// Asks all four VQA questions per diagram. Backend failures count as
/// undecodable answers and are tallied per error kind.
VqaRunOutcome run_vqa(const Corpus& corpus, const std::string& image_root, Backend& backend,
                      int workers = 1);

struct OcrResult {
  std::string image;
  int index = 0;  // 1-based molecule index
  std::string reply;
};

/// Crops every molecule box and passes it through the OCR prompt.
std::vector<OcrResult> run_ocr(const Corpus& corpus, const std::string& image_root,
                               Backend& backend);

void save_ocr_results(const std::vector<OcrResult>& results, const std::string& path);

}  // namespace rxndp
