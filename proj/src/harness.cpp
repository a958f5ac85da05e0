#include "rxndp/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/raster.hpp"

namespace rxndp {
namespace {

using nlohmann::json;

ComponentKind component_kind_from_string(const std::string& name) {
  if (name == "mol") return ComponentKind::mol;
  if (name == "txt") return ComponentKind::txt;
  if (name == "idt") return ComponentKind::idt;
  if (name == "supplement") return ComponentKind::supplement;
  throw CorpusError("unknown component kind: " + name);
}

json component_to_json(const Component& comp) {
  json o;
  o["kind"] = to_string(comp.kind);
  if (comp.bbox) o["bbox"] = {comp.bbox->x1, comp.bbox->y1, comp.bbox->x2, comp.bbox->y2};
  if (comp.index) o["index"] = *comp.index;
  if (comp.content) o["content"] = *comp.content;
  return o;
}

Component component_from_json(const json& o) {
  Component comp;
  comp.kind = component_kind_from_string(o.at("kind").get<std::string>());
  if (o.contains("bbox")) {
    const json& b = o["bbox"];
    if (!b.is_array() || b.size() != 4) throw CorpusError("component bbox must have 4 values");
    comp.bbox = BBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                     b[3].get<double>()};
  }
  if (o.contains("index")) comp.index = o["index"].get<int>();
  if (o.contains("content")) comp.content = o["content"].get<std::string>();
  return comp;
}

json reactions_to_json(const std::vector<ReactionAnnotation>& reactions) {
  json arr = json::array();
  for (const ReactionAnnotation& rxn : reactions) {
    json o;
    for (const auto& [key, role] : {std::pair{"reactants", &rxn.reactants},
                                    std::pair{"conditions", &rxn.conditions},
                                    std::pair{"products", &rxn.products}}) {
      json items = json::array();
      for (const Component& comp : *role) items.push_back(component_to_json(comp));
      o[key] = std::move(items);
    }
    arr.push_back(std::move(o));
  }
  return arr;
}

std::vector<ReactionAnnotation> reactions_from_json(const json& arr) {
  std::vector<ReactionAnnotation> out;
  for (const json& o : arr) {
    ReactionAnnotation rxn;
    for (const auto& [key, role] : {std::pair{"reactants", &rxn.reactants},
                                    std::pair{"conditions", &rxn.conditions},
                                    std::pair{"products", &rxn.products}}) {
      if (!o.contains(key)) continue;
      for (const json& item : o[key]) role->push_back(component_from_json(item));
    }
    out.push_back(std::move(rxn));
  }
  return out;
}

json record_to_json(const PredictionRecord& rec) {
  json o;
  o["image"] = rec.image;
  o["image_hash"] = rec.image_hash;
  o["config_hash"] = rec.config_hash;
  o["strategy"] = rec.strategy;
  o["detector"] = rec.detector_id;
  o["backend"] = rec.backend_id;
  o["style_hash"] = rec.style_hash;
  o["prompt_hash"] = rec.prompt_hash;
  o["reply"] = rec.reply;
  o["reactions"] = reactions_to_json(rec.reactions);
  json boxes = json::array();
  for (const BBox& b : rec.boxes) boxes.push_back({b.x1, b.y1, b.x2, b.y2});
  o["boxes"] = std::move(boxes);
  o["dropped_empty"] = rec.dropped_empty;
  if (rec.failed()) {
    o["error"] = {{"stage", rec.error_stage},
                  {"kind", rec.error_kind},
                  {"message", rec.error_message}};
  } else {
    o["error"] = nullptr;
  }
  o["recorded_at"] = rec.recorded_at;
  return o;
}

PredictionRecord record_from_json(const json& o) {
  PredictionRecord rec;
  rec.image = o.at("image").get<std::string>();
  rec.image_hash = o.value("image_hash", "");
  rec.config_hash = o.value("config_hash", "");
  rec.strategy = o.value("strategy", "");
  rec.detector_id = o.value("detector", "");
  rec.backend_id = o.value("backend", "");
  rec.style_hash = o.value("style_hash", "");
  rec.prompt_hash = o.value("prompt_hash", "");
  rec.reply = o.value("reply", "");
  if (o.contains("reactions")) rec.reactions = reactions_from_json(o["reactions"]);
  if (o.contains("boxes")) {
    for (const json& b : o["boxes"])
      rec.boxes.push_back(
          BBox{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
  }
  rec.dropped_empty = o.value("dropped_empty", 0);
  if (o.contains("error") && o["error"].is_object()) {
    rec.error_stage = o["error"].value("stage", "unknown");
    rec.error_kind = o["error"].value("kind", "");
    rec.error_message = o["error"].value("message", "");
  }
  rec.recorded_at = o.value("recorded_at", "");
  return rec;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "report" : out;
}

const std::vector<Layout>& layout_display_order() {
  static const std::vector<Layout> order = {Layout::single_line, Layout::multi_line, Layout::tree,
                                            Layout::cyclic, Layout::unknown};
  return order;
}

// Worker fan-out over diagram ordinals; results land by index so aggregation
// ignores completion order.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& body) {
  const int count = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (count <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> cursor{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  }
  for (std::thread& t : pool) t.join();
}

}  // namespace

const char* to_string(BoxSource source) {
  return source == BoxSource::detected ? "detected" : "gt";
}

BoxSource box_source_from_string(const std::string& name) {
  if (name == "detected") return BoxSource::detected;
  if (name == "gt" || name == "ground-truth") return BoxSource::gt;
  throw ConfigError("unknown box source: " + name);
}

std::string PipelineConfig::config_hash(const std::string& detector_id,
                                        const std::string& backend_id) const {
  std::ostringstream os;
  os << to_string(strategy) << "|" << to_string(boxes) << "|" << style.cache_key() << "|"
     << detector_id << "|" << backend_id;
  return content_hash(os.str());
}

std::vector<PredictionRecord> load_prediction_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::vector<PredictionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json o = json::parse(line, nullptr, false);
    if (o.is_discarded() || !o.is_object() || !o.contains("image")) continue;  // torn write
    try {
      out.push_back(record_from_json(o));
    } catch (const Error&) {
      continue;
    } catch (const json::exception&) {
      continue;
    }
  }
  return out;
}

PipelineResult run_pipeline(const Corpus& corpus, const std::string& image_root,
                            Detector& detector, Backend& backend, const PipelineConfig& config,
                            const std::string& store_path) {
  config.style.validate();
  const std::string detector_id = detector.cache_key();
  const std::string backend_id = backend.id();
  const std::string cfg_hash = config.config_hash(detector_id, backend_id);

  std::map<std::string, PredictionRecord> resumable;
  if (!store_path.empty()) {
    for (PredictionRecord& rec : load_prediction_store(store_path))
      if (rec.config_hash == cfg_hash) resumable[rec.image] = std::move(rec);
  }

  PipelineResult result;
  result.records.resize(corpus.size());
  std::vector<char> fresh(corpus.size(), 0);

  std::mutex store_mutex;
  std::ofstream store;
  if (!store_path.empty()) {
    std::filesystem::path parent = std::filesystem::path(store_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    store.open(store_path, std::ios::binary | std::ios::app);
    if (!store) throw ConfigError("cannot open predictions store: " + store_path);
  }

  OracleBackend* oracle = dynamic_cast<OracleBackend*>(&backend);

  parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
    const AnnotatedDiagram& diagram = corpus[i];
    auto hit = resumable.find(diagram.image.path);
    if (hit != resumable.end()) {
      result.records[i] = hit->second;
      return;
    }

    PredictionRecord rec;
    rec.image = diagram.image.path;
    rec.config_hash = cfg_hash;
    rec.strategy = to_string(config.strategy);
    rec.detector_id = detector_id;
    rec.backend_id = backend_id;
    rec.style_hash = config.style.cache_key();
    rec.recorded_at = utc_now();

    std::string stage = "load";
    try {
      const Image img = load_image(resolve_image_path(image_root, diagram.image.path));
      Image outgoing = img;
      IndexMap index_map;
      if (config.strategy == Strategy::bivp) {
        stage = "detect";
        const std::vector<BBox> boxes = config.boxes == BoxSource::gt
                                            ? diagram.molecules
                                            : detector.detect(img, diagram.image.path);
        stage = "render";
        RenderResult rendered = render_visual_prompt(img, boxes, config.style);
        outgoing = std::move(rendered.image);
        index_map = std::move(rendered.index_map);
        for (const auto& [idx, box] : index_map) rec.boxes.push_back(box);
      }
      const std::string png = encode_png(outgoing);
      rec.image_hash = content_hash(png);
      const PromptKind kind =
          config.strategy == Strategy::bivp ? PromptKind::bivp : PromptKind::bros;
      rec.prompt_hash = prompt_hash(kind);
      if (oracle != nullptr) oracle->prime(rec.image_hash, {diagram, index_map, i});

      stage = "backend";
      CompletionRequest request;
      request.prompt = build_prompt(kind);
      request.image_png = png;
      rec.reply = backend.complete(request);

      stage = "parse";
      const ParsedOutput parsed = config.strategy == Strategy::bivp
                                      ? parse_bivp_output(rec.reply)
                                      : parse_bros_output(rec.reply);
      rec.dropped_empty = parsed.dropped_empty;

      stage = "resolve";
      rec.reactions = config.strategy == Strategy::bivp ? resolve_bivp(parsed, index_map)
                                                        : parsed.reactions;
    } catch (const ParseError& e) {
      rec.error_stage = stage;
      rec.error_kind = to_string(e.kind());
      rec.error_message = e.what();
      rec.reactions.clear();
    } catch (const BackendError& e) {
      rec.error_stage = stage;
      rec.error_kind = to_string(e.kind());
      rec.error_message = e.what();
      rec.reactions.clear();
    } catch (const Error& e) {
      rec.error_stage = stage;
      rec.error_kind = "error";
      rec.error_message = e.what();
      rec.reactions.clear();
    }

    if (store.is_open()) {
      const std::string line = record_to_json(rec).dump();
      std::lock_guard lock(store_mutex);
      store << line << "\n";
      store.flush();
    }
    result.records[i] = std::move(rec);
    fresh[i] = 1;
  });

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (fresh[i])
      ++result.executed;
    else
      ++result.resumed;
    const PredictionRecord& rec = result.records[i];
    if (rec.failed()) ++result.error_counts[rec.error_stage + ":" + rec.error_kind];
  }
  return result;
}

EvaluationOutcome evaluate_predictions(const Corpus& corpus,
                                       const std::vector<PredictionRecord>& records,
                                       const MatchMode& mode) {
  mode.validate();
  std::map<std::string, const PredictionRecord*> by_image;
  for (const PredictionRecord& rec : records) by_image[rec.image] = &rec;

  EvaluationOutcome outcome;
  static const std::vector<ReactionAnnotation> kNoReactions;
  for (const AnnotatedDiagram& diagram : corpus) {
    const std::vector<ReactionAnnotation>* pred = &kNoReactions;
    auto it = by_image.find(diagram.image.path);
    if (it == by_image.end()) {
      ++outcome.failed_diagrams;
      ++outcome.error_counts["missing:record"];
    } else if (it->second->failed()) {
      ++outcome.failed_diagrams;
      ++outcome.error_counts[it->second->error_stage + ":" + it->second->error_kind];
    } else {
      pred = &it->second->reactions;
    }
    const EvalCounts counts = evaluate(diagram.reactions, *pred, mode);
    outcome.per_diagram.push_back({diagram.layout, counts.tp, counts.fp, counts.fn});
  }
  outcome.report = aggregate(outcome.per_diagram, mode.kind);
  return outcome;
}

const char* to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::full: return "full";
    case AblationMode::gt_boxes: return "gt-boxes";
    case AblationMode::gt_extraction: return "gt-extraction";
  }
  return "full";
}

AblationMode ablation_mode_from_string(const std::string& name) {
  if (name == "full") return AblationMode::full;
  if (name == "gt-boxes" || name == "gt_boxes") return AblationMode::gt_boxes;
  if (name == "gt-extraction" || name == "gt_extraction") return AblationMode::gt_extraction;
  throw ConfigError("unknown ablation mode: " + name);
}

std::vector<ReactionAnnotation> gt_extraction_predictions(const AnnotatedDiagram& diagram,
                                                          const std::vector<BBox>& detected,
                                                          double iou_threshold) {
  std::vector<ReactionAnnotation> preds;
  for (const ReactionAnnotation& rxn : diagram.reactions) {
    ReactionAnnotation remapped = rxn;
    bool recalled = true;
    for (auto* role : {&remapped.reactants, &remapped.conditions, &remapped.products}) {
      for (Component& comp : *role) {
        if (comp.kind != ComponentKind::mol) continue;
        if (!comp.bbox) {
          recalled = false;
          break;
        }
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t d = 0; d < detected.size(); ++d) {
          const double v = iou(*comp.bbox, detected[d]);
          if (v > best_iou) {
            best_iou = v;
            best = static_cast<int>(d);
          }
        }
        if (best < 0 || best_iou <= iou_threshold) {
          recalled = false;
          break;
        }
        comp.bbox = detected[static_cast<std::size_t>(best)];
        comp.index.reset();  // the old index no longer names this box
      }
      if (!recalled) break;
    }
    if (recalled) preds.push_back(std::move(remapped));
  }
  return preds;
}

AblationOutcome run_ablation(const Corpus& corpus, const std::string& image_root,
                             Detector& detector, Backend& backend, AblationMode mode,
                             const PipelineConfig& config, const std::string& store_path) {
  AblationOutcome outcome;
  outcome.mode = mode;

  if (mode == AblationMode::gt_extraction) {
    std::vector<DiagramResult> soft_rows;
    std::vector<DiagramResult> hybrid_rows;
    for (const AnnotatedDiagram& diagram : corpus) {
      std::vector<ReactionAnnotation> preds;
      try {
        const Image img = load_image(resolve_image_path(image_root, diagram.image.path));
        preds = gt_extraction_predictions(diagram, detector.detect(img, diagram.image.path));
      } catch (const Error& e) {
        ++outcome.error_counts[std::string("detect:") + e.what()];
        preds.clear();
      }
      const EvalCounts soft = evaluate(diagram.reactions, preds, {MatchKind::soft});
      const EvalCounts hybrid = evaluate(diagram.reactions, preds, {MatchKind::hybrid});
      soft_rows.push_back({diagram.layout, soft.tp, soft.fp, soft.fn});
      hybrid_rows.push_back({diagram.layout, hybrid.tp, hybrid.fp, hybrid.fn});
    }
    outcome.soft = aggregate(soft_rows, MatchKind::soft);
    outcome.hybrid = aggregate(hybrid_rows, MatchKind::hybrid);
    return outcome;
  }

  PipelineConfig staged = config;
  staged.boxes = mode == AblationMode::gt_boxes ? BoxSource::gt : BoxSource::detected;
  const PipelineResult run =
      run_pipeline(corpus, image_root, detector, backend, staged, store_path);
  const EvaluationOutcome soft = evaluate_predictions(corpus, run.records, {MatchKind::soft});
  const EvaluationOutcome hybrid = evaluate_predictions(corpus, run.records, {MatchKind::hybrid});
  outcome.soft = soft.report;
  outcome.hybrid = hybrid.report;
  outcome.error_counts = run.error_counts;
  return outcome;
}

ReportFormat report_format_from_string(const std::string& name) {
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  if (name == "csv") return ReportFormat::csv;
  if (name == "svg") return ReportFormat::svg;
  throw ConfigError("unknown report format: " + name);
}

std::string percent1(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", fraction * 100.0);
  return buf;
}

std::string reactions_to_json_text(const std::vector<ReactionAnnotation>& reactions) {
  return reactions_to_json(reactions).dump();
}

std::vector<ReactionAnnotation> reactions_from_json_text(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array())
    throw CorpusError("reaction list must be a JSON array");
  try {
    return reactions_from_json(doc);
  } catch (const json::exception& e) {
    throw CorpusError(std::string("malformed reaction list: ") + e.what());
  }
}

namespace {

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write report file: " + path);
  out << body;
}

std::string markdown_report(const std::vector<LabeledReport>& reports, bool labeled,
                            bool include_macro) {
  std::ostringstream os;
  os << "# Evaluation report\n\n";
  os << (labeled ? "| run | mode | precision | recall | f1 | tp | fp | fn |\n"
                   "|---|---|---|---|---|---|---|---|\n"
                 : "| mode | precision | recall | f1 | tp | fp | fn |\n"
                   "|---|---|---|---|---|---|---|\n");
  for (const LabeledReport& item : reports) {
    const MatchReport& r = item.report;
    os << "| ";
    if (labeled) os << item.label << " | ";
    os << to_string(r.mode) << " | " << percent1(r.precision) << " | " << percent1(r.recall)
       << " | " << percent1(r.f1) << " | " << r.tp << " | " << r.fp << " | " << r.fn << " |\n";
  }
  if (include_macro) {
    os << "\n## Macro means over layouts\n\n";
    os << (labeled ? "| run | mode | precision | recall | f1 |\n|---|---|---|---|---|\n"
                   : "| mode | precision | recall | f1 |\n|---|---|---|---|\n");
    for (const LabeledReport& item : reports) {
      const MacroScores macro = macro_scores(item.report);
      os << "| ";
      if (labeled) os << item.label << " | ";
      os << to_string(item.report.mode) << " | " << percent1(macro.precision) << " | "
         << percent1(macro.recall) << " | " << percent1(macro.f1) << " |\n";
    }
  }
  for (const LabeledReport& item : reports) {
    if (item.report.per_layout.empty()) continue;
    os << "\n## Per-layout: ";
    if (labeled) os << item.label << " ";
    os << "(" << to_string(item.report.mode) << ")\n\n";
    os << "| layout | precision | recall | f1 | tp | fp | fn |\n|---|---|---|---|---|---|---|\n";
    for (Layout layout : layout_display_order()) {
      auto it = item.report.per_layout.find(layout);
      if (it == item.report.per_layout.end()) continue;
      const LayoutCounts& c = it->second;
      const double p = precision_of(c.tp, c.fp);
      const double r = recall_of(c.tp, c.fn);
      os << "| " << to_string(layout) << " | " << percent1(p) << " | " << percent1(r) << " | "
         << percent1(f1_of(p, r)) << " | " << c.tp << " | " << c.fp << " | " << c.fn << " |\n";
    }
  }
  return os.str();
}

std::string csv_report(const std::vector<LabeledReport>& reports, bool labeled) {
  std::ostringstream os;
  os << (labeled ? "label,mode,precision,recall,f1\n" : "mode,precision,recall,f1\n");
  for (const LabeledReport& item : reports) {
    const MatchReport& r = item.report;
    if (labeled) os << item.label << ",";
    os << to_string(r.mode) << "," << percent1(r.precision) << "," << percent1(r.recall) << ","
       << percent1(r.f1) << "\n";
  }
  return os.str();
}

std::string svg_report(const LabeledReport& item) {
  struct Group {
    std::string name;
    double p, r, f1;
  };
  std::vector<Group> groups;
  for (Layout layout : layout_display_order()) {
    auto it = item.report.per_layout.find(layout);
    if (it == item.report.per_layout.end()) continue;
    const LayoutCounts& c = it->second;
    const double p = precision_of(c.tp, c.fp);
    const double r = recall_of(c.tp, c.fn);
    groups.push_back({to_string(it->first), p, r, f1_of(p, r)});
  }
  if (groups.empty())
    groups.push_back({"all", item.report.precision, item.report.recall, item.report.f1});

  const int group_w = 120;
  const int left = 56;
  const int base_y = 220;
  const int plot_h = 170;
  const int width = left + group_w * static_cast<int>(groups.size()) + 24;
  const int height = 268;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  std::string title = item.label.empty() ? std::string(to_string(item.report.mode))
                                         : item.label + " (" + to_string(item.report.mode) + ")";
  os << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  for (int tick = 0; tick <= 100; tick += 25) {
    const int y = base_y - tick * plot_h / 100;
    os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << (width - 16) << "\" y2=\""
       << y << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << (left - 8) << "\" y=\"" << (y + 4)
       << "\" text-anchor=\"end\" fill=\"#555555\">" << tick << "</text>\n";
  }
  const char* colors[3] = {"#4c78a8", "#f58518", "#54a24b"};
  const char* series[3] = {"P", "R", "F1"};
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double values[3] = {groups[g].p, groups[g].r, groups[g].f1};
    const int gx = left + static_cast<int>(g) * group_w + 12;
    for (int s = 0; s < 3; ++s) {
      const int bar_h = static_cast<int>(std::lround(values[s] * plot_h));
      const int x = gx + s * 30;
      os << "<rect x=\"" << x << "\" y=\"" << (base_y - bar_h) << "\" width=\"24\" height=\""
         << bar_h << "\" fill=\"" << colors[s] << "\"/>\n";
      os << "<text x=\"" << (x + 12) << "\" y=\"" << (base_y - bar_h - 4)
         << "\" text-anchor=\"middle\" fill=\"#333333\">" << percent1(values[s]) << "</text>\n";
    }
    os << "<text x=\"" << (gx + 45) << "\" y=\"" << (base_y + 16)
       << "\" text-anchor=\"middle\">" << groups[g].name << "</text>\n";
  }
  const int legend_y = base_y + 34;
  for (int s = 0; s < 3; ++s) {
    const int x = left + s * 70;
    os << "<rect x=\"" << x << "\" y=\"" << (legend_y - 10) << "\" width=\"12\" height=\"12\""
       << " fill=\"" << colors[s] << "\"/>\n";
    os << "<text x=\"" << (x + 18) << "\" y=\"" << legend_y << "\">" << series[s] << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::vector<std::string> emit_report(const std::vector<LabeledReport>& reports,
                                     ReportFormat format, const std::string& out_dir,
                                     bool include_macro) {
  if (reports.empty()) throw ConfigError("emit_report needs at least one report");
  std::filesystem::create_directories(out_dir);
  const bool labeled = std::any_of(reports.begin(), reports.end(),
                                   [](const LabeledReport& r) { return !r.label.empty(); });
  std::vector<std::string> written;
  const std::filesystem::path dir(out_dir);
  switch (format) {
    case ReportFormat::markdown: {
      const std::string path = (dir / "report.md").string();
      write_file(path, markdown_report(reports, labeled, include_macro));
      written.push_back(path);
      break;
    }
    case ReportFormat::csv: {
      const std::string path = (dir / "report.csv").string();
      write_file(path, csv_report(reports, labeled));
      written.push_back(path);
      break;
    }
    case ReportFormat::svg: {
      for (const LabeledReport& item : reports) {
        std::string name = "report";
        if (labeled) {
          // Labels that just repeat the mode (the evaluate subcommand) stay single.
          const std::string mode_name = to_string(item.report.mode);
          std::string suffix = item.label.empty() ? mode_name : item.label;
          if (suffix != mode_name) suffix += "_" + mode_name;
          name += "_" + sanitize_label(suffix);
        }
        const std::string path = (dir / (name + ".svg")).string();
        write_file(path, svg_report(item));
        written.push_back(path);
      }
      break;
    }
  }
  return written;
}

VqaRunOutcome run_vqa(const Corpus& corpus, const std::string& image_root, Backend& backend,
                      int workers) {
  OracleBackend* oracle = dynamic_cast<OracleBackend*>(&backend);
  std::vector<std::vector<VqaItem>> per_diagram(corpus.size());
  std::vector<std::map<std::string, std::size_t>> errors(corpus.size());

  parallel_for(corpus.size(), workers, [&](std::size_t i) {
    const AnnotatedDiagram& diagram = corpus[i];
    const VqaGroundTruth gt = vqa_ground_truth(diagram);
    std::string png;
    try {
      png = encode_png(load_image(resolve_image_path(image_root, diagram.image.path)));
    } catch (const Error& e) {
      ++errors[i]["load:error"];
      for (PromptKind kind : vqa_prompt_kinds()) per_diagram[i].push_back({kind, "", gt});
      return;
    }
    if (oracle != nullptr) oracle->prime(content_hash(png), {diagram, {}, i});
    for (PromptKind kind : vqa_prompt_kinds()) {
      VqaItem item{kind, "", gt};
      try {
        CompletionRequest request;
        request.prompt = build_prompt(kind);
        request.image_png = png;
        item.reply = backend.complete(request);
      } catch (const BackendError& e) {
        ++errors[i][std::string("backend:") + to_string(e.kind())];
      } catch (const Error&) {
        ++errors[i]["backend:error"];
      }
      per_diagram[i].push_back(std::move(item));
    }
  });

  VqaRunOutcome outcome;
  std::vector<VqaItem> items;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    for (VqaItem& item : per_diagram[i]) items.push_back(std::move(item));
    for (const auto& [key, n] : errors[i]) outcome.error_counts[key] += n;
  }
  outcome.report = score_vqa(items);
  return outcome;
}

std::vector<OcrResult> run_ocr(const Corpus& corpus, const std::string& image_root,
                               Backend& backend) {
  std::vector<OcrResult> results;
  const std::string prompt = build_prompt(PromptKind::ocr);
  for (const AnnotatedDiagram& diagram : corpus) {
    const Image img = load_image(resolve_image_path(image_root, diagram.image.path));
    for (std::size_t m = 0; m < diagram.molecules.size(); ++m) {
      const BBox& box = diagram.molecules[m];
      int x1 = std::clamp(static_cast<int>(std::floor(box.x1 * img.width)), 0, img.width - 1);
      int y1 = std::clamp(static_cast<int>(std::floor(box.y1 * img.height)), 0, img.height - 1);
      int x2 = std::clamp(static_cast<int>(std::ceil(box.x2 * img.width)), x1 + 1, img.width);
      int y2 = std::clamp(static_cast<int>(std::ceil(box.y2 * img.height)), y1 + 1, img.height);
      Image crop = Image::blank(x2 - x1, y2 - y1);
      for (int y = y1; y < y2; ++y)
        for (int x = x1; x < x2; ++x) crop.set(x - x1, y - y1, img.get(x, y));
      OcrResult item;
      item.image = diagram.image.path;
      item.index = static_cast<int>(m) + 1;
      try {
        CompletionRequest request;
        request.prompt = prompt;
        request.image_png = encode_png(crop);
        item.reply = backend.complete(request);
      } catch (const Error&) {
        item.reply = "";
      }
      results.push_back(std::move(item));
    }
  }
  return results;
}

void save_ocr_results(const std::vector<OcrResult>& results, const std::string& path) {
  json doc = json::array();
  for (const OcrResult& item : results)
    doc.push_back({{"image", item.image}, {"index", item.index}, {"reply", item.reply}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write OCR results: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace rxndp
