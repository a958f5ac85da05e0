#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rxndp/backend.hpp"
#include "rxndp/corpus.hpp"
#include "rxndp/detector.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/harness.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/parse.hpp"
#include "rxndp/prompts.hpp"
#include "rxndp/report.hpp"
#include "rxndp/synthgen.hpp"
#include "rxndp/visual_prompt.hpp"

namespace {

using namespace rxndp;

std::string default_image_root(const std::string& corpus_path) {
  const std::filesystem::path parent = std::filesystem::path(corpus_path).parent_path();
  return parent.empty() ? "." : parent.string();
}

struct CorpusArgs {
  std::string path;
  std::string images;  // empty: directory of the corpus file
  std::string format = "rxncaption";
  bool select_complete = false;

  Corpus load() const {
    Corpus corpus = load_corpus(path, corpus_format_from_string(format));
    if (select_complete) corpus = filter_fully_annotated(corpus);
    return corpus;
  }
  std::string image_root() const { return images.empty() ? default_image_root(path) : images; }
};

void add_corpus_flags(CLI::App* cmd, CorpusArgs& args) {
  cmd->add_option("--corpus", args.path, "corpus JSON file")->required();
  cmd->add_option("--images", args.images, "image directory (default: corpus directory)");
  cmd->add_option("--format", args.format, "corpus format: rxncaption|rxnscribe")
      ->check(CLI::IsMember({"rxncaption", "rxnscribe"}));
  cmd->add_flag("--select-complete", args.select_complete,
                "keep only fully annotated diagrams (no free molecules)");
}

struct StyleArgs {
  int stroke = 3;
  double label_scale = 2.0;
  int padding = 2;
  std::string corner = "top-left";
  bool no_labels = false;

  VisualPromptStyle style() const {
    VisualPromptStyle s;
    s.stroke_width_px = stroke;
    s.label_scale = label_scale;
    s.padding_px = padding;
    s.label_corner = corner == "top-right" ? LabelCorner::top_right : LabelCorner::top_left;
    s.draw_labels = !no_labels;
    return s;
  }
};

void add_style_flags(CLI::App* cmd, StyleArgs& args) {
  cmd->add_option("--stroke", args.stroke, "box stroke width in pixels");
  cmd->add_option("--label-scale", args.label_scale, "index label scale factor");
  cmd->add_option("--padding", args.padding, "gap between box edge and label");
  cmd->add_option("--corner", args.corner, "label corner: top-left|top-right")
      ->check(CLI::IsMember({"top-left", "top-right"}));
  cmd->add_flag("--no-labels", args.no_labels, "stroke boxes without index labels");
}

struct NoiseArgs {
  double drop = 0.0, swap = 0.0, index = 0.0, typo = 0.0;
  std::uint64_t seed = 0;

  NoiseConfig noise() const {
    NoiseConfig n;
    n.drop_reaction_rate = drop;
    n.role_swap_rate = swap;
    n.index_corrupt_rate = index;
    n.text_typo_rate = typo;
    n.seed = seed;
    n.validate();
    return n;
  }
};

void add_noise_flags(CLI::App* cmd, NoiseArgs& args) {
  cmd->add_option("--noise-drop", args.drop, "oracle reaction drop rate");
  cmd->add_option("--noise-swap", args.swap, "oracle role swap rate");
  cmd->add_option("--noise-index", args.index, "oracle index corruption rate");
  cmd->add_option("--noise-typo", args.typo, "oracle text typo rate");
  cmd->add_option("--noise-seed", args.seed, "oracle noise seed");
}

std::unique_ptr<Backend> build_backend(const std::string& spec, const NoiseArgs& noise) {
  BackendConfig config = parse_backend_spec(spec);
  config.noise = noise.noise();
  return make_backend(config);
}

void print_report_line(std::ostream& os, const std::string& label, const MatchReport& r) {
  os << label << ": P=" << percent1(r.precision) << " R=" << percent1(r.recall)
     << " F1=" << percent1(r.f1) << " (tp=" << r.tp << " fp=" << r.fp << " fn=" << r.fn << ")\n";
}

void print_errors(std::ostream& os, const std::map<std::string, std::size_t>& errors) {
  if (errors.empty()) return;
  os << "failures:\n";
  for (const auto& [key, n] : errors) os << "  " << key << ": " << n << "\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Reaction diagram parsing toolkit"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "render a synthetic annotated corpus");
  std::uint64_t gen_seed = 42;
  int per_layout = 1;
  std::string gen_out;
  generate->add_option("--seed", gen_seed, "corpus seed");
  generate->add_option("--per-layout", per_layout, "diagrams per layout class")
      ->check(CLI::PositiveNumber);
  generate->add_option("--out", gen_out, "output directory")->required();

  // detect
  auto* detect = app.add_subcommand("detect", "run a molecule detector over a corpus");
  CorpusArgs detect_corpus;
  add_corpus_flags(detect, detect_corpus);
  std::string detect_spec = "blob";
  std::string detect_out;
  double detect_iou = 0.5;
  detect->add_option("--detector", detect_spec, "detector: blob|file:PATH|http:URL");
  detect->add_option("--out", detect_out, "write detections JSON here");
  detect->add_option("--iou", detect_iou, "match threshold for the printed P/R");

  // annotate
  auto* annotate = app.add_subcommand("annotate", "render visual prompts (boxes + indices)");
  CorpusArgs annotate_corpus;
  add_corpus_flags(annotate, annotate_corpus);
  StyleArgs annotate_style;
  add_style_flags(annotate, annotate_style);
  std::string annotate_boxes = "gt";
  std::string annotate_detector = "blob";
  std::string annotate_out;
  annotate->add_option("--boxes", annotate_boxes, "box source: detected|gt")
      ->check(CLI::IsMember({"detected", "gt"}));
  annotate->add_option("--detector", annotate_detector, "detector: blob|file:PATH|http:URL");
  annotate->add_option("--out", annotate_out, "output directory")->required();

  // parse
  auto* parse = app.add_subcommand("parse", "parse a raw model reply");
  std::string parse_strategy = "bivp";
  std::string parse_in;
  std::string parse_index_map;
  parse->add_option("--strategy", parse_strategy, "bros|bivp")
      ->check(CLI::IsMember({"bros", "bivp"}));
  parse->add_option("--in", parse_in, "reply file (default: stdin)");
  parse->add_option("--index-map", parse_index_map,
                    "JSON {\"1\": [x1,y1,x2,y2], ...}; resolves bivp indices");

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "run the pipeline and score it");
  CorpusArgs eval_corpus;
  add_corpus_flags(evaluate_cmd, eval_corpus);
  StyleArgs eval_style;
  add_style_flags(evaluate_cmd, eval_style);
  NoiseArgs eval_noise;
  add_noise_flags(evaluate_cmd, eval_noise);
  std::string eval_strategy = "bivp";
  std::string eval_detector = "blob";
  std::string eval_backend = "oracle";
  std::string eval_boxes = "gt";
  std::vector<std::string> eval_modes;
  std::string eval_out;
  int eval_workers = 1;
  bool eval_macro = false;
  evaluate_cmd->add_option("--strategy", eval_strategy, "bros|bivp")
      ->check(CLI::IsMember({"bros", "bivp"}));
  evaluate_cmd->add_option("--detector", eval_detector, "detector: blob|file:PATH|http:URL");
  evaluate_cmd->add_option("--backend", eval_backend, "backend: oracle|replay:PATH|http");
  evaluate_cmd->add_option("--boxes", eval_boxes, "box source: detected|gt")
      ->check(CLI::IsMember({"detected", "gt"}));
  evaluate_cmd->add_option("--mode", eval_modes, "match mode(s): soft|hard|hybrid")
      ->check(CLI::IsMember({"soft", "hard", "hybrid"}));
  evaluate_cmd->add_option("--out", eval_out, "directory for reports + predictions store");
  evaluate_cmd->add_option("--workers", eval_workers, "parallel diagrams")
      ->check(CLI::PositiveNumber);
  evaluate_cmd->add_flag("--macro", eval_macro, "also print per-layout macro means");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "progressive ideal-stage analysis");
  CorpusArgs ablate_corpus;
  add_corpus_flags(ablate, ablate_corpus);
  StyleArgs ablate_style;
  add_style_flags(ablate, ablate_style);
  NoiseArgs ablate_noise;
  add_noise_flags(ablate, ablate_noise);
  std::string ablate_detector = "blob";
  std::string ablate_backend = "oracle";
  std::string ablate_strategy = "bivp";
  std::vector<std::string> ablate_stages;
  std::string ablate_out;
  int ablate_workers = 1;
  ablate->add_option("--strategy", ablate_strategy, "bros|bivp")
      ->check(CLI::IsMember({"bros", "bivp"}));
  ablate->add_option("--detector", ablate_detector, "detector: blob|file:PATH|http:URL");
  ablate->add_option("--backend", ablate_backend, "backend: oracle|replay:PATH|http");
  ablate->add_option("--stage", ablate_stages, "stage(s): full|gt-boxes|gt-extraction")
      ->check(CLI::IsMember({"full", "gt-boxes", "gt-extraction"}));
  ablate->add_option("--out", ablate_out, "directory for reports");
  ablate->add_option("--workers", ablate_workers, "parallel diagrams")
      ->check(CLI::PositiveNumber);

  // vqa
  auto* vqa = app.add_subcommand("vqa", "run the four VQA questions");
  CorpusArgs vqa_corpus;
  add_corpus_flags(vqa, vqa_corpus);
  NoiseArgs vqa_noise;
  add_noise_flags(vqa, vqa_noise);
  std::string vqa_backend = "oracle";
  int vqa_workers = 1;
  vqa->add_option("--backend", vqa_backend, "backend: oracle|replay:PATH|http");
  vqa->add_option("--workers", vqa_workers, "parallel diagrams")->check(CLI::PositiveNumber);

  // report
  auto* report = app.add_subcommand("report", "re-score a predictions store");
  CorpusArgs report_corpus;
  add_corpus_flags(report, report_corpus);
  std::string report_in;
  std::vector<std::string> report_modes;
  std::vector<std::string> report_formats;
  std::string report_out;
  bool report_macro = false;
  report->add_option("--in", report_in, "predictions NDJSON store")->required();
  report->add_option("--mode", report_modes, "match mode(s): soft|hard|hybrid")
      ->check(CLI::IsMember({"soft", "hard", "hybrid"}));
  report->add_option("--report-format", report_formats, "markdown|csv|svg (repeatable)")
      ->check(CLI::IsMember({"markdown", "csv", "svg"}));
  report->add_option("--out", report_out, "output directory")->required();
  report->add_flag("--macro", report_macro, "include per-layout macro means");

  // prompt show
  auto* prompt = app.add_subcommand("prompt", "prompt template utilities");
  auto* prompt_show = prompt->add_subcommand("show", "print a template verbatim");
  std::string prompt_kind;
  bool prompt_hash_only = false;
  prompt_show->add_option("kind", prompt_kind, "bros|bivp|vqa_*|ocr")->required();
  prompt_show->add_flag("--hash", prompt_hash_only, "print the content hash instead");
  prompt->require_subcommand(1);

  // ocr
  auto* ocr = app.add_subcommand("ocr", "OCR every molecule crop");
  CorpusArgs ocr_corpus;
  add_corpus_flags(ocr, ocr_corpus);
  std::string ocr_backend = "oracle";
  std::string ocr_out;
  ocr->add_option("--backend", ocr_backend, "backend: oracle|replay:PATH|http");
  ocr->add_option("--out", ocr_out, "output JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (generate->parsed()) {
    const Corpus corpus = generate_corpus(gen_seed, per_layout, gen_out);
    std::cout << "diagrams: " << corpus.size() << "\n";
    std::cout << "manifest: " << corpus_manifest_hash(corpus) << "\n";
    return 0;
  }

  if (detect->parsed()) {
    const Corpus corpus = detect_corpus.load();
    auto detector = make_detector(parse_detector_spec(detect_spec));
    DetectionsFile detections;
    std::size_t matched = 0, n_pred = 0, n_gt = 0;
    for (const AnnotatedDiagram& diagram : corpus) {
      const Image img =
          load_image(resolve_image_path(detect_corpus.image_root(), diagram.image.path));
      std::vector<BBox> boxes = detector->detect(img, diagram.image.path);
      const DetectorPR pr = detector_pr(diagram.molecules, boxes, detect_iou);
      matched += pr.matched;
      n_pred += boxes.size();
      n_gt += diagram.molecules.size();
      detections[diagram.image.path] = std::move(boxes);
    }
    if (!detect_out.empty()) save_detections(detections, detect_out);
    const double p = n_pred == 0 ? 1.0 : static_cast<double>(matched) / n_pred;
    const double r = n_gt == 0 ? 1.0 : static_cast<double>(matched) / n_gt;
    std::cout << "precision=" << percent1(p) << " recall=" << percent1(r) << " matched=" << matched
              << " pred=" << n_pred << " gt=" << n_gt << "\n";
    return 0;
  }

  if (annotate->parsed()) {
    const Corpus corpus = annotate_corpus.load();
    const VisualPromptStyle style = annotate_style.style();
    style.validate();
    auto detector = make_detector(parse_detector_spec(annotate_detector));
    std::filesystem::create_directories(annotate_out);
    nlohmann::json maps = nlohmann::json::object();
    for (const AnnotatedDiagram& diagram : corpus) {
      const Image img =
          load_image(resolve_image_path(annotate_corpus.image_root(), diagram.image.path));
      const std::vector<BBox> boxes = annotate_boxes == "gt"
                                          ? diagram.molecules
                                          : detector->detect(img, diagram.image.path);
      const RenderResult rendered = render_visual_prompt(img, boxes, style);
      const std::string name = std::filesystem::path(diagram.image.path).filename().string();
      save_png(rendered.image, (std::filesystem::path(annotate_out) / name).string());
      nlohmann::json entry = nlohmann::json::object();
      for (const auto& [idx, box] : rendered.index_map)
        entry[std::to_string(idx)] = {box.x1, box.y1, box.x2, box.y2};
      maps[diagram.image.path] = std::move(entry);
    }
    std::ofstream out(std::filesystem::path(annotate_out) / "index_maps.json",
                      std::ios::binary);
    out << maps.dump(2) << "\n";
    std::cout << "annotated " << corpus.size() << " diagrams into " << annotate_out << "\n";
    return 0;
  }

  if (parse->parsed()) {
    std::string raw;
    if (parse_in.empty()) {
      std::ostringstream buf;
      buf << std::cin.rdbuf();
      raw = buf.str();
    } else {
      std::ifstream in(parse_in, std::ios::binary);
      if (!in) throw ConfigError("cannot open reply file: " + parse_in);
      std::ostringstream buf;
      buf << in.rdbuf();
      raw = buf.str();
    }
    const Strategy strategy = strategy_from_string(parse_strategy);
    try {
      ParsedOutput output =
          strategy == Strategy::bivp ? parse_bivp_output(raw) : parse_bros_output(raw);
      std::vector<ReactionAnnotation> reactions = output.reactions;
      if (strategy == Strategy::bivp && !parse_index_map.empty()) {
        std::ifstream in(parse_index_map, std::ios::binary);
        if (!in) throw ConfigError("cannot open index map: " + parse_index_map);
        nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object())
          throw ConfigError("index map must be a JSON object");
        IndexMap map;
        for (const auto& [key, value] : doc.items())
          map[std::stoi(key)] = BBox{value[0].get<double>(), value[1].get<double>(),
                                     value[2].get<double>(), value[3].get<double>()};
        reactions = resolve_bivp(output, map);
      }
      nlohmann::json result;
      result["strategy"] = to_string(strategy);
      result["dropped_empty"] = output.dropped_empty;
      nlohmann::json arr = nlohmann::json::array();
      for (const ReactionAnnotation& rxn : reactions) {
        nlohmann::json o;
        for (const auto& [key, role] : {std::pair{"reactants", &rxn.reactants},
                                        std::pair{"conditions", &rxn.conditions},
                                        std::pair{"products", &rxn.products}}) {
          nlohmann::json items = nlohmann::json::array();
          for (const Component& comp : *role) {
            nlohmann::json c;
            c["kind"] = to_string(comp.kind);
            if (comp.bbox) c["bbox"] = {comp.bbox->x1, comp.bbox->y1, comp.bbox->x2, comp.bbox->y2};
            if (comp.index) c["index"] = *comp.index;
            if (comp.content) c["content"] = *comp.content;
            items.push_back(std::move(c));
          }
          o[key] = std::move(items);
        }
        arr.push_back(std::move(o));
      }
      result["reactions"] = std::move(arr);
      std::cout << result.dump(2) << "\n";
      return 0;
    } catch (const ParseError& e) {
      std::cerr << "parse error (" << to_string(e.kind()) << "): " << e.what() << "\n";
      return 1;
    }
  }

  if (evaluate_cmd->parsed()) {
    const Corpus corpus = eval_corpus.load();
    auto detector = make_detector(parse_detector_spec(eval_detector));
    auto backend = build_backend(eval_backend, eval_noise);
    PipelineConfig config;
    config.strategy = strategy_from_string(eval_strategy);
    config.boxes = box_source_from_string(eval_boxes);
    config.style = eval_style.style();
    config.workers = eval_workers;
    std::string store;
    if (!eval_out.empty()) {
      std::filesystem::create_directories(eval_out);
      store = (std::filesystem::path(eval_out) / "predictions.ndjson").string();
    }
    const PipelineResult run =
        run_pipeline(corpus, eval_corpus.image_root(), *detector, *backend, config, store);
    std::cout << "executed=" << run.executed << " resumed=" << run.resumed << "\n";
    if (eval_modes.empty()) eval_modes = {"soft", "hard", "hybrid"};
    std::vector<LabeledReport> reports;
    for (const std::string& name : eval_modes) {
      MatchMode mode;
      mode.kind = match_kind_from_string(name);
      const EvaluationOutcome outcome = evaluate_predictions(corpus, run.records, mode);
      print_report_line(std::cout, name, outcome.report);
      if (eval_macro) {
        const MacroScores macro = macro_scores(outcome.report);
        std::cout << name << " (macro): P=" << percent1(macro.precision)
                  << " R=" << percent1(macro.recall) << " F1=" << percent1(macro.f1) << "\n";
      }
      reports.push_back({name, outcome.report});
    }
    print_errors(std::cout, run.error_counts);
    if (!eval_out.empty()) {
      for (ReportFormat fmt : {ReportFormat::markdown, ReportFormat::csv, ReportFormat::svg})
        emit_report(reports, fmt, eval_out, eval_macro);
      std::cout << "reports written to " << eval_out << "\n";
    }
    return 0;
  }

  if (ablate->parsed()) {
    const Corpus corpus = ablate_corpus.load();
    auto detector = make_detector(parse_detector_spec(ablate_detector));
    auto backend = build_backend(ablate_backend, ablate_noise);
    PipelineConfig config;
    config.strategy = strategy_from_string(ablate_strategy);
    config.style = ablate_style.style();
    config.workers = ablate_workers;
    if (ablate_stages.empty()) ablate_stages = {"full", "gt-boxes", "gt-extraction"};
    std::vector<LabeledReport> reports;
    for (const std::string& name : ablate_stages) {
      const AblationMode mode = ablation_mode_from_string(name);
      std::string store;
      if (!ablate_out.empty() && mode != AblationMode::gt_extraction) {
        std::filesystem::create_directories(ablate_out);
        store = (std::filesystem::path(ablate_out) / ("predictions_" + name + ".ndjson")).string();
      }
      const AblationOutcome outcome = run_ablation(corpus, ablate_corpus.image_root(), *detector,
                                                   *backend, mode, config, store);
      print_report_line(std::cout, name + "/soft", outcome.soft);
      print_report_line(std::cout, name + "/hybrid", outcome.hybrid);
      print_errors(std::cout, outcome.error_counts);
      reports.push_back({name, outcome.soft});
      reports.push_back({name, outcome.hybrid});
    }
    if (!ablate_out.empty()) {
      for (ReportFormat fmt : {ReportFormat::markdown, ReportFormat::csv, ReportFormat::svg})
        emit_report(reports, fmt, ablate_out, false);
      std::cout << "reports written to " << ablate_out << "\n";
    }
    return 0;
  }

  if (vqa->parsed()) {
    const Corpus corpus = vqa_corpus.load();
    auto backend = build_backend(vqa_backend, vqa_noise);
    const VqaRunOutcome outcome = run_vqa(corpus, vqa_corpus.image_root(), *backend, vqa_workers);
    for (const auto& [kind, acc] : outcome.report.accuracy) {
      std::cout << to_string(kind) << ": " << percent1(acc / 100.0) << " ("
                << outcome.report.counts.at(kind) << " asked";
      auto it = outcome.report.undecodable.find(kind);
      if (it != outcome.report.undecodable.end() && it->second > 0)
        std::cout << ", " << it->second << " undecodable";
      std::cout << ")\n";
    }
    std::cout << "mean: " << percent1(outcome.report.mean / 100.0) << "\n";
    print_errors(std::cout, outcome.error_counts);
    return 0;
  }

  if (report->parsed()) {
    const Corpus corpus = report_corpus.load();
    const std::vector<PredictionRecord> records = load_prediction_store(report_in);
    if (report_modes.empty()) report_modes = {"soft", "hard", "hybrid"};
    if (report_formats.empty()) report_formats = {"markdown", "csv", "svg"};
    std::vector<LabeledReport> reports;
    for (const std::string& name : report_modes) {
      MatchMode mode;
      mode.kind = match_kind_from_string(name);
      const EvaluationOutcome outcome = evaluate_predictions(corpus, records, mode);
      print_report_line(std::cout, name, outcome.report);
      reports.push_back({name, outcome.report});
    }
    for (const std::string& fmt : report_formats)
      for (const std::string& path :
           emit_report(reports, report_format_from_string(fmt), report_out, report_macro))
        std::cout << "wrote " << path << "\n";
    return 0;
  }

  if (prompt_show->parsed()) {
    const PromptKind kind = prompt_kind_from_string(prompt_kind);
    if (prompt_hash_only)
      std::cout << prompt_hash(kind) << "\n";
    else
      std::cout << build_prompt(kind);
    return 0;
  }

  if (ocr->parsed()) {
    const Corpus corpus = ocr_corpus.load();
    auto backend = build_backend(ocr_backend, NoiseArgs{});
    const std::vector<OcrResult> results = run_ocr(corpus, ocr_corpus.image_root(), *backend);
    save_ocr_results(results, ocr_out);
    std::cout << "ocr results for " << results.size() << " crops written to " << ocr_out << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const CorpusError& e) {
    std::cerr << "corpus error: " << e.what() << "\n";
    return 3;
  } catch (const BackendError& e) {
    std::cerr << "backend error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return e.kind() == BackendErrorKind::config || e.kind() == BackendErrorKind::auth ? 2 : 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}
