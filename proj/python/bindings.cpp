#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <map>
#include <string>
#include <vector>

#include "rxndp/backend.hpp"
#include "rxndp/corpus.hpp"
#include "rxndp/detector.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/harness.hpp"
#include "rxndp/hash.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/parse.hpp"
#include "rxndp/prompts.hpp"
#include "rxndp/raster.hpp"
#include "rxndp/report.hpp"
#include "rxndp/synthgen.hpp"
#include "rxndp/text.hpp"
#include "rxndp/visual_prompt.hpp"

namespace py = pybind11;

namespace {

using Box = std::array<double, 4>;

rxndp::BBox to_bbox(const Box& b) { return {b[0], b[1], b[2], b[3]}; }

Box from_bbox(const rxndp::BBox& b) { return {b.x1, b.y1, b.x2, b.y2}; }

std::vector<rxndp::BBox> to_bboxes(const std::vector<Box>& boxes) {
  std::vector<rxndp::BBox> out;
  out.reserve(boxes.size());
  for (const Box& b : boxes) out.push_back(to_bbox(b));
  return out;
}

std::vector<Box> from_bboxes(const std::vector<rxndp::BBox>& boxes) {
  std::vector<Box> out;
  out.reserve(boxes.size());
  for (const rxndp::BBox& b : boxes) out.push_back(from_bbox(b));
  return out;
}

rxndp::MatchMode make_mode(const std::string& name) {
  rxndp::MatchMode mode;
  mode.kind = rxndp::match_kind_from_string(name);
  return mode;
}

}  // namespace

PYBIND11_MODULE(_rxndp, m) {
  m.doc() = "Reaction diagram parsing toolkit";

  py::register_exception<rxndp::ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<rxndp::CorpusError>(m, "CorpusError", PyExc_ValueError);
  py::register_exception<rxndp::RenderError>(m, "RenderError", PyExc_ValueError);
  py::register_exception<rxndp::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<rxndp::BackendError>(m, "BackendError", PyExc_RuntimeError);

  m.def("iou", [](const Box& a, const Box& b) { return rxndp::iou(to_bbox(a), to_bbox(b)); },
        py::arg("a"), py::arg("b"), "Intersection over union of two normalized boxes");

  m.def("text_match",
        [](const std::string& gt, const std::string& pred, double threshold) {
          return rxndp::text_match(gt, pred, threshold);
        },
        py::arg("gt"), py::arg("pred"), py::arg("threshold") = 0.2,
        "Edit-ratio text comparison over normalized strings");

  m.def("edit_ratio", &rxndp::edit_ratio, py::arg("a"), py::arg("b"));
  m.def("normalize_text", [](const std::string& s) { return rxndp::normalize_text(s); },
        py::arg("text"));
  m.def("levenshtein",
        [](const std::string& a, const std::string& b) { return rxndp::levenshtein(a, b); },
        py::arg("a"), py::arg("b"));
  m.def("content_hash", [](const std::string& s) { return rxndp::content_hash(s); },
        py::arg("data"));

  m.def("evaluate",
        [](const std::string& gt_json, const std::string& pred_json, const std::string& mode) {
          const auto gt = rxndp::reactions_from_json_text(gt_json);
          const auto pred = rxndp::reactions_from_json_text(pred_json);
          const rxndp::EvalCounts counts = rxndp::evaluate(gt, pred, make_mode(mode));
          const double p = rxndp::precision_of(counts.tp, counts.fp);
          const double r = rxndp::recall_of(counts.tp, counts.fn);
          py::dict out;
          out["tp"] = counts.tp;
          out["fp"] = counts.fp;
          out["fn"] = counts.fn;
          out["precision"] = p;
          out["recall"] = r;
          out["f1"] = rxndp::f1_of(p, r);
          return out;
        },
        py::arg("gt_reactions_json"), py::arg("pred_reactions_json"), py::arg("mode") = "soft",
        "Score predicted reactions against ground truth (JSON reaction lists)");

  m.def("parse_model_output",
        [](const std::string& raw, const std::string& strategy) {
          const rxndp::Strategy s = rxndp::strategy_from_string(strategy);
          const rxndp::ParsedOutput output = s == rxndp::Strategy::bivp
                                                 ? rxndp::parse_bivp_output(raw)
                                                 : rxndp::parse_bros_output(raw);
          py::dict out;
          out["reactions_json"] = rxndp::reactions_to_json_text(output.reactions);
          out["dropped_empty"] = output.dropped_empty;
          return out;
        },
        py::arg("raw"), py::arg("strategy"),
        "Extract reactions from free-form model text; raises ParseError on bad replies");

  m.def("resolve_bivp",
        [](const std::string& raw, const std::map<int, Box>& index_map) {
          rxndp::ParsedOutput output = rxndp::parse_bivp_output(raw);
          rxndp::IndexMap map;
          for (const auto& [idx, box] : index_map) map[idx] = to_bbox(box);
          return rxndp::reactions_to_json_text(rxndp::resolve_bivp(output, map));
        },
        py::arg("raw"), py::arg("index_map"));

  m.def("build_prompt",
        [](const std::string& kind) {
          return rxndp::build_prompt(rxndp::prompt_kind_from_string(kind));
        },
        py::arg("kind"));
  m.def("prompt_hash",
        [](const std::string& kind) {
          return rxndp::prompt_hash(rxndp::prompt_kind_from_string(kind));
        },
        py::arg("kind"));

  m.def("generate_corpus",
        [](std::uint64_t seed, int per_layout, const std::string& out_dir) {
          const rxndp::Corpus corpus = rxndp::generate_corpus(seed, per_layout, out_dir);
          return py::make_tuple(corpus.size(), rxndp::corpus_manifest_hash(corpus));
        },
        py::arg("seed"), py::arg("per_layout"), py::arg("out_dir"),
        "Render a synthetic corpus; returns (diagram count, manifest hash)");

  m.def("detect_blobs",
        [](const py::bytes& png) {
          const rxndp::Image img = rxndp::decode_image(std::string(png));
          return from_bboxes(rxndp::detect_blobs(img));
        },
        py::arg("png"), "Run the connected-component molecule detector on PNG bytes");

  m.def("render_visual_prompt",
        [](const py::bytes& png, const std::vector<Box>& boxes) {
          const rxndp::Image img = rxndp::decode_image(std::string(png));
          const rxndp::RenderResult result =
              rxndp::render_visual_prompt(img, to_bboxes(boxes), rxndp::VisualPromptStyle{});
          std::map<int, Box> index_map;
          for (const auto& [idx, box] : result.index_map) index_map[idx] = from_bbox(box);
          return py::make_tuple(py::bytes(rxndp::encode_png(result.image)), index_map);
        },
        py::arg("png"), py::arg("boxes"),
        "Draw boxes + index labels; returns (annotated PNG bytes, index map)");

  m.def("classify_layouts",
        [](const std::string& corpus_json, const std::string& format) {
          const rxndp::Corpus corpus =
              rxndp::parse_corpus(corpus_json, rxndp::corpus_format_from_string(format));
          std::vector<std::string> out;
          out.reserve(corpus.size());
          for (const rxndp::AnnotatedDiagram& diagram : corpus)
            out.push_back(rxndp::to_string(rxndp::classify_layout(diagram)));
          return out;
        },
        py::arg("corpus_json"), py::arg("format") = "rxncaption",
        "Geometric layout class per diagram of a corpus JSON document");

  m.def("oracle_reply",
        [](const std::string& corpus_json, std::size_t diagram_index,
           const std::string& strategy) {
          const rxndp::Corpus corpus =
              rxndp::parse_corpus(corpus_json, rxndp::CorpusFormat::rxncaption);
          if (diagram_index >= corpus.size()) throw rxndp::ConfigError("diagram index out of range");
          const rxndp::AnnotatedDiagram& diagram = corpus[diagram_index];
          rxndp::IndexMap map;
          for (std::size_t i = 0; i < diagram.molecules.size(); ++i)
            map[static_cast<int>(i) + 1] = diagram.molecules[i];
          return rxndp::oracle_reply(diagram, rxndp::strategy_from_string(strategy), map, {});
        },
        py::arg("corpus_json"), py::arg("diagram_index") = 0, py::arg("strategy") = "bivp",
        "Noise-free oracle reply for one corpus diagram (GT molecule boxes as the index map)");
}
