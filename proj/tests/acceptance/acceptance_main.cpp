// Acceptance gate: one pass/fail line per criterion, exit code = failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "rxndp/backend.hpp"
#include "rxndp/detector.hpp"
#include "rxndp/errors.hpp"
#include "rxndp/harness.hpp"
#include "rxndp/matching.hpp"
#include "rxndp/parse.hpp"
#include "rxndp/prompts.hpp"
#include "rxndp/raster.hpp"
#include "rxndp/rng.hpp"
#include "rxndp/synthgen.hpp"
#include "rxndp/text.hpp"
#include "rxndp/visual_prompt.hpp"

#include "../unit/prompt_pins.hpp"
#include "../unit/test_util.hpp"

using namespace rxndp;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Gate {
  int failures = 0;

  void run(int number, const char* name, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    const auto start = Clock::now();
    try {
      ok = body(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", number, name,
                seconds_since(start), detail.empty() ? "" : " ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

// Moves a normalized box far enough that IoU against the original is <= 0.5,
// staying inside the unit square.
BBox displace_box(const BBox& b) {
  const double w = b.x2 - b.x1;
  const double h = b.y2 - b.y1;
  const double candidates[4][2] = {
      {1.2 * w, 0.0}, {-1.2 * w, 0.0}, {0.0, 1.2 * h}, {0.0, -1.2 * h}};
  for (const auto& d : candidates) {
    BBox moved{b.x1 + d[0], b.y1 + d[1], b.x2 + d[0], b.y2 + d[1]};
    if (moved.x1 < 0.0 || moved.y1 < 0.0 || moved.x2 > 1.0 || moved.y2 > 1.0) continue;
    if (iou(b, moved) <= 0.5) return moved;
  }
  // fall back to the far corner; only a near-full-frame box could still overlap
  const BBox corner = b.x1 > 0.5 ? BBox{0.0, 0.0, w, h} : BBox{1.0 - w, 1.0 - h, 1.0, 1.0};
  return corner;
}

std::size_t jitter_reaction(ReactionAnnotation& rxn) {
  std::size_t moved = 0;
  for (auto* role : {&rxn.reactants, &rxn.conditions, &rxn.products}) {
    for (Component& comp : *role) {
      if (comp.kind != ComponentKind::mol || !comp.bbox) continue;
      const BBox displaced = displace_box(*comp.bbox);
      if (iou(*comp.bbox, displaced) > 0.5) return 0;  // construction failed
      comp.bbox = displaced;
      ++moved;
    }
  }
  return moved;
}

double corpus_soft_f1(const Corpus& corpus,
                      const std::vector<std::vector<ReactionAnnotation>>& preds) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const EvalCounts counts = evaluate(corpus[i].reactions, preds[i], MatchMode{MatchKind::soft});
    tp += counts.tp;
    fp += counts.fp;
    fn += counts.fn;
  }
  const double denom = 2.0 * tp + fp + fn;
  return denom == 0.0 ? 1.0 : 2.0 * tp / denom;
}

}  // namespace

int main() {
  Gate gate;

  // Shared fixture used by most criteria: 100 diagrams per layout, seed 42.
  test::TempDir corpus_dir("acceptance_corpus");
  const auto gen_start = Clock::now();
  const Corpus corpus = generate_corpus(42, 100, corpus_dir.str());
  std::printf("fixture: %zu diagrams under %s (%.1fs)\n", corpus.size(), corpus_dir.str().c_str(),
              seconds_since(gen_start));
  std::fflush(stdout);

  gate.run(1, "matching optimality against brute force", [&](std::string& detail) {
    const auto start = Clock::now();
    Rng rng(0xacce5501u);
    for (int i = 0; i < 1000; ++i) {
      const auto gt = test::random_reactions(rng, 4, 6);
      const auto pred = test::random_reactions(rng, 4, 6);
      for (MatchKind kind : {MatchKind::soft, MatchKind::hard, MatchKind::hybrid}) {
        const MatchMode mode{kind};
        const std::size_t got = evaluate(gt, pred, mode).tp;
        const std::size_t want = test::brute_force_tp(gt, pred, mode);
        if (got != want) {
          detail = "instance " + std::to_string(i) + " mode " + to_string(kind) + ": tp " +
                   std::to_string(got) + " vs brute force " + std::to_string(want);
          return false;
        }
      }
    }
    if (seconds_since(start) >= 60.0) {
      detail = "exceeded 60 s";
      return false;
    }
    return true;
  });

  gate.run(2, "ideal-pipeline ceiling at exactly 100.0", [&](std::string& detail) {
    const auto start = Clock::now();
    auto detector = make_detector(parse_detector_spec("blob"));
    OracleBackend backend;
    PipelineConfig config;  // bivp, gt boxes, one worker
    const PipelineResult run =
        run_pipeline(corpus, corpus_dir.str(), *detector, backend, config);
    const double soft =
        evaluate_predictions(corpus, run.records, MatchMode{MatchKind::soft}).report.f1;
    const double hybrid =
        evaluate_predictions(corpus, run.records, MatchMode{MatchKind::hybrid}).report.f1;
    if (soft * 100.0 != 100.0 || hybrid * 100.0 != 100.0) {
      detail = "soft " + percent1(soft) + " hybrid " + percent1(hybrid);
      return false;
    }
    if (!run.error_counts.empty()) {
      detail = "pipeline reported errors";
      return false;
    }
    if (seconds_since(start) >= 120.0) {
      detail = "exceeded 120 s";
      return false;
    }
    return true;
  });

  gate.run(3, "metric strictly decreases under box jitter", [&](std::string& detail) {
    // precise single-reaction bookkeeping first
    {
      const AnnotatedDiagram& d = corpus.front();
      std::vector<ReactionAnnotation> pred = d.reactions;
      const EvalCounts before = evaluate(d.reactions, pred, MatchMode{MatchKind::soft});
      if (jitter_reaction(pred[0]) == 0) {
        detail = "could not displace the probe reaction";
        return false;
      }
      const EvalCounts after = evaluate(d.reactions, pred, MatchMode{MatchKind::soft});
      if (after.tp != before.tp - 1 || after.fp != before.fp + 1 || after.fn != before.fn + 1) {
        detail = "jittered reaction did not convert one TP into FP+FN";
        return false;
      }
    }
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      const double fraction = rng.uniform_int(1, 100) / 100.0;
      std::vector<std::vector<ReactionAnnotation>> preds;
      preds.reserve(corpus.size());
      std::size_t jittered = 0;
      for (const AnnotatedDiagram& d : corpus) {
        std::vector<ReactionAnnotation> p = d.reactions;
        for (ReactionAnnotation& rxn : p) {
          if (!rng.bernoulli(fraction)) continue;
          if (jitter_reaction(rxn) == 0) {
            detail = "could not displace a reaction";
            return false;
          }
          ++jittered;
        }
        preds.push_back(std::move(p));
      }
      if (jittered == 0) {
        std::vector<ReactionAnnotation>& p = preds.front();
        if (jitter_reaction(p[0]) == 0) {
          detail = "could not displace a reaction";
          return false;
        }
        ++jittered;
      }
      const double f1 = corpus_soft_f1(corpus, preds);
      if (!(f1 < 1.0)) {
        detail = "seed " + std::to_string(seed) + ": f1 did not decrease (" +
                 std::to_string(f1) + ")";
        return false;
      }
    }
    return true;
  });

  gate.run(4, "text matching conformance", [&](std::string& detail) {
    if (!text_match("NaH THF", "NaH THF", 0.2) || !text_match("Pd/C, H2", "Pd/C H2", 0.2) ||
        text_match("H2O, 25°C", "DMF, 80°C", 0.2)) {
      detail = "reference verdicts failed";
      return false;
    }
    Rng rng(0xacce5504u);
    for (int i = 0; i < 500; ++i) {
      const std::string gt = test::random_ascii(rng, 5, 40);
      const int budget = static_cast<int>(0.2 * gt.size());
      const std::string pred = test::mutate_ascii(rng, gt, rng.uniform_int(0, budget));
      const std::size_t longer = std::max(std::max(gt.size(), pred.size()), std::size_t{1});
      const bool oracle =
          static_cast<double>(test::dp_edit_distance(gt, pred)) / static_cast<double>(longer) <=
          0.2;
      if (text_match(gt, pred, 0.2) != oracle) {
        detail = "disagreement on pair " + std::to_string(i);
        return false;
      }
    }
    return true;
  });

  gate.run(5, "detector precision and recall on the synthetic corpus", [&](std::string& detail) {
    const auto start = Clock::now();
    auto detector = make_detector(parse_detector_spec("blob"));
    const DetectorEval eval = evaluate_detector(corpus, corpus_dir.str(), *detector);
    if (eval.precision < 0.95 || eval.recall < 0.95) {
      detail = "P " + percent1(eval.precision) + " R " + percent1(eval.recall);
      return false;
    }
    if (seconds_since(start) >= 60.0) {
      detail = "exceeded 60 s";
      return false;
    }
    return true;
  });

  gate.run(6, "renderer locality and label round trip", [&](std::string& detail) {
    const VisualPromptStyle style;
    for (std::size_t i = 0; i < 100 && i < corpus.size(); ++i) {
      const AnnotatedDiagram& d = corpus[i];
      const Image before = load_image(resolve_image_path(corpus_dir.str(), d.image.path));
      const RenderResult result = render_visual_prompt(before, d.molecules, style);
      const auto plan =
          plan_overlay(before.width, before.height, assign_indices(d.molecules), style);
      if (!test::changes_are_local(before, result.image, plan, style)) {
        detail = d.image.path + ": pixels changed outside box and label regions";
        return false;
      }
      std::set<int> decoded;
      for (const BoxOverlay& ov : plan) {
        const int got = test::decode_label(result.image, ov);
        if (got != ov.index) {
          detail = d.image.path + ": label " + std::to_string(ov.index) + " decoded as " +
                   std::to_string(got);
          return false;
        }
        decoded.insert(got);
      }
      if (decoded.size() != d.molecules.size() ||
          (!decoded.empty() &&
           (*decoded.begin() != 1 ||
            *decoded.rbegin() != static_cast<int>(d.molecules.size())))) {
        detail = d.image.path + ": decoded indices are not 1..N";
        return false;
      }
    }
    return true;
  });

  gate.run(7, "parser never crashes on mutated payloads", [&](std::string& detail) {
    std::vector<std::pair<Strategy, std::string>> pool;
    { // schema-exact seeds from the oracle over a few diagrams
      for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const RenderedDiagram r = render_spec(generate_spec(seed, Layout::multi_line, 2));
        IndexMap map;
        const auto ordered = assign_indices(r.diagram.molecules);
        for (std::size_t i = 0; i < ordered.size(); ++i)
          map[static_cast<int>(i) + 1] = ordered[i];
        pool.emplace_back(Strategy::bros, oracle_reply(r.diagram, Strategy::bros, {}, {}, 0));
        pool.emplace_back(Strategy::bivp, oracle_reply(r.diagram, Strategy::bivp, map, {}, 0));
      }
    }
    Rng rng(0xacce5507u);
    int parsed_ok = 0, typed_errors = 0;
    for (int i = 0; i < 10000; ++i) {
      const auto& [strategy, payload] = pool[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
      std::string mutated = payload;
      const int edits = rng.uniform_int(1, 8);
      for (int e = 0; e < edits && !mutated.empty(); ++e) {
        const std::size_t pos =
            static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(mutated.size()) - 1));
        const int op = rng.uniform_int(0, 2);
        const char c = static_cast<char>(rng.uniform_int(1, 255));
        if (op == 0) mutated[pos] = c;
        else if (op == 1) mutated.insert(mutated.begin() + static_cast<long>(pos), c);
        else mutated.erase(mutated.begin() + static_cast<long>(pos));
      }
      try {
        const ParsedOutput out = strategy == Strategy::bros ? parse_bros_output(mutated)
                                                            : parse_bivp_output(mutated);
        (void)out;
        ++parsed_ok;
      } catch (const ParseError&) {
        ++typed_errors;
      } catch (const std::exception& e) {
        detail = "case " + std::to_string(i) + " escaped with: " + e.what();
        return false;
      }
    }
    if (parsed_ok == 0 || typed_errors == 0) {
      detail = "fuzz pool did not exercise both outcomes";
      return false;
    }
    return true;
  });

  gate.run(8, "layout classification agrees with generator intent", [&](std::string& detail) {
    for (const AnnotatedDiagram& d : corpus) {
      if (classify_layout(d) != d.layout) {
        detail = d.image.path + ": classified " + std::string(to_string(classify_layout(d))) +
                 " vs intended " + to_string(d.layout);
        return false;
      }
    }
    return true;
  });

  gate.run(9, "condition molecules merge under soft and split under hard", [&](std::string&) {
    const BBox a{0.05, 0.40, 0.20, 0.60};
    const BBox catalyst{0.35, 0.15, 0.45, 0.30};
    const BBox b{0.60, 0.40, 0.75, 0.60};
    ReactionAnnotation gt;
    gt.reactants = {Component::mol_box(a)};
    gt.conditions = {Component::mol_box(catalyst)};
    gt.products = {Component::mol_box(b)};
    ReactionAnnotation pred;
    pred.reactants = {Component::mol_box(a), Component::mol_box(catalyst)};
    pred.products = {Component::mol_box(b)};
    return reaction_matches(gt, pred, MatchMode{MatchKind::soft}) &&
           !reaction_matches(gt, pred, MatchMode{MatchKind::hard});
  });

  gate.run(10, "vqa oracle sweep and pinned prompt templates", [&](std::string& detail) {
    for (const auto& [kind, pin] : test::prompt_hash_pins()) {
      if (prompt_hash(kind) != pin) {
        detail = std::string("template drifted: ") + to_string(kind);
        return false;
      }
    }
    OracleBackend backend;
    const VqaRunOutcome outcome = run_vqa(corpus, corpus_dir.str(), backend);
    for (PromptKind kind : vqa_prompt_kinds()) {
      if (outcome.report.accuracy.at(kind) != 100.0) {
        detail = std::string(to_string(kind)) + " at " +
                 percent1(outcome.report.accuracy.at(kind) / 100.0);
        return false;
      }
    }
    if (outcome.report.mean != 100.0) {
      detail = "mean " + percent1(outcome.report.mean / 100.0);
      return false;
    }
    return true;
  });

  if (gate.failures == 0)
    std::printf("all 10 acceptance criteria passed\n");
  else
    std::printf("%d acceptance criteria failed\n", gate.failures);
  return gate.failures;
}
