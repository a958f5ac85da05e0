import json

import pytest

import rxndp


def test_iou_identity_and_disjoint():
    assert rxndp.iou([0.1, 0.1, 0.5, 0.5], [0.1, 0.1, 0.5, 0.5]) == pytest.approx(1.0)
    assert rxndp.iou([0.0, 0.0, 0.2, 0.2], [0.5, 0.5, 0.9, 0.9]) == 0.0


def test_text_match_threshold():
    assert rxndp.text_match("Pd/C, H2", "Pd/C H2")
    assert not rxndp.text_match("H2O, 25°C", "DMF, 80°C")
    assert rxndp.edit_ratio("abc", "abd") == pytest.approx(1.0 / 3.0)


def test_parse_and_evaluate_roundtrip():
    raw = json.dumps(
        [
            {
                "reactants": [{"category": "structure", "bbox": [0.1, 0.1, 0.3, 0.3]}],
                "conditions": [],
                "products": [{"category": "structure", "bbox": [0.6, 0.1, 0.8, 0.3]}],
            }
        ]
    )
    parsed = rxndp.parse_model_output(raw, "bros")
    assert parsed["dropped_empty"] == 0
    scores = rxndp.evaluate(parsed["reactions_json"], parsed["reactions_json"], "soft")
    assert scores["tp"] == 1
    assert scores["f1"] == pytest.approx(1.0)


def test_parse_error_is_typed():
    with pytest.raises(rxndp.ParseError):
        rxndp.parse_model_output("no json array here", "bivp")


def test_generate_detect_annotate(tmp_path):
    count, manifest = rxndp.generate_corpus(7, 1, str(tmp_path))
    assert count == 4
    assert len(manifest) == 16

    corpus = json.loads((tmp_path / "corpus.json").read_text())
    assert len(corpus) == 4
    first = corpus[0]
    png = (tmp_path / first["image"]).read_bytes()

    detected = rxndp.detect_blobs(png)
    assert len(detected) == len(first["molecules"])

    annotated_png, index_map = rxndp.render_visual_prompt(png, first["molecules"])
    assert sorted(index_map) == list(range(1, len(first["molecules"]) + 1))
    assert annotated_png != png


def test_oracle_reply_scores_perfect(tmp_path):
    rxndp.generate_corpus(11, 1, str(tmp_path))
    corpus_json = (tmp_path / "corpus.json").read_text()
    reply = rxndp.oracle_reply(corpus_json, 0, "bivp")

    first = json.loads(corpus_json)[0]
    index_map = {i + 1: box for i, box in enumerate(first["molecules"])}
    resolved = rxndp.resolve_bivp(reply, index_map)

    gt = json.dumps(json.loads(corpus_json)[0]["reactions"])
    scores = rxndp.evaluate(gt, resolved, "hybrid")
    assert scores["f1"] == pytest.approx(1.0)


def test_prompt_templates_exposed():
    bivp = rxndp.build_prompt("bivp")
    assert "return an empty list []" in bivp
    assert "<image>" in bivp
    assert len(rxndp.prompt_hash("ocr")) == 16


def test_classify_layouts(tmp_path):
    rxndp.generate_corpus(3, 1, str(tmp_path))
    corpus_json = (tmp_path / "corpus.json").read_text()
    layouts = rxndp.classify_layouts(corpus_json)
    declared = [d["layout"] for d in json.loads(corpus_json)]
    assert layouts == declared
