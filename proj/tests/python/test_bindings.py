# SPDX-License-Identifier: Apache-2.0
import json

import pytest

codesynth = pytest.importorskip("codesynth")


def test_parsers():
    assert codesynth.parse_topics("topic1 | topic2 | topic3", 3) == ["topic1", "topic2", "topic3"]
    with pytest.raises(codesynth.Error) as info:
        codesynth.parse_topics("a | b", 3)
    assert info.value.code == "count_mismatch"
    assert json.loads(codesynth.parse_json_payload('Here you go: {"a":1}')) == {"a": 1}
    assert codesynth.extract_code_block("```html\n<html></html>\n```", "html") == ("<html></html>", "html", False)
    triplets, dropped = codesynth.parse_qa_triplets("q | e | a\n\nbroken\n\nq2 | e2 | a2")
    assert triplets == [("q", "e", "a"), ("q2", "e2", "a2")]
    assert dropped == 1
    text = codesynth.format_qa_triplets(triplets)
    assert codesynth.parse_qa_triplets(text) == (triplets, 0)


def test_training_formats():
    assert codesynth.format_training_example(("Q?", "E.", "A"), "short_answer") == (
        "Q? Answer with as few words as possible.", "A")
    assert codesynth.format_training_example(("Q?", "E.", "A"), "cot") == (
        "Q? Provide reasoning steps and then give the short answer.", "E.\nAnswer: A")


def test_numeric_helpers():
    assert codesynth.mean_pairwise_cosine_distance([[1, 0], [0, 1]]) == pytest.approx(1.0)
    assert codesynth.mean_pairwise_cosine_distance([[1, 2], [2, 4]]) == pytest.approx(0.0)
    assert codesynth.normalize_coords(500, 250, 1000, 500) == (50.0, 50.0)
    with pytest.raises(codesynth.Error):
        codesynth.normalize_coords(-1, 0, 10, 10)


def test_registry_and_templates(data_dir):
    summary = codesynth.registry_summary(data_dir / "registry.jsonl")
    assert (summary["qa_pipelines"], summary["qa_categories"], summary["tools"], summary["pointing_pipelines"]) == (
        20, 9, 11, 1)
    alloc = codesynth.select_pipelines(data_dir / "registry.jsonl", "book covers", "documents", 7)
    assert alloc == [("documents-html", 4), ("documents-latex", 3)]
    assert codesynth.resolve_category("book covers") == "documents"
    assert codesynth.render_template("My persona is: PERSONA", {"PERSONA": "a chef"}) == "My persona is: a chef"
    assert codesynth.sample_persona(["only"], 42) == (0, "only")


def test_generate_in_process(tmp_path):
    code, out, err = codesynth.run_cli([
        "generate", "--query", "bar charts", "--count", "3", "--seed", "1", "--mock-provider",
        "--fixture-renderer", "--out", str(tmp_path / "shard")])
    assert code == 0, err
    assert json.loads(out)["succeeded"] == 3
    assert codesynth.validate_shard(tmp_path / "shard") == []
    # Mock scenes never use marker colors.
    with pytest.raises(codesynth.Error) as info:
        codesynth.extract_points(next((tmp_path / "shard" / "images").iterdir()), (255, 0, 255))
    assert info.value.code == "zero_markers_found"
