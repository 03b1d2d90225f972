import json
import math
import os
import random
import shutil
from pathlib import Path

import pytest

import verbcal

SRC = Path(os.environ.get("VERBCAL_SOURCE_DIR", Path(__file__).resolve().parents[2]))


def test_metric_examples():
    conf = [1.0] * 10
    correct = [True] * 6 + [False] * 4
    assert verbcal.ece(conf, correct) == pytest.approx(0.16, abs=1e-12)
    assert verbcal.ece(conf, correct, mode="absolute") == pytest.approx(0.4, abs=1e-12)
    assert verbcal.brier([0.8, 0.3], [True, False]) == pytest.approx((0.04 + 0.09) / 2)
    assert verbcal.selective_auc([0.9, 0.5, 0.1], [True, False, True]) == pytest.approx((1 + 0.5 + 2 / 3) / 3)
    assert verbcal.entropy_score([5, 5]) == pytest.approx(math.log(2))
    bins = verbcal.reliability_bins([0.05, 0.95], [False, True], 10)
    assert len(bins) == 10 and bins[0]["count"] == 1 and bins[1]["mean_accuracy"] is None


def test_bad_input_raises():
    with pytest.raises(verbcal.InvalidInput):
        verbcal.ece([1.5], [True])
    with pytest.raises(verbcal.InvalidInput):
        verbcal.brier([0.5, 0.5], [True])


def test_temperature_on_calibrated_data():
    rng = random.Random(3)
    conf = [rng.random() for _ in range(5000)]
    correct = [rng.random() < c for c in conf]
    assert 0.9 <= verbcal.fit_temperature(conf, correct) <= 1.12
    r = verbcal.cross_fit_metrics(conf, correct, num_folds=5, seed=1)
    assert r["rotations"] == 5 and len(r["temperatures"]) == 5
    assert verbcal.scale_confidence(0.5, 3.0) == 0.5
    assert verbcal.scale_confidence(0.8, 2.0) == pytest.approx(0.64 / (0.64 + 0.04))


def test_parsing():
    assert verbcal.parse_guess_prob("Guess: Paris\nProbability: 85%") == ("Paris", pytest.approx(0.85))
    assert verbcal.parse_topk("G1: A\nP1: 0.2\nG2: B\nP2: 0.7", 2) == [("B", 0.7), ("A", 0.2)]
    with pytest.raises(verbcal.ParseFailure):
        verbcal.parse_guess("I cannot answer that.")


def test_prompt_matches_golden_file():
    golden = (SRC / "tests/golden/label_prob.template.txt").read_text()
    q = " Who wrote Hamlet?"
    assert verbcal.render_prompt("label_prob", q) == golden.replace("${THE_QUESTION}", q)
    with pytest.raises(verbcal.VerbcalError):
        verbcal.render_prompt("label_prob", q, stage=2)


def test_sampling_is_reproducible():
    ids = [f"q{i}" for i in range(500)]
    a = verbcal.sample_ids(ids, 100, 9)
    assert a == verbcal.sample_ids(ids, 100, 9)
    assert len(set(a)) == 100
    with pytest.raises(verbcal.InvalidInput):
        verbcal.sample_ids(ids, 501, 9)


def test_example_run_and_score(tmp_path):
    shutil.copy(SRC / "config/expressions.tsv", tmp_path / "expressions.tsv")
    shutil.copytree(SRC / "config/example", tmp_path / "example")
    cfg_path = tmp_path / "example/run.json"
    cfg = json.loads(cfg_path.read_text())
    cfg["output_dir"] = "out"
    cfg_path.write_text(json.dumps(cfg))

    first = verbcal.run(str(cfg_path))
    assert first == {"tasks": 24, "skipped_existing": 0, "written": 24, "failed": 0}
    assert verbcal.run(str(cfg_path))["written"] == 0

    report = verbcal.score(cfg_path)
    methods = [r["method"] for r in report["rows"]]
    assert methods == ["Label prob.", "Entropy", "Verb. 1S top-2", "Ling. 1S-human", "Ling. 1S-opt."]
    for row in report["rows"]:
        assert row["n_evaluated"] + row["n_parse_failed"] == row["n_attempted"] == 6
    table = verbcal.metrics_table(verbcal.score_json(str(cfg_path)))
    assert "Entropy             ---" in table

    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    with pytest.raises(verbcal.ConfigError):
        verbcal.run(str(bad))
