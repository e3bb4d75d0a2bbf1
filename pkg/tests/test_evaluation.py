import math

import numpy as np
import pytest

import oracles
from hoodclaims.claims import ClaimLabel
from hoodclaims.evaluation import (
    GoldLabel,
    evaluate,
    format_report,
    load_gold,
    report_to_csv_rows,
)


def labels_from(pairs):
    gold = [GoldLabel(f"id{i}", g) for i, (g, _) in enumerate(pairs)]
    preds = [ClaimLabel(f"id{i}", p, "title", "string-match") for i, (_, p) in enumerate(pairs)]
    return preds, gold


def test_evaluate_hand_worked_example():
    # 6 listings, 3 classes; class c never predicted.
    pairs = [("a", "a"), ("a", "b"), ("b", "b"), ("b", "b"), ("c", "a"), ("c", "b")]
    preds, gold = labels_from(pairs)
    report = evaluate(preds, gold)
    by_name = {m.name: m for m in report.per_class}
    assert set(by_name) == {"a", "b", "c"}

    a = by_name["a"]
    assert (a.tp, a.fp, a.fn, a.support) == (1, 1, 1, 2)
    assert a.precision == 0.5 and a.recall == 0.5 and a.f1 == 0.5

    b = by_name["b"]
    assert (b.tp, b.fp, b.fn, b.support) == (2, 2, 0, 2)
    assert b.precision == 0.5 and b.recall == 1.0
    assert math.isclose(b.f1, 2 / 3)

    c = by_name["c"]
    assert (c.tp, c.fp, c.fn, c.support) == (0, 0, 2, 2)
    assert c.precision is None  # never predicted
    assert c.recall == 0.0 and c.f1 == 0.0

    assert report.accuracy == 0.5
    assert math.isclose(report.macro_precision, (0.5 + 0.5 + 0.0) / 3)
    assert math.isclose(report.macro_recall, 0.5)
    assert math.isclose(report.macro_f1, (0.5 + 2 / 3 + 0.0) / 3)
    assert report.n_evaluated == 6


def test_evaluate_matches_counting_oracle_on_random_sets():
    rng = np.random.default_rng(4)
    vocab = ["a", "b", "c", "d", "unknown"]
    for _ in range(60):
        n = int(rng.integers(1, 40))
        pairs = [
            (vocab[int(rng.integers(0, len(vocab)))], vocab[int(rng.integers(0, len(vocab)))])
            for _ in range(n)
        ]
        preds, gold = labels_from(pairs)
        report = evaluate(preds, gold)
        expected = oracles.confusion_metrics(pairs)
        assert [m.name for m in report.per_class] == expected["classes"]
        for metrics in report.per_class:
            want = expected["per_class"][metrics.name]
            assert metrics.tp == want["tp"] and metrics.fp == want["fp"]
            assert metrics.fn == want["fn"] and metrics.support == want["support"]
            if want["precision"] is None:
                assert metrics.precision is None
            else:
                assert math.isclose(metrics.precision, want["precision"], abs_tol=1e-12)
            assert math.isclose(metrics.recall, want["recall"], abs_tol=1e-12)
            assert math.isclose(metrics.f1, want["f1"], abs_tol=1e-12)
        assert math.isclose(report.accuracy, expected["accuracy"], abs_tol=1e-12)
        assert math.isclose(report.macro_f1, expected["macro"]["f1"], abs_tol=1e-12)
        assert math.isclose(report.weighted_precision, expected["weighted"]["precision"], abs_tol=1e-12)
        assert math.isclose(report.weighted_recall, expected["weighted"]["recall"], abs_tol=1e-12)
        assert math.isclose(report.weighted_f1, expected["weighted"]["f1"], abs_tol=1e-12)


def test_evaluate_requires_prediction_for_every_gold_id():
    gold = [GoldLabel("g1", "a"), GoldLabel("g2", "a")]
    preds = [ClaimLabel("g1", "a", "title", "string-match")]
    with pytest.raises(ValueError, match="g2"):
        evaluate(preds, gold)


def test_evaluate_rejects_empty_gold():
    with pytest.raises(ValueError, match="empty"):
        evaluate([], [])


def test_extra_predictions_are_ignored():
    gold = [GoldLabel("g1", "a")]
    preds = [
        ClaimLabel("g1", "a", "title", "string-match"),
        ClaimLabel("extra", "b", "title", "string-match"),
    ]
    report = evaluate(preds, gold)
    assert report.n_evaluated == 1
    assert report.accuracy == 1.0


def test_format_report_dash_and_footnote():
    pairs = [("a", "a"), ("c", "a")]
    preds, gold = labels_from(pairs)
    text = format_report(evaluate(preds, gold))
    lines = text.splitlines()
    c_line = next(l for l in lines if l.startswith("c "))
    assert " - " in f" {c_line} " or c_line.split()[1] == "-"
    assert "undefined precision" in text
    assert any("accuracy" in l for l in lines)


def test_report_to_csv_rows_shapes():
    pairs = [("a", "a"), ("b", "a")]
    preds, gold = labels_from(pairs)
    rows = report_to_csv_rows(evaluate(preds, gold))
    header = rows[0]
    assert header[0] == "class"
    names = [r[0] for r in rows[1:]]
    assert "a" in names and "b" in names
    assert "accuracy" in names and "macro avg" in names and "weighted avg" in names
    b_row = next(r for r in rows if r[0] == "b")
    assert b_row[1] == ""  # undefined precision stays blank in CSV


def test_load_gold_normalizes_and_rejects_duplicates(tmp_path, city_gazetteer, city_table):
    path = tmp_path / "gold.csv"
    path.write_text("listing_id,gold\nx1,Gold Crest\nx2,narnia\n", encoding="utf-8")
    gold = load_gold(path, city_table, city_gazetteer)
    assert [(g.listing_id, g.claim) for g in gold] == [("x1", "goldcrest"), ("x2", "unknown")]

    path.write_text("listing_id,gold\nx1,brickyard\nx1,foundry\n", encoding="utf-8")
    with pytest.raises(ValueError, match="duplicate"):
        load_gold(path, city_table, city_gazetteer)
