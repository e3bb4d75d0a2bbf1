"""Label-accuracy evaluation against a hand-coded gold set.

Classes are keyed by the gold labels: every distinct gold value gets a row,
including ``unknown``. A class that was never predicted has undefined
precision (reported as a dash) and an F1 of zero; macro averages treat the
undefined precision as zero and say so in the formatted report.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .claims import ClaimLabel
from .gazetteer import Gazetteer, NormalizationTable, normalize_label

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GoldLabel:
    listing_id: str
    claim: str


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    tp: int
    fp: int
    fn: int
    precision: float | None
    recall: float
    f1: float
    support: int


@dataclass
class EvalReport:
    per_class: list[ClassMetrics]
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    n_evaluated: int


def load_gold(
    path: str | Path, table: NormalizationTable, gazetteer: Gazetteer
) -> list[GoldLabel]:
    """Read a gold CSV (``listing_id,gold``); labels are normalized."""
    path = Path(path)
    rows: list[GoldLabel] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        if "listing_id" not in header or "gold" not in header:
            raise ValueError(f"{path}: gold CSV needs listing_id and gold columns")
        for record in reader:
            listing_id = (record["listing_id"] or "").strip()
            if not listing_id:
                raise ValueError(f"{path}:{reader.line_num}: empty listing_id")
            if listing_id in seen:
                raise ValueError(f"{path}:{reader.line_num}: duplicate listing_id {listing_id!r}")
            seen.add(listing_id)
            raw = (record["gold"] or "").strip().lower()
            rows.append(GoldLabel(listing_id, normalize_label(raw, table, gazetteer)))
    return rows


def evaluate(predictions: Iterable[ClaimLabel], gold: Iterable[GoldLabel]) -> EvalReport:
    """Score predictions on the listings present in the gold set.

    Every gold listing must have a prediction; predictions for listings
    outside the gold set are ignored.
    """
    predicted: Mapping[str, str] = {p.listing_id: p.claim for p in predictions}
    pairs: list[tuple[str, str]] = []
    for row in gold:
        if row.listing_id not in predicted:
            raise ValueError(f"no prediction for gold listing {row.listing_id!r}")
        pairs.append((row.claim, predicted[row.listing_id]))
    if not pairs:
        raise ValueError("empty gold set")

    classes = sorted({g for g, _ in pairs})
    per_class: list[ClassMetrics] = []
    for name in classes:
        tp = sum(1 for g, p in pairs if g == name and p == name)
        fp = sum(1 for g, p in pairs if g != name and p == name)
        fn = sum(1 for g, p in pairs if g == name and p != name)
        precision = tp / (tp + fp) if tp + fp > 0 else None
        support = tp + fn
        recall = tp / support
        if precision is None or precision + recall == 0:
            f1 = 0.0
        else:
            f1 = 2 * precision * recall / (precision + recall)
        per_class.append(ClassMetrics(name, tp, fp, fn, precision, recall, f1, support))

    n = len(pairs)
    accuracy = sum(1 for g, p in pairs if g == p) / n

    def blank(value: float | None) -> float:
        return 0.0 if value is None else value

    k = len(per_class)
    total_support = sum(m.support for m in per_class)
    report = EvalReport(
        per_class=per_class,
        accuracy=accuracy,
        macro_precision=sum(blank(m.precision) for m in per_class) / k,
        macro_recall=sum(m.recall for m in per_class) / k,
        macro_f1=sum(m.f1 for m in per_class) / k,
        weighted_precision=sum(blank(m.precision) * m.support for m in per_class) / total_support,
        weighted_recall=sum(m.recall * m.support for m in per_class) / total_support,
        weighted_f1=sum(m.f1 * m.support for m in per_class) / total_support,
        n_evaluated=n,
    )
    return report


def format_report(report: EvalReport) -> str:
    """Fixed-width text table; undefined precision renders as a dash."""
    width = max([len("class")] + [len(m.name) for m in report.per_class])
    lines = [
        f"{'class':<{width}}  {'precision':>9}  {'recall':>9}  {'f1':>9}  {'support':>7}"
    ]

    def fmt(value: float | None) -> str:
        return "-" if value is None else f"{value:.2f}"

    for m in report.per_class:
        lines.append(
            f"{m.name:<{width}}  {fmt(m.precision):>9}  {fmt(m.recall):>9}"
            f"  {fmt(m.f1):>9}  {m.support:>7}"
        )
    lines.append("")
    lines.append(f"{'accuracy':<{width}}  {report.accuracy:>9.2f}  (n={report.n_evaluated})")
    lines.append(
        f"{'macro avg':<{width}}  {report.macro_precision:>9.2f}  {report.macro_recall:>9.2f}"
        f"  {report.macro_f1:>9.2f}  {sum(m.support for m in report.per_class):>7}"
    )
    lines.append(
        f"{'weighted avg':<{width}}  {report.weighted_precision:>9.2f}"
        f"  {report.weighted_recall:>9.2f}  {report.weighted_f1:>9.2f}"
        f"  {sum(m.support for m in report.per_class):>7}"
    )
    lines.append("")
    lines.append("undefined precision (no predictions for the class) counts as 0 in averages")
    return "\n".join(lines) + "\n"


def report_to_csv_rows(report: EvalReport) -> list[list[str]]:
    """Per-class rows plus summary rows, for CSV output."""
    rows: list[list[str]] = [["class", "precision", "recall", "f1", "support"]]
    for m in report.per_class:
        precision = "" if m.precision is None else f"{m.precision:.6f}"
        rows.append([m.name, precision, f"{m.recall:.6f}", f"{m.f1:.6f}", str(m.support)])
    total = str(sum(m.support for m in report.per_class))
    rows.append(["accuracy", "", f"{report.accuracy:.6f}", "", str(report.n_evaluated)])
    rows.append([
        "macro avg",
        f"{report.macro_precision:.6f}",
        f"{report.macro_recall:.6f}",
        f"{report.macro_f1:.6f}",
        total,
    ])
    rows.append([
        "weighted avg",
        f"{report.weighted_precision:.6f}",
        f"{report.weighted_recall:.6f}",
        f"{report.weighted_f1:.6f}",
        total,
    ])
    return rows
