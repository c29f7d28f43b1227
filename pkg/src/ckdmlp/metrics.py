"""Binary classification metrics. Positive class is 1 (CKD).

Metrics whose denominator vanishes return ``UNDEFINED`` (``None``) instead
of a number; small test splits really do hit those cases.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .ndcore import ShapeError

UNDEFINED = None
METRIC_NAMES = (
    "accuracy",
    "sensitivity",
    "specificity",
    "precision",
    "recall",
    "f1",
    "kappa",
    "roc_auc",
)


@dataclass(frozen=True)
class ConfusionCounts:
    tn: int
    fp: int
    fn: int
    tp: int

    def __post_init__(self):
        if min(self.tn, self.fp, self.fn, self.tp) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


def _binary(values, name: str) -> np.ndarray:
    a = np.asarray(values).reshape(-1)
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{name} must contain only 0 and 1")
    return a.astype(np.int64)


def confusion(pred, truth) -> ConfusionCounts:
    p, t = _binary(pred, "pred"), _binary(truth, "truth")
    if p.shape != t.shape:
        raise ShapeError(f"pred has {p.size} entries, truth has {t.size}")
    if p.size == 0:
        raise ShapeError("need at least one prediction")
    return ConfusionCounts(
        tn=int(np.sum((p == 0) & (t == 0))),
        fp=int(np.sum((p == 1) & (t == 0))),
        fn=int(np.sum((p == 0) & (t == 1))),
        tp=int(np.sum((p == 1) & (t == 1))),
    )


def _ratio(num: int, den: int) -> Optional[float]:
    return num / den if den > 0 else UNDEFINED


def accuracy(c: ConfusionCounts) -> float:
    if c.total == 0:
        raise ValueError("accuracy of an empty confusion matrix")
    return (c.tp + c.tn) / c.total


def sensitivity(c: ConfusionCounts) -> Optional[float]:
    return _ratio(c.tp, c.tp + c.fn)


recall = sensitivity


def specificity(c: ConfusionCounts) -> Optional[float]:
    return _ratio(c.tn, c.tn + c.fp)


def precision(c: ConfusionCounts) -> Optional[float]:
    return _ratio(c.tp, c.tp + c.fp)


def f1(c: ConfusionCounts) -> Optional[float]:
    p, r = precision(c), recall(c)
    if p is None or r is None or p + r == 0:
        return UNDEFINED
    return 2 * p * r / (p + r)


def cohen_kappa(c: ConfusionCounts) -> Optional[float]:
    n = c.total
    if n == 0:
        raise ValueError("kappa of an empty confusion matrix")
    p_o = (c.tp + c.tn) / n
    p_e = ((c.tn + c.fp) * (c.tn + c.fn) + (c.fn + c.tp) * (c.fp + c.tp)) / (n * n)
    if p_e >= 1.0:
        return UNDEFINED
    return (p_o - p_e) / (1.0 - p_e)


def roc_auc(scores, truth) -> Optional[float]:
    """Mann-Whitney AUC: P(score_pos > score_neg), ties worth one half.

    Sort-based, O(n log n). Counts are exact integers (ties kept as
    doubled counts) so the result equals pairwise enumeration exactly.
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    t = _binary(truth, "truth")
    if s.shape != t.shape:
        raise ShapeError(f"{s.size} scores but {t.size} labels")
    n_pos = int(t.sum())
    n_neg = t.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return UNDEFINED
    neg = np.sort(s[t == 0])
    pos = s[t == 1]
    below = np.searchsorted(neg, pos, side="left")
    not_above = np.searchsorted(neg, pos, side="right")
    # 2 * (wins + ties / 2) = wins + not_above
    twice_wins = int(below.sum()) + int(not_above.sum())
    return twice_wins / (2 * n_pos * n_neg)


@dataclass
class MetricReport:
    accuracy: Optional[float]
    sensitivity: Optional[float]
    specificity: Optional[float]
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]
    kappa: Optional[float]
    roc_auc: Optional[float]
    counts: Optional[ConfusionCounts] = None

    def undefined(self) -> list[str]:
        return [name for name in METRIC_NAMES if getattr(self, name) is None]

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def one_line(self) -> str:
        return " ".join(f"{k}={_fmt_value(v)}" for k, v in self.as_dict().items())


def report_from_counts(c: ConfusionCounts, roc: Optional[float] = UNDEFINED) -> MetricReport:
    return MetricReport(
        accuracy=accuracy(c),
        sensitivity=sensitivity(c),
        specificity=specificity(c),
        precision=precision(c),
        recall=recall(c),
        f1=f1(c),
        kappa=cohen_kappa(c),
        roc_auc=roc,
        counts=c,
    )


def full_report(scores, threshold: float, truth) -> MetricReport:
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    pred = (s >= threshold).astype(np.int64)
    return report_from_counts(confusion(pred, truth), roc_auc(s, truth))


def _fmt_value(v: Optional[float]) -> str:
    return "undefined" if v is None else repr(float(v))


def format_report(r: MetricReport) -> str:
    lines = [f"{name}\t{_fmt_value(v)}" for name, v in r.as_dict().items()]
    if r.counts is not None:
        c = r.counts
        lines += [
            "",
            "confusion\tpredicted_negative\tpredicted_positive",
            f"observed_negative\t{c.tn}\t{c.fp}",
            f"observed_positive\t{c.fn}\t{c.tp}",
        ]
    return "\n".join(lines) + "\n"


def write_report(r: MetricReport, path) -> None:
    Path(path).write_text(format_report(r), encoding="utf-8")


def parse_report(text: str) -> MetricReport:
    values: dict = {}
    rows: dict = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        if parts[0] in METRIC_NAMES and len(parts) == 2:
            values[parts[0]] = None if parts[1] == "undefined" else float(parts[1])
        elif parts[0] in ("observed_negative", "observed_positive") and len(parts) == 3:
            rows[parts[0]] = (int(parts[1]), int(parts[2]))
        elif parts[0] != "confusion":
            raise ValueError(f"unrecognised report line {line!r}")
    missing = [n for n in METRIC_NAMES if n not in values]
    if missing:
        raise ValueError(f"report lacks metrics: {', '.join(missing)}")
    counts = None
    if rows:
        (tn, fp), (fn, tp) = rows["observed_negative"], rows["observed_positive"]
        counts = ConfusionCounts(tn, fp, fn, tp)
    return MetricReport(**values, counts=counts)


def read_report(path) -> MetricReport:
    return parse_report(Path(path).read_text(encoding="utf-8"))
