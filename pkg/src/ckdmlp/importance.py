"""Permutation feature importance for a trained model."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .dataio import Dataset
from .neuralnet import MlpModel, bce_loss, forward
from .ndcore import ShapeError


@dataclass(frozen=True)
class FeatureScore:
    feature: str
    score: float
    stddev: float


@dataclass
class ImportanceReport:
    """Entries sorted by descending score; ties keep schema order."""

    entries: list[FeatureScore]

    def ranking(self) -> list[str]:
        return [e.feature for e in self.entries]

    def top(self, k: int) -> list[str]:
        return self.ranking()[:k]


def _quality(model: MlpModel, x: np.ndarray, y: np.ndarray, scoring: str) -> float:
    scores = forward(model, x)
    if scoring == "accuracy":
        return float(np.mean((scores[:, 0] >= 0.5) == (y == 1)))
    # Negated so that "baseline - permuted" is the loss increase.
    return -bce_loss(scores, y)


def permutation_importance(
    model: MlpModel,
    data: Dataset,
    repeats: int = 10,
    seed: int = 0,
    scoring: Literal["accuracy", "loss"] = "accuracy",
) -> ImportanceReport:
    """Mean drop in accuracy (or rise in BCE) when one column is shuffled.

    The shuffle for feature j, repeat r draws from a generator seeded with
    (seed, j, r), so results do not depend on evaluation order.
    """
    if len(data) == 0:
        raise ValueError("importance needs a non-empty dataset")
    if data.features.shape[1] != model.in_dim:
        raise ShapeError(
            f"model takes {model.in_dim} features but data has {data.features.shape[1]}"
        )
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if scoring not in ("accuracy", "loss"):
        raise ValueError(f"unknown scoring {scoring!r}")

    x = data.features.copy()
    y = data.labels
    baseline = _quality(model, x, y, scoring)
    entries = []
    for j, name in enumerate(data.schema.feature_names):
        original = x[:, j].copy()
        drops = np.empty(repeats)
        for r in range(repeats):
            rng = np.random.default_rng([seed, j, r])
            x[:, j] = original[rng.permutation(len(original))]
            drops[r] = baseline - _quality(model, x, y, scoring)
        x[:, j] = original
        entries.append(FeatureScore(name, float(drops.mean()), float(drops.std())))
    order = sorted(range(len(entries)), key=lambda i: (-entries[i].score, i))
    return ImportanceReport([entries[i] for i in order])


def write_importance_csv(report: ImportanceReport, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "feature", "score", "stddev"])
        for rank, e in enumerate(report.entries, start=1):
            w.writerow([rank, e.feature, repr(e.score), repr(e.stddev)])


def read_importance_csv(path) -> ImportanceReport:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["rank", "feature", "score", "stddev"]:
            raise ValueError(f"unexpected importance header {reader.fieldnames}")
        rows = sorted(reader, key=lambda r: int(r["rank"]))
    return ImportanceReport(
        [FeatureScore(r["feature"], float(r["score"]), float(r["stddev"])) for r in rows]
    )
