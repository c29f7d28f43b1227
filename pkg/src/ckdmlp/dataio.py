"""CSV ingestion, mean imputation, standardisation and train/test splits."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ndcore import Matrix

FEATURES = (
    "Age",
    "Sex",
    "Sodium",
    "Potassium",
    "Chloride",
    "Bicarbonate",
    "Urea",
    "Creatinine",
    "UreaAcid",
    "Albumin",
)
LABEL = "Class"

MISSING_TOKENS = frozenset({"", "?"})
LABEL_VALUES = {"ckd": 1, "1": 1, "notckd": 0, "0": 0}
SEX_VALUES = {"1": 1.0, "m": 1.0, "male": 1.0, "0": 0.0, "f": 0.0, "female": 0.0}


class SchemaError(ValueError):
    pass


class ParseError(ValueError):
    pass


class ImputationError(ValueError):
    pass


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class DataSchema:
    feature_names: tuple[str, ...] = FEATURES
    label_name: str = LABEL
    sex_name: str = "Sex"

    def __post_init__(self):
        names = tuple(self.feature_names)
        object.__setattr__(self, "feature_names", names)
        if len(names) != 10:
            raise SchemaError(f"expected 10 feature names, got {len(names)}")
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be distinct")
        if self.label_name in names:
            raise SchemaError(f"label column {self.label_name!r} clashes with a feature name")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)


@dataclass
class Dataset:
    """Feature matrix (n x 10), 0/1 labels and a mask of originally-missing cells.

    Missing cells hold NaN in ``features`` until ``impute_mean`` runs.
    """

    features: Matrix
    labels: np.ndarray
    missing_mask: np.ndarray = None
    schema: DataSchema = field(default_factory=DataSchema)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.missing_mask is None:
            self.missing_mask = np.isnan(self.features)
        self.missing_mask = np.asarray(self.missing_mask, dtype=bool)
        n = self.features.shape[0]
        if self.features.ndim != 2 or self.features.shape[1] != self.schema.n_features:
            raise SchemaError(
                f"features must be n x {self.schema.n_features}, got shape {self.features.shape}"
            )
        if self.labels.shape != (n,) or self.missing_mask.shape != self.features.shape:
            raise SchemaError("features, labels and missing_mask disagree on row count")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise SchemaError("labels must be 0 or 1")

    def __len__(self) -> int:
        return self.features.shape[0]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            self.features[rows].copy(),
            self.labels[rows].copy(),
            self.missing_mask[rows].copy(),
            self.schema,
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise SplitError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.seed < 0:
            raise SplitError("seed must be non-negative")


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, d: Dataset) -> Dataset:
        return replace(d, features=(d.features - self.mean) / self.scale)

    def inverse(self, x: Matrix) -> Matrix:
        return x * self.scale + self.mean


def _parse_number(text: str, row: int, col: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: cannot parse {text!r} as a number") from None
    if not math.isfinite(value):
        raise ParseError(f"row {row}, column {col!r}: non-finite value {text!r}")
    return value


def load_csv(path, schema: DataSchema | None = None) -> Dataset:
    """Read a headered CSV; columns are matched by name and reordered to the schema.

    Empty cells and ``?`` are missing (NaN in ``features``, True in the mask).
    Row numbers in error messages count the header as row 1.
    """
    schema = schema or DataSchema()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        wanted = set(schema.feature_names) | {schema.label_name}
        for name in header:
            if name not in wanted:
                raise SchemaError(f"unknown column {name!r}")
        for name in wanted:
            if name not in header:
                raise SchemaError(f"missing column {name!r}")
        if len(set(header)) != len(header):
            raise SchemaError("duplicate column in header")
        index = {name: i for i, name in enumerate(header)}

        feats, labels = [], []
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"row {rowno}: expected {len(header)} fields, got {len(row)}")
            label_text = row[index[schema.label_name]].strip().lower()
            if label_text not in LABEL_VALUES:
                raise ParseError(f"row {rowno}, column {schema.label_name!r}: bad label {label_text!r}")
            labels.append(LABEL_VALUES[label_text])
            values = []
            for name in schema.feature_names:
                cell = row[index[name]].strip()
                if cell in MISSING_TOKENS:
                    values.append(math.nan)
                elif name == schema.sex_name:
                    key = cell.lower()
                    if key not in SEX_VALUES:
                        raise ParseError(f"row {rowno}, column {name!r}: bad sex value {cell!r}")
                    values.append(SEX_VALUES[key])
                else:
                    values.append(_parse_number(cell, rowno, name))
            feats.append(values)

    if not feats:
        raise ParseError(f"{path}: no data rows")
    x = np.array(feats, dtype=np.float64)
    return Dataset(x, np.array(labels), np.isnan(x), schema)


def _format_cell(value: float, missing: bool, is_sex: bool) -> str:
    if missing:
        return ""
    if is_sex and value in (0.0, 1.0):
        return str(int(value))
    return repr(float(value))


def write_csv(d: Dataset, path) -> None:
    """Write ``d`` in the layout ``load_csv`` reads. Labels become ckd/notckd."""
    schema = d.schema
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*schema.feature_names, schema.label_name])
        for x, m, y in zip(d.features, d.missing_mask, d.labels):
            cells = [
                _format_cell(v, bool(miss), name == schema.sex_name)
                for v, miss, name in zip(x, m, schema.feature_names)
            ]
            w.writerow([*cells, "ckd" if y == 1 else "notckd"])


def impute_mean(d: Dataset) -> Dataset:
    x = d.features.copy()
    mask = d.missing_mask | np.isnan(x)
    for j, name in enumerate(d.schema.feature_names):
        col_mask = mask[:, j]
        if not col_mask.any():
            continue
        observed = x[~col_mask, j]
        if observed.size == 0:
            raise ImputationError(f"column {name!r} has no observed values to average")
        x[col_mask, j] = observed.mean()
    return Dataset(x, d.labels.copy(), np.zeros_like(mask), d.schema)


def fit_standardizer(train: Dataset) -> Standardizer:
    if len(train) == 0:
        raise ValueError("cannot standardise on an empty training set")
    if np.isnan(train.features).any():
        raise ValueError("impute missing values before standardising")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    scale = np.where(std > 0.0, std, 1.0)
    return Standardizer(mean, scale)


def standardize(train: Dataset, others=()) -> tuple[list[Dataset], Standardizer]:
    """Z-score every feature with statistics from ``train`` only.

    Returns ``([train, *others] transformed, standardizer)``. Zero-variance
    columns are only centred.
    """
    st = fit_standardizer(train)
    return [st.transform(train), *(st.transform(o) for o in others)], st


def split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    n = len(d)
    if n < 2:
        raise SplitError(f"need at least 2 rows to split, got {n}")
    n_train = int(round(spec.train_fraction * n))
    if n_train < 1 or n_train > n - 1:
        raise SplitError(f"fraction {spec.train_fraction} of {n} rows leaves an empty partition")
    rng = np.random.default_rng(spec.seed)

    if not spec.stratified:
        order = rng.permutation(n)
        train_idx = order[:n_train]
    else:
        classes = [np.flatnonzero(d.labels == c) for c in (0, 1)]
        if any(c.size == 0 for c in classes):
            raise SplitError("stratified split needs at least one row of each class")
        # Per-class quota by largest remainder, so quotas sum to n_train exactly.
        exact = [n_train * c.size / n for c in classes]
        quota = [int(math.floor(e)) for e in exact]
        if sum(quota) < n_train:
            k = int(np.argmax([e - q for e, q in zip(exact, quota)]))
            quota[k] += 1
        train_idx = np.concatenate(
            [rng.permutation(idx)[:q] for idx, q in zip(classes, quota)]
        )
    in_train = np.zeros(n, dtype=bool)
    in_train[train_idx] = True
    return d.subset(np.flatnonzero(in_train)), d.subset(np.flatnonzero(~in_train))


STATS_MAGIC = "ckdmlp-stats v1"


def write_stats(path, st: Standardizer, schema: DataSchema, split_spec: SplitSpec | None = None) -> None:
    """Sidecar with the train-time transform (and optionally the split that produced it)."""
    lines = [
        STATS_MAGIC,
        str(schema.n_features),
        " ".join(schema.feature_names),
        " ".join(repr(float(v)) for v in st.mean),
        " ".join(repr(float(v)) for v in st.scale),
    ]
    if split_spec is not None:
        lines.append(
            f"split {split_spec.train_fraction!r} {split_spec.seed} {int(split_spec.stratified)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_stats(path, schema: DataSchema | None = None) -> tuple[Standardizer, SplitSpec | None]:
    schema = schema or DataSchema()
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != STATS_MAGIC:
        raise SchemaError(f"{path}: not a stats file (expected header {STATS_MAGIC!r})")
    if len(lines) not in (5, 6):
        raise SchemaError(f"{path}: expected 5 or 6 lines, found {len(lines)}")
    if int(lines[1]) != schema.n_features or tuple(lines[2].split()) != schema.feature_names:
        raise SchemaError(f"{path}: feature list does not match the schema")
    mean = np.array([float(v) for v in lines[3].split()])
    scale = np.array([float(v) for v in lines[4].split()])
    if mean.size != schema.n_features or scale.size != schema.n_features or np.any(scale <= 0):
        raise SchemaError(f"{path}: bad mean/scale rows")
    spec = None
    if len(lines) == 6:
        parts = lines[5].split()
        if len(parts) != 4 or parts[0] != "split":
            raise SchemaError(f"{path}: bad split line {lines[5]!r}")
        spec = SplitSpec(float(parts[1]), int(parts[2]), parts[3] == "1")
    return Standardizer(mean, scale), spec
