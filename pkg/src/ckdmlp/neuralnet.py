"""Dense ReLU network with a sigmoid output, trained by minibatch SGD on BCE."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import ndcore
from .dataio import Dataset
from .ndcore import Matrix, ShapeError

N_INPUTS = 10
CLAMP = 1e-12
MODEL_MAGIC = "ckdmlp-model"
MODEL_VERSION = "v1"
ACTIVATIONS = ("relu", "sigmoid", "identity")


class InputError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class FormatError(ValueError):
    pass


@dataclass
class Layer:
    weights: Matrix  # out x in
    bias: Matrix  # out x 1
    activation: str

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class MlpModel:
    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ShapeError("model needs at least one layer")
        for k, layer in enumerate(self.layers):
            if layer.activation not in ACTIVATIONS:
                raise ValueError(f"layer {k}: unknown activation {layer.activation!r}")
            if layer.bias.shape != (layer.out_dim, 1):
                raise ShapeError(f"layer {k}: bias shape {layer.bias.shape} != ({layer.out_dim}, 1)")
            if k and layer.in_dim != self.layers[k - 1].out_dim:
                raise ShapeError(
                    f"layer {k} expects {layer.in_dim} inputs but layer {k - 1} gives {self.layers[k - 1].out_dim}"
                )
        if self.layers[-1].out_dim != 1 or self.layers[-1].activation != "sigmoid":
            raise ShapeError("last layer must be a single sigmoid unit")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    def params(self) -> list[Matrix]:
        """Flat [W0, b0, W1, b1, ...] view of the live parameter arrays."""
        out = []
        for layer in self.layers:
            out += [layer.weights, layer.bias]
        return out

    def copy(self) -> "MlpModel":
        return MlpModel([Layer(l.weights.copy(), l.bias.copy(), l.activation) for l in self.layers])

    def __eq__(self, other) -> bool:
        if not isinstance(other, MlpModel) or len(self.layers) != len(other.layers):
            return False
        return all(
            a.activation == b.activation
            and a.weights.shape == b.weights.shape
            and np.array_equal(a.weights, b.weights)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )


@dataclass
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.01
    batch_size: int = 32
    seed: int = 0
    hidden_dims: tuple[int, int] = (32, 16)
    validation: Optional[Dataset] = None

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not (self.learning_rate >= 0 and math.isfinite(self.learning_rate)):
            raise ConfigError(f"learning_rate must be finite and non-negative, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if len(self.hidden_dims) != 2 or min(self.hidden_dims) < 1:
            raise ConfigError(f"hidden_dims must be two positive sizes, got {self.hidden_dims}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: Optional[float] = None
    val_accuracy: Optional[float] = None


@dataclass
class TrainingLog:
    records: list[EpochRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


def init_model(hidden_dims=(32, 16), seed: int = 0, n_inputs: int = N_INPUTS) -> MlpModel:
    """Glorot-uniform weights, zero biases: n_inputs -> h1 (relu) -> h2 (relu) -> 1 (sigmoid)."""
    h1, h2 = hidden_dims
    if h1 < 1 or h2 < 1:
        raise ConfigError(f"hidden dims must be >= 1, got {hidden_dims}")
    rng = np.random.default_rng(seed)
    dims = [n_inputs, h1, h2, 1]
    acts = ["relu", "relu", "sigmoid"]
    layers = []
    for fan_in, fan_out, act in zip(dims[:-1], dims[1:], acts):
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(w, ndcore.zeros(fan_out, 1), act))
    return MlpModel(layers)


_OPEN_LO = np.nextafter(0.0, 1.0)
_OPEN_HI = np.nextafter(1.0, 0.0)


def sigmoid(z: Matrix) -> Matrix:
    """Logistic function kept strictly inside (0, 1) even where float64 saturates."""
    # Split by sign so exp never overflows.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, _OPEN_LO, _OPEN_HI)


def _activate(z: Matrix, kind: str) -> Matrix:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return sigmoid(z)
    return z


def _check_input(m: MlpModel, x: Matrix) -> Matrix:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != m.in_dim:
        raise ShapeError(f"model takes {m.in_dim} features, input has shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("input contains NaN or Inf; impute before predicting")
    return x


def _forward_cache(m: MlpModel, x: Matrix):
    """Run the net on row-major x (n x in). Returns per-layer (input, preactivation) and output."""
    cache = []
    a = ndcore.transpose(x)  # features x n, so z = W a + b
    for layer in m.layers:
        z = ndcore.add_column(ndcore.matmul(layer.weights, a), layer.bias)
        cache.append((a, z))
        a = _activate(z, layer.activation)
    return cache, ndcore.transpose(a)


def forward(m: MlpModel, x: Matrix) -> Matrix:
    """Sigmoid scores, shape n x 1."""
    x = _check_input(m, x)
    return _forward_cache(m, x)[1]


def _labels_column(labels, n: int) -> Matrix:
    y = np.asarray(labels, dtype=np.float64).reshape(-1)
    if y.shape[0] != n:
        raise ShapeError(f"{n} predictions but {y.shape[0]} labels")
    return y.reshape(-1, 1)


def bce_loss(pred: Matrix, labels) -> float:
    p = np.asarray(pred, dtype=np.float64).reshape(-1, 1)
    y = _labels_column(labels, p.shape[0])
    p = np.clip(p, CLAMP, 1.0 - CLAMP)
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def backward(m: MlpModel, x: Matrix, labels) -> list[Matrix]:
    """Gradients of mean BCE, ordered like ``m.params()``.

    The clamp is differentiated exactly: where the sigmoid output sits
    outside [CLAMP, 1 - CLAMP] the loss is flat in it and the gradient is 0.
    relu'(0) is taken as 0.
    """
    x = _check_input(m, x)
    y = _labels_column(labels, x.shape[0]).T  # 1 x n
    n = x.shape[0]
    cache, out = _forward_cache(m, x)
    p = out.T
    inside = (p >= CLAMP) & (p <= 1.0 - CLAMP)
    # dL/dz for the sigmoid output with BCE collapses to (p - y) / n.
    delta = np.where(inside, (p - y) / n, 0.0)

    grads: list[Matrix] = [None] * (2 * len(m.layers))
    for k in range(len(m.layers) - 1, -1, -1):
        layer = m.layers[k]
        a_prev, _ = cache[k]
        grads[2 * k] = ndcore.matmul(delta, ndcore.transpose(a_prev))
        grads[2 * k + 1] = delta.sum(axis=1, keepdims=True)
        if k == 0:
            break
        upstream = ndcore.matmul(ndcore.transpose(layer.weights), delta)
        prev = m.layers[k - 1]
        z_prev = cache[k - 1][1]
        if prev.activation == "relu":
            delta = upstream * (z_prev > 0.0)
        elif prev.activation == "sigmoid":
            s = sigmoid(z_prev)
            delta = upstream * s * (1.0 - s)
        else:
            delta = upstream
    return grads


def predict(m: MlpModel, x: Matrix, threshold: float = 0.5) -> np.ndarray:
    """0/1 labels; a score equal to the threshold counts as positive."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    return (forward(m, x)[:, 0] >= threshold).astype(np.int64)


def accuracy_of(m: MlpModel, x: Matrix, labels) -> float:
    return float(np.mean(predict(m, x) == np.asarray(labels)))


def _evaluate(m: MlpModel, d: Dataset) -> tuple[float, float]:
    scores = forward(m, d.features)
    acc = float(np.mean((scores[:, 0] >= 0.5) == (d.labels == 1)))
    return bce_loss(scores, d.labels), acc


def train(data: Dataset, cfg: TrainConfig | None = None) -> tuple[MlpModel, TrainingLog]:
    """Minibatch SGD. Epoch e shuffles with its own stream seeded by (seed, e)."""
    cfg = cfg or TrainConfig()
    cfg.validate()
    if len(data) == 0:
        raise ConfigError("training set is empty")
    model = init_model(cfg.hidden_dims, cfg.seed, data.features.shape[1])
    x, y = _check_input(model, data.features), data.labels
    n = len(data)
    log = TrainingLog()
    for epoch in range(cfg.epochs):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            grads = backward(model, x[idx], y[idx])
            for param, g in zip(model.params(), grads):
                param -= cfg.learning_rate * g
        train_loss, train_acc = _evaluate(model, data)
        rec = EpochRecord(epoch + 1, train_loss, train_acc)
        if cfg.validation is not None:
            rec.val_loss, rec.val_accuracy = _evaluate(model, cfg.validation)
        log.records.append(rec)
    return model, log


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in np.ravel(values))


def save_model(m: MlpModel, path) -> None:
    lines = [f"{MODEL_MAGIC} {MODEL_VERSION}", str(len(m.layers))]
    for layer in m.layers:
        lines.append(f"{layer.in_dim} {layer.out_dim} {layer.activation}")
        lines.append(_fmt(layer.weights))
        lines.append(_fmt(layer.bias))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _floats(text: str, expected: int, what: str) -> np.ndarray:
    parts = text.split()
    if len(parts) != expected:
        raise FormatError(f"{what}: expected {expected} values, found {len(parts)}")
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError:
        raise FormatError(f"{what}: non-numeric value") from None


def load_model(path) -> MlpModel:
    text = Path(path).read_text(encoding="utf-8")
    if not text.endswith("\n"):
        raise FormatError("file must end with a newline")
    lines = text[:-1].split("\n")
    header = lines[0].split() if lines else []
    if len(header) != 2 or header[0] != MODEL_MAGIC:
        raise FormatError(f"header: expected '{MODEL_MAGIC} {MODEL_VERSION}', found {lines[0]!r}")
    if header[1] != MODEL_VERSION:
        raise FormatError(f"version: file is {header[1]}, supported version is {MODEL_VERSION}")
    try:
        n_layers = int(lines[1])
    except (IndexError, ValueError):
        raise FormatError("layer count: missing or not an integer") from None
    if n_layers < 1:
        raise FormatError(f"layer count: must be >= 1, got {n_layers}")
    if len(lines) != 2 + 3 * n_layers:
        raise FormatError(f"layer count: {n_layers} layers need {2 + 3 * n_layers} lines, file has {len(lines)}")
    layers = []
    for k in range(n_layers):
        spec, wline, bline = lines[2 + 3 * k : 5 + 3 * k]
        parts = spec.split()
        try:
            in_dim, out_dim, act = int(parts[0]), int(parts[1]), parts[2]
            if len(parts) != 3:
                raise ValueError
        except (IndexError, ValueError):
            raise FormatError(f"layer {k} dims: expected 'in out activation', found {spec!r}") from None
        if in_dim < 1 or out_dim < 1:
            raise FormatError(f"layer {k} dims: sizes must be >= 1")
        if act not in ACTIVATIONS:
            raise FormatError(f"layer {k} activation: unknown {act!r}")
        w = _floats(wline, in_dim * out_dim, f"layer {k} weights").reshape(out_dim, in_dim)
        b = _floats(bline, out_dim, f"layer {k} biases").reshape(out_dim, 1)
        layers.append(Layer(w, b, act))
    try:
        return MlpModel(layers)
    except (ShapeError, ValueError) as exc:
        raise FormatError(f"layers: {exc}") from None


CURVES_HEADER = ("epoch", "train_loss", "train_acc", "val_loss", "val_acc")


def write_curves(log: TrainingLog, path) -> None:
    """Per-epoch loss/accuracy as CSV; absent validation values are empty fields."""

    def cell(v):
        return "" if v is None else repr(float(v))

    lines = [",".join(CURVES_HEADER)]
    for r in log.records:
        lines.append(
            ",".join(
                [str(r.epoch), cell(r.train_loss), cell(r.train_accuracy), cell(r.val_loss), cell(r.val_accuracy)]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_curves(path) -> TrainingLog:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != ",".join(CURVES_HEADER):
        raise FormatError(f"curves header must be {','.join(CURVES_HEADER)!r}")
    log = TrainingLog()
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(CURVES_HEADER):
            raise FormatError(f"curves line {i}: expected {len(CURVES_HEADER)} fields")
        vals = [None if p == "" else float(p) for p in parts[1:]]
        log.records.append(EpochRecord(int(parts[0]), *vals))
    return log
