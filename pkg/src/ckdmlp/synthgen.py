"""Seeded synthetic CKD-like tabular data with class-conditional Gaussians.

Stand-in for private hospital records; nothing here is fitted to real data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataio import FEATURES, DataSchema, Dataset


class ConfigError(ValueError):
    pass


# Default profile: feature -> ((mean, std) for non-CKD, (mean, std) for CKD).
# Only the direction of each shift is clinically motivated (CKD: higher
# creatinine/urea/potassium, lower bicarbonate/sodium/albumin). Magnitudes
# are design choices. Separation |mu1 - mu0| / sigma:
#   Creatinine 3.5, Bicarbonate 3.0, Urea 0.9, Potassium 0.8, Sodium 0.7,
#   UreaAcid 0.6, Age 0.5, Chloride 0.4, Albumin 0.3, Sex 0.0
DEFAULT_PROFILE = {
    "Age": ((45.0, 16.0), (53.0, 16.0)),
    "Sex": ((0.5, 0.5), (0.5, 0.5)),
    "Sodium": ((140.0, 3.0), (137.9, 3.0)),
    "Potassium": ((4.2, 0.5), (4.6, 0.5)),
    "Chloride": ((102.0, 4.0), (103.6, 4.0)),
    "Bicarbonate": ((25.0, 2.0), (19.0, 2.0)),
    "Urea": ((30.0, 10.0), (39.0, 10.0)),
    "Creatinine": ((1.0, 0.4), (2.4, 0.4)),
    "UreaAcid": ((5.0, 1.5), (5.9, 1.5)),
    "Albumin": ((4.0, 0.5), (3.85, 0.5)),
}
DEFAULT_N_ROWS = 400
DEFAULT_CKD_FRACTION = 0.5
DEFAULT_MISSING_RATE = 0.02


@dataclass
class GeneratorConfig:
    """``class_params`` maps feature name to ((mean0, std0), (mean1, std1)).

    The Sex column is Bernoulli with the class mean as its probability;
    its std entry only feeds ``separation``.
    """

    n_rows: int = DEFAULT_N_ROWS
    ckd_fraction: float = DEFAULT_CKD_FRACTION
    seed: int = 0
    class_params: dict = field(default_factory=lambda: dict(DEFAULT_PROFILE))
    missing_rate: float = DEFAULT_MISSING_RATE
    schema: DataSchema = field(default_factory=DataSchema)

    def validate(self) -> None:
        if self.n_rows < 2:
            raise ConfigError(f"n_rows must be >= 2, got {self.n_rows}")
        if not 0.0 < self.ckd_fraction < 1.0:
            raise ConfigError(f"ckd_fraction must lie in (0, 1), got {self.ckd_fraction}")
        if not 0.0 <= self.missing_rate < 1.0:
            raise ConfigError(f"missing_rate must lie in [0, 1), got {self.missing_rate}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if set(self.class_params) != set(self.schema.feature_names):
            raise ConfigError("class_params must cover exactly the schema features")
        for name, pair in self.class_params.items():
            for mean, std in pair:
                if not (math.isfinite(mean) and math.isfinite(std)) or std <= 0:
                    raise ConfigError(f"{name}: need finite mean and std > 0, got ({mean}, {std})")
            if name == self.schema.sex_name and not all(0.0 <= m <= 1.0 for m, _ in pair):
                raise ConfigError(f"{name}: class means are probabilities and must lie in [0, 1]")

    def n_ckd(self) -> int:
        # Clamp so both classes appear whenever 0 < ckd_fraction < 1.
        return min(max(int(round(self.ckd_fraction * self.n_rows)), 1), self.n_rows - 1)


def separation(cfg: GeneratorConfig, name: str) -> float:
    """Class-mean gap in pooled standard deviations."""
    (m0, s0), (m1, s1) = cfg.class_params[name]
    return abs(m1 - m0) / math.sqrt((s0 * s0 + s1 * s1) / 2.0)


def default_ckd_profile(seed: int = 0) -> GeneratorConfig:
    return GeneratorConfig(seed=seed)


def generate(cfg: GeneratorConfig) -> Dataset:
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n = cfg.n_rows
    labels = np.zeros(n, dtype=np.int64)
    labels[: cfg.n_ckd()] = 1
    labels = rng.permutation(labels)

    x = np.empty((n, cfg.schema.n_features), dtype=np.float64)
    for j, name in enumerate(cfg.schema.feature_names):
        (m0, s0), (m1, s1) = cfg.class_params[name]
        if name == cfg.schema.sex_name:
            p = np.where(labels == 1, m1, m0)
            x[:, j] = (rng.random(n) < p).astype(np.float64)
        else:
            z = rng.standard_normal(n)
            x[:, j] = np.where(labels == 1, m1 + s1 * z, m0 + s0 * z)

    mask = rng.random(x.shape) < cfg.missing_rate
    x[mask] = np.nan
    return Dataset(x, labels, mask, cfg.schema)


__all__ = [
    "FEATURES",
    "DEFAULT_PROFILE",
    "ConfigError",
    "GeneratorConfig",
    "default_ckd_profile",
    "generate",
    "separation",
]
