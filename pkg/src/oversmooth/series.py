"""Per-layer (or per-time) measure traces and the decay-rate classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

EXPONENTIAL = "exponential"
ALGEBRAIC = "algebraic"
CONSTANT = "constant"
UNDETERMINED = "undetermined"

DEFAULT_FLOOR = 1e-12
DEFAULT_MIN_RATE = 0.05
DEFAULT_MIN_R2 = 0.95
DEFAULT_CONSTANT_BAND = math.exp(0.5)


@dataclass
class MeasureSeries:
    """One measure evaluated along one run: (layer or time, value) samples."""

    index: np.ndarray
    values: np.ndarray
    measure_name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.index = np.atleast_1d(np.asarray(self.index))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=np.float64))
        if self.index.ndim != 1 or self.values.ndim != 1:
            raise ValueError("index and values must be one-dimensional")
        if self.index.size != self.values.size:
            raise ValueError("index and values must have equal length")
        if self.index.size > 1 and np.any(np.diff(self.index.astype(np.float64)) <= 0):
            raise ValueError("index must be strictly increasing")
        if np.any(~np.isfinite(self.values)) or np.any(self.values < 0):
            raise ValueError("values must be finite and non-negative")

    def __len__(self) -> int:
        return int(self.index.size)

    def since(self, min_index) -> "MeasureSeries":
        """Sub-series with index >= min_index (warm-up trimming)."""
        keep = self.index.astype(np.float64) >= float(min_index)
        return MeasureSeries(self.index[keep], self.values[keep],
                             self.measure_name, dict(self.metadata))


@dataclass
class DecayFit:
    """Least-squares decay fit and its classification.

    c1 and c2 come from the exponential model value = c1 * exp(-c2 * index);
    r-squared values are reported for both the exponential and algebraic
    regressions in log space.
    """

    c1: float
    c2: float
    r_squared_exp: float
    r_squared_alg: float
    classification: str
    floor_truncation_index: int | None = None


def _r_squared(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Linear fit y ~ a*x + b; returns (slope, intercept, r_squared)."""
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return float(slope), float(intercept), 1.0
    return float(slope), float(intercept), 1.0 - ss_res / ss_tot


def fit_decay(series: MeasureSeries,
              floor: float = DEFAULT_FLOOR,
              min_rate: float = DEFAULT_MIN_RATE,
              min_r2: float = DEFAULT_MIN_R2,
              constant_band: float = DEFAULT_CONSTANT_BAND) -> DecayFit:
    """Fit and classify the decay of a measure series.

    Values below ``floor`` are treated as numerical underflow: the series is
    truncated at the first such sample and the truncation point is reported.
    Classification: constant if the max/min ratio of the usable values stays
    below ``constant_band``; exponential if the log-linear fit has rate at
    least ``min_rate`` and r-squared at least ``min_r2`` (and beats the
    algebraic fit); algebraic if the log-log fit reaches ``min_r2``;
    undetermined otherwise.
    """
    vals = series.values
    idx = series.index.astype(np.float64)
    below = np.flatnonzero(vals < floor)
    trunc = int(below[0]) if below.size else None
    if trunc is not None:
        vals = vals[:trunc]
        idx = idx[:trunc]
    if vals.size < 4:
        raise ValueError("fit_decay needs at least 4 points above the floor")

    log_vals = np.log(vals)
    slope, intercept, r2_exp = _r_squared(idx, log_vals)
    c1 = float(np.exp(intercept))
    c2 = float(-slope)

    pos = idx > 0
    if np.count_nonzero(pos) >= 2:
        _, _, r2_alg = _r_squared(np.log(idx[pos]), log_vals[pos])
    else:
        r2_alg = 0.0

    ratio = float(vals.max() / vals.min())
    if ratio < constant_band:
        classification = CONSTANT
    elif c2 >= min_rate and r2_exp >= min_r2 and r2_exp >= r2_alg:
        classification = EXPONENTIAL
    elif r2_alg >= min_r2:
        classification = ALGEBRAIC
    else:
        classification = UNDETERMINED

    return DecayFit(c1, c2, r2_exp, r2_alg, classification, trunc)
