"""Error, memory and weight-resolution metrics plus sweep aggregation."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .linalg import SingularSystemError, ridge_solve
from .reservoir import NoiseBatch, ReservoirConfig, WeightSet, advance
from .rng import RngStream

ZERO_FLOOR = 1e-12
NMSE_CONVENTIONS = ("range", "squared_range")


class UndefinedMetricError(ValueError):
    pass


class DegenerateWeightsError(ValueError):
    pass


def _values(y) -> np.ndarray:
    return np.asarray(getattr(y, "values", y), dtype=float)


def nmse(y_tar, y_pre, convention: str = "range") -> float:
    """Sum of squared errors over ``N_T * (max(y_tar) - min(y_tar))``.

    ``convention="squared_range"`` divides by the squared range instead.
    """
    t, p = _values(y_tar), _values(y_pre)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {t.shape} vs {p.shape}")
    if t.ndim != 1 or t.size < 2:
        raise ValueError("need at least two samples")
    span = float(t.max() - t.min())
    if span <= 0:
        raise UndefinedMetricError("target has zero range")
    if convention == "range":
        denom = t.size * span
    elif convention == "squared_range":
        denom = t.size * span**2
    else:
        raise ValueError(f"unknown NMSE convention {convention!r}")
    return float(np.sum((t - p) ** 2) / denom)


def squared_correlation(a, b) -> float:
    """cov^2(a, b) / (var a * var b), clamped to [0, 1]; 0 when either is constant."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    va = float(da @ da)
    vb = float(db @ db)
    if va <= 0 or vb <= 0 or not (math.isfinite(va) and math.isfinite(vb)):
        return 0.0
    c = float(da @ db)
    return min(max(c * c / (va * vb), 0.0), 1.0)


@dataclass
class MCResult:
    per_delay: list[tuple[int, float]]
    total: float

    @property
    def scores(self) -> np.ndarray:
        return np.array([s for _, s in self.per_delay])

    def to_dict(self) -> dict:
        return {"total": self.total, "per_delay": [[k, s] for k, s in self.per_delay]}


@dataclass(frozen=True)
class MCPlan:
    """Drive lengths for the memory task: readouts train on the first
    ``train_steps`` after washout and are scored on the next ``test_steps``."""

    washout_steps: int = 200
    train_steps: int = 2000
    test_steps: int = 1000
    ridge_lambda: float = 1e-8

    @property
    def input_length(self) -> int:
        return self.washout_steps + self.train_steps + self.test_steps


def mc_from_states(states: np.ndarray, u: np.ndarray, k_max: int, plan: MCPlan) -> MCResult:
    """Memory capacity given a (T, N) state trajectory driven by ``u``.

    ``states[t]`` is the state after consuming ``u[t]``.
    """
    T = states.shape[0]
    t0 = plan.washout_steps + k_max
    t_split = plan.washout_steps + plan.train_steps
    t_end = t_split + plan.test_steps
    if t_end > T or t0 >= t_split:
        raise ValueError("input too short for washout + k_max + train + test")
    train = np.arange(t0, t_split)
    test = np.arange(t_split, t_end)
    delays = np.arange(1, k_max + 1)
    Y_train = u[train[:, None] - delays[None, :]]
    Y_test = u[test[:, None] - delays[None, :]]
    try:
        W = ridge_solve(states[train], Y_train, plan.ridge_lambda)
    except SingularSystemError:
        W = np.zeros((k_max, states.shape[1]))
    pred = states[test] @ W.T
    per = [(int(k), squared_correlation(Y_test[:, i], pred[:, i])) for i, k in enumerate(delays)]
    return MCResult(per, float(sum(s for _, s in per)))


def memory_capacity(
    config: ReservoirConfig,
    weights: WeightSet,
    plan: MCPlan,
    input,
    k_max: int = 50,
    noise: RngStream | None = None,
) -> MCResult:
    """Teacher-forced linear memory capacity over delays 1..k_max.

    One readout row per delay is fit on ``u(t-k)``; each delay scores the
    squared correlation between target and readout on the held-out span.
    """
    u = _values(input)
    if len(u) < plan.input_length:
        raise ValueError(f"input needs at least {plan.input_length} samples")
    states = drive_batch(weights, config, u[None, :], [noise] if noise is not None else None)[0]
    res = mc_from_states(states, u, k_max, plan)
    if res.total > config.N:
        warnings.warn(f"MC {res.total:.2f} exceeds reservoir size {config.N}", RuntimeWarning, stacklevel=2)
    return res


def drive_batch(weights: WeightSet, config: ReservoirConfig, U: np.ndarray, streams=None) -> np.ndarray:
    """Teacher-force R runs from x=0; returns states of shape (R, T, N)."""
    R, T = U.shape
    noise = NoiseBatch(streams, config)
    x = np.zeros((R, config.N))
    out = np.empty((R, T, config.N))
    w_in = weights.W_in[:, 0]
    for t in range(T):
        x = advance(x, U[:, t], w_in, weights.W_s, config.a, config.kind, config.b, noise.next())
        out[:, t] = x
    return out


def dynamic_range(w_out, floor: float = ZERO_FLOOR) -> tuple[float, float]:
    """(max|w| / min nonzero |w|, same ratio in dB as 10*log10)."""
    w = np.abs(np.asarray(w_out, dtype=float)).ravel()
    if not np.all(np.isfinite(w)):
        raise DegenerateWeightsError("weights contain non-finite entries")
    nz = w[w > floor]
    if nz.size == 0:
        raise DegenerateWeightsError("all weights are below the zero floor")
    ratio = float(nz.max() / nz.min())
    return ratio, 10.0 * math.log10(ratio)


@dataclass
class AggregateStats:
    mean: float | None
    std: float | None
    count_valid: int
    count_total: int
    histogram: tuple[list[float], list[int]] = field(default_factory=lambda: ([], []))

    @property
    def valid_fraction(self) -> float:
        return self.count_valid / self.count_total if self.count_total else 0.0

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "std": self.std,
            "count_valid": self.count_valid,
            "count_total": self.count_total,
            "valid_fraction": self.valid_fraction,
            "histogram": {"edges": self.histogram[0], "counts": self.histogram[1]},
        }


def aggregate_values(values: Iterable[float | None], bins: int = 50) -> AggregateStats:
    """Population mean/std and histogram over the non-None entries."""
    vals = list(values)
    total = len(vals)
    if total == 0:
        raise ValueError("nothing to aggregate")
    valid = np.array(sorted(v for v in vals if v is not None and math.isfinite(v)), dtype=float)
    if valid.size == 0:
        return AggregateStats(None, None, 0, total)
    counts, edges = np.histogram(valid, bins=bins)
    # sorted input keeps the float sums independent of record order
    return AggregateStats(
        float(valid.mean()),
        float(valid.std()),
        int(valid.size),
        total,
        ([float(e) for e in edges], [int(c) for c in counts]),
    )


def aggregate(results: Sequence, bins: int = 50) -> AggregateStats:
    """Aggregate RunResults (anything with ``nmse`` and ``blowup``)."""
    if len(results) == 0:
        raise ValueError("nothing to aggregate")
    return aggregate_values((None if r.blowup else r.nmse for r in results), bins)


@dataclass
class MannKendall:
    s: int
    var_s: float
    z: float
    p_increasing: float
    p_decreasing: float

    def trend(self, alpha: float = 0.05) -> str:
        if self.p_increasing < alpha:
            return "increasing"
        if self.p_decreasing < alpha:
            return "decreasing"
        return "no trend"


def mann_kendall(x: Sequence[float]) -> MannKendall:
    """Mann-Kendall S statistic with tie-corrected variance and one-sided p-values."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError("need at least 3 points")
    s = 0
    for i in range(n - 1):
        s += int(np.sum(np.sign(x[i + 1 :] - x[i])))
    _, counts = np.unique(x, return_counts=True)
    var = (n * (n - 1) * (2 * n + 5) - float(np.sum(counts * (counts - 1) * (2 * counts + 5)))) / 18.0
    if var <= 0:
        z = 0.0
    elif s > 0:
        z = (s - 1) / math.sqrt(var)
    elif s < 0:
        z = (s + 1) / math.sqrt(var)
    else:
        z = 0.0
    return MannKendall(s, var, z, float(stats.norm.sf(z)), float(stats.norm.cdf(z)))
