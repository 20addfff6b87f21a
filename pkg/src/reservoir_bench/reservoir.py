"""Reservoir topologies and the four neuron update rules.

With ``z = W_in u[t+1] + W_s x[t]`` and leaking rate ``a``:

    AN   x' = (1-a) x + a tanh(z)
    ASN  x' = (1-a) x + a tanh(z) + b r
    BN   x' = (1-a) x + sgn(a tanh(z))
    BSN  x' = (1-a) x + sgn(a tanh(z) + b r)

where ``r`` holds one independent uniform draw per neuron and step and
``sgn(0) = 0``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .linalg import DegenerateMatrixError, scale_to_radius
from .rng import Purpose, RngStream, derive_stream

log = logging.getLogger(__name__)

DEFAULT_LEAK = 0.6
DEFAULT_RHO = 1.0
DEFAULT_W_IN_SCALE = 0.3
DEFAULT_NOISE_SUPPORT = (-0.25, 0.25)
_MAX_REBUILDS = 16


class NumericOverflowError(ArithmeticError):
    def __init__(self, msg: str, t: int | None = None):
        super().__init__(msg if t is None else f"{msg} at t={t}")
        self.t = t


class NeuronKind(str, Enum):
    AN = "AN"
    ASN = "ASN"
    BN = "BN"
    BSN = "BSN"

    @property
    def stochastic(self) -> bool:
        return self in (NeuronKind.ASN, NeuronKind.BSN)

    @property
    def binary(self) -> bool:
        return self in (NeuronKind.BN, NeuronKind.BSN)

    @classmethod
    def parse(cls, s) -> "NeuronKind":
        if isinstance(s, cls):
            return s
        try:
            return cls(str(s).upper())
        except ValueError:
            raise ValueError(f"unknown neuron model {s!r}; expected one of AN, ASN, BN, BSN") from None


@dataclass(frozen=True)
class NeuronModel:
    kind: NeuronKind = NeuronKind.AN
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NeuronKind.parse(self.kind))
        if not (self.b >= 0 and np.isfinite(self.b)):
            raise ValueError("noise scaling b must be finite and >= 0")
        if not self.kind.stochastic and self.b != 0:
            raise ValueError(f"{self.kind.value} is deterministic; b must be 0")

    @property
    def label(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class ReservoirConfig:
    N: int = 20
    a: float = DEFAULT_LEAK
    model: NeuronModel = field(default_factory=NeuronModel)
    rho_target: float = DEFAULT_RHO
    w_in_scale: float = DEFAULT_W_IN_SCALE
    seed: int = 0
    topology_index: int = 0
    run_index: int = 0
    # support of the neuron noise r before scaling by b
    noise_support: tuple[float, float] = DEFAULT_NOISE_SUPPORT

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not 0 < self.a <= 1:
            raise ValueError("leaking rate a must be in (0, 1]")
        if not self.rho_target > 0:
            raise ValueError("rho_target must be positive")
        lo, hi = self.noise_support
        if not lo < hi:
            raise ValueError("noise_support must be an increasing pair")
        object.__setattr__(self, "noise_support", (float(lo), float(hi)))

    @property
    def kind(self) -> NeuronKind:
        return self.model.kind

    @property
    def b(self) -> float:
        return self.model.b

    @property
    def noisy(self) -> bool:
        return self.model.kind.stochastic and self.model.b > 0

    def with_model(self, kind, b: float = 0.0) -> "ReservoirConfig":
        return replace(self, model=NeuronModel(kind, b))

    def topology_stream(self, attempt: int = 0) -> RngStream:
        return derive_stream(self.seed, self.topology_index, attempt, Purpose.TOPOLOGY)

    def noise_stream(self) -> RngStream:
        return derive_stream(self.seed, self.topology_index, self.run_index, Purpose.NEURON_NOISE)

    def input_stream(self) -> RngStream:
        return derive_stream(self.seed, self.topology_index, self.run_index, Purpose.INPUT_NOISE)


@dataclass
class WeightSet:
    """``W_in`` is N x 1, ``W_s`` is N x N, ``W_out`` is m x N (None until trained)."""

    W_in: np.ndarray
    W_s: np.ndarray
    W_out: np.ndarray | None = None

    def __post_init__(self):
        self.W_in = np.asarray(self.W_in, dtype=float).reshape(-1, 1)
        self.W_s = np.asarray(self.W_s, dtype=float)
        n = self.W_in.shape[0]
        if self.W_s.shape != (n, n):
            raise ValueError(f"W_s shape {self.W_s.shape} does not match N={n}")
        if self.W_out is not None:
            self.W_out = np.atleast_2d(np.asarray(self.W_out, dtype=float))
            if self.W_out.shape[1] != n:
                raise ValueError(f"W_out shape {self.W_out.shape} does not match N={n}")

    @property
    def N(self) -> int:
        return self.W_in.shape[0]

    def with_readout(self, W_out) -> "WeightSet":
        return WeightSet(self.W_in, self.W_s, W_out)

    def save_csv(self, prefix) -> list[str]:
        """Write ``<prefix>_W_in.csv`` etc.; returns the written paths."""
        paths = []
        for name in ("W_in", "W_s", "W_out"):
            M = getattr(self, name)
            if M is None:
                continue
            p = f"{prefix}_{name}.csv"
            np.savetxt(p, M, delimiter=",", fmt="%.17g")
            paths.append(p)
        return paths

    @classmethod
    def load_csv(cls, prefix) -> "WeightSet":
        import os

        W_in = np.loadtxt(f"{prefix}_W_in.csv", delimiter=",", ndmin=2)
        W_s = np.loadtxt(f"{prefix}_W_s.csv", delimiter=",", ndmin=2)
        W_out = None
        if os.path.exists(f"{prefix}_W_out.csv"):
            W_out = np.loadtxt(f"{prefix}_W_out.csv", delimiter=",", ndmin=2)
        return cls(W_in.reshape(-1, 1), W_s, W_out)


@dataclass
class ReservoirState:
    x: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, N: int) -> "ReservoirState":
        return cls(np.zeros(N), 0)

    def copy(self) -> "ReservoirState":
        return ReservoirState(self.x.copy(), self.t)


def build_topology(config: ReservoirConfig) -> WeightSet:
    """Draw ``W_s`` and ``W_in`` i.i.d. from U[-0.5, 0.5) and scale them.

    ``W_s`` is rescaled to spectral radius ``rho_target``; ``W_in`` is
    multiplied by ``w_in_scale``.  A degenerate ``W_s`` is redrawn from the
    next topology substream.
    """
    N = config.N
    for attempt in range(_MAX_REBUILDS):
        stream = config.topology_stream(attempt)
        W_s = stream.uniform(-0.5, 0.5, (N, N))
        W_in = stream.uniform(-0.5, 0.5, (N, 1)) * config.w_in_scale
        try:
            W_s = scale_to_radius(W_s, config.rho_target)
        except DegenerateMatrixError:
            log.warning("degenerate W_s for topology %d (attempt %d); redrawing", config.topology_index, attempt)
            continue
        return WeightSet(W_in, W_s)
    raise DegenerateMatrixError("could not draw a non-degenerate W_s")


def advance(x, u, W_in, W_s, a: float, kind: NeuronKind, b: float = 0.0, r=None) -> np.ndarray:
    """One update for a state ``x`` of shape (N,) or a batch (R, N).

    ``W_in`` is the length-N input vector, ``u`` a scalar or one input per
    batch row, ``r`` the raw noise draws (same shape as ``x``) or None.
    """
    u = np.asarray(u, dtype=float)
    if x.ndim == 2 and u.ndim == 1:
        u = u[:, None]
    z = u * W_in + x @ W_s.T
    act = a * np.tanh(z)
    noisy = r is not None and b != 0
    if kind is NeuronKind.AN or (kind is NeuronKind.ASN and not noisy):
        return (1 - a) * x + act
    if kind is NeuronKind.ASN:
        return (1 - a) * x + act + b * r
    if kind is NeuronKind.BN or not noisy:
        return (1 - a) * x + np.sign(act)
    return (1 - a) * x + np.sign(act + b * r)


def draw_noise(config: ReservoirConfig, noise: RngStream | None, size):
    if not config.noisy:
        return None
    if noise is None:
        raise ValueError(f"{config.kind.value} with b > 0 needs a noise stream")
    lo, hi = config.noise_support
    return noise.uniform(lo, hi, size)


def step(
    state: ReservoirState,
    u_next: float,
    weights: WeightSet,
    config: ReservoirConfig,
    noise: RngStream | None = None,
) -> ReservoirState:
    if state.x.shape != (config.N,):
        raise ValueError(f"state has shape {state.x.shape}, expected ({config.N},)")
    if not np.isfinite(u_next):
        raise NumericOverflowError("non-finite input", state.t)
    r = draw_noise(config, noise, config.N)
    x = advance(state.x, u_next, weights.W_in[:, 0], weights.W_s, config.a, config.kind, config.b, r)
    if not np.all(np.isfinite(x)):
        raise NumericOverflowError("non-finite reservoir state", state.t + 1)
    return ReservoirState(x, state.t + 1)


def run_sequence(
    x0: ReservoirState,
    inputs: Sequence[float] | np.ndarray,
    weights: WeightSet,
    config: ReservoirConfig,
    noise: RngStream | None = None,
) -> list[ReservoirState]:
    values = np.asarray(getattr(inputs, "values", inputs), dtype=float)
    if values.size == 0:
        raise ValueError("inputs must be non-empty")
    out = []
    s = x0
    for u in values:
        s = step(s, u, weights, config, noise)
        out.append(s)
    return out


def trajectory(states: Sequence[ReservoirState]) -> np.ndarray:
    """Stack a state sequence into a (T, N) array."""
    return np.stack([s.x for s in states])


class NoiseBatch:
    """Per-run noise for a batch of runs, drawn in chunks.

    Row ``i`` of each returned block comes from ``streams[i]`` and is the
    same sequence a single-run simulation drawing one (N,) vector per step
    would see.
    """

    def __init__(self, streams: Sequence[RngStream] | None, config: ReservoirConfig, chunk: int = 256):
        self.active = config.noisy
        self.N = config.N
        self.lo, self.hi = config.noise_support
        self.streams = list(streams or [])
        if self.active and not self.streams:
            raise ValueError(f"{config.kind.value} with b > 0 needs noise streams")
        self.chunk = chunk
        self._buf = None
        self._pos = chunk

    def next(self):
        if not self.active:
            return None
        if self._pos >= self.chunk:
            self._buf = np.stack([s.uniform(self.lo, self.hi, (self.chunk, self.N)) for s in self.streams], axis=1)
            self._pos = 0
        r = self._buf[self._pos]
        self._pos += 1
        return r
