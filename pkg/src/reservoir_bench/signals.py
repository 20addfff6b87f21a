"""Scalar input waveforms for the prediction and memory tasks."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from .rng import RngStream


class InvalidSpecError(ValueError):
    pass


class SignalKind(str, Enum):
    CLEAN = "clean"
    DISTORTED = "distorted"
    HARMONIC = "harmonic"
    SAWTOOTH = "sawtooth"
    SQUARE = "square"


@dataclass(frozen=True)
class SignalSpec:
    """Parametric waveform.

    ``A``/``B`` weight the ``f1``/``f2`` components, ``C`` is the weight of
    the additive ``U[0,1) - 0.5`` noise (distorted kind only).  Frequencies
    are in cycles per second and samples are ``dt`` seconds apart.
    """

    kind: SignalKind = SignalKind.CLEAN
    A: float = 1.0
    B: float = 2.0
    C: float = 0.0
    f1: float = 0.10
    f2: float = 0.02
    harmonic_count: int = 15
    dt: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SignalKind(self.kind))
        for name in ("A", "B", "C", "f1", "f2", "dt"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidSpecError(f"{name} must be finite")
        if self.f1 <= 0 or self.f2 <= 0:
            raise InvalidSpecError("frequencies must be positive")
        if self.dt <= 0:
            raise InvalidSpecError("dt must be positive")
        if self.C < 0:
            raise InvalidSpecError("noise weight C must be >= 0")
        if self.harmonic_count < 1:
            raise InvalidSpecError("harmonic_count must be >= 1")

    @property
    def needs_noise(self) -> bool:
        return self.kind is SignalKind.DISTORTED and self.C != 0

    def bound(self) -> float:
        """Upper bound on ``|u(t)|`` for this spec."""
        if self.kind is SignalKind.HARMONIC:
            n = np.arange(1, 2 * self.harmonic_count, 2)
            return float(4 / np.pi * np.sum(1.0 / n))
        extra = self.C / 2 if self.kind is SignalKind.DISTORTED else 0.0
        return abs(self.A) + abs(self.B) + extra

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SignalSpec":
        return cls(**d)


@dataclass
class TimeSeries:
    values: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise ValueError("TimeSeries values must be one-dimensional")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("TimeSeries contains non-finite values")

    def __len__(self) -> int:
        return len(self.values)

    def slice(self, start: int, stop: int) -> "TimeSeries":
        return TimeSeries(self.values[start:stop], self.dt)


def _cycles(freq: float, t: np.ndarray) -> np.ndarray:
    # fractional part of freq*t; rounding keeps exact period boundaries from
    # landing a hair below an integer
    return np.mod(np.round(freq * t, 9), 1.0)


def sawtooth_wave(phase):
    """Ramp from -1 (phase 0) rising to 1 just before 2*pi."""
    frac = np.mod(np.asarray(phase, dtype=float) / (2 * np.pi), 1.0)
    out = 2.0 * frac - 1.0
    return float(out) if np.ndim(out) == 0 else out


def square_wave(phase):
    """+1 over the first half period (including phase 0), -1 over the second."""
    frac = np.mod(np.asarray(phase, dtype=float) / (2 * np.pi), 1.0)
    out = np.where(frac < 0.5, 1.0, -1.0)
    return float(out) if np.ndim(out) == 0 else out


def generate(spec: SignalSpec, length: int, noise: RngStream | None = None) -> TimeSeries:
    """Sample ``spec`` at ``t = 0, dt, ..., (length-1)*dt``.

    The distorted kind draws one ``U[0,1)`` value per step from ``noise``.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    t = np.arange(length, dtype=float) * spec.dt
    kind = spec.kind
    if kind in (SignalKind.CLEAN, SignalKind.DISTORTED):
        u = spec.A * np.cos(2 * np.pi * spec.f1 * t) + spec.B * np.sin(2 * np.pi * spec.f2 * t)
        if kind is SignalKind.DISTORTED and spec.C != 0:
            if noise is None:
                raise InvalidSpecError("distorted signal with C != 0 needs a noise stream")
            u = u + spec.C * (noise.uniform(0.0, 1.0, length) - 0.5)
    elif kind is SignalKind.HARMONIC:
        u = np.zeros(length)
        for j in range(spec.harmonic_count):
            n = 2 * j + 1
            u += np.sin(2 * np.pi * n * spec.f1 * t) / n
        u *= 4 / np.pi
    elif kind is SignalKind.SAWTOOTH:
        u = spec.A * (2 * _cycles(spec.f1, t) - 1) + spec.B * (2 * _cycles(spec.f2, t) - 1)
    elif kind is SignalKind.SQUARE:
        sq1 = np.where(_cycles(spec.f1, t) < 0.5, 1.0, -1.0)
        sq2 = np.where(_cycles(spec.f2, t) < 0.5, 1.0, -1.0)
        u = spec.A * sq1 + spec.B * sq2
    else:  # pragma: no cover
        raise InvalidSpecError(f"unknown kind {kind}")
    return TimeSeries(u, spec.dt)


CLEAN = SignalSpec(SignalKind.CLEAN)

# Named inputs used by the experiment presets.  input1..input4 are the four
# waveform families; variant_* are the three amplitude/frequency/noise variants.
PRESETS: dict[str, SignalSpec] = {
    "clean": CLEAN,
    "distorted": replace(CLEAN, kind=SignalKind.DISTORTED, C=1.0),
    "harmonic": SignalSpec(SignalKind.HARMONIC, f1=0.10),
    "sawtooth": replace(CLEAN, kind=SignalKind.SAWTOOTH),
    "square": replace(CLEAN, kind=SignalKind.SQUARE),
    "variant_a": SignalSpec(SignalKind.CLEAN, A=0.5, B=1.0, C=0.0, f1=0.20, f2=0.04),
    "variant_b": SignalSpec(SignalKind.DISTORTED, A=1.0, B=2.0, C=0.5),
    "variant_c": SignalSpec(SignalKind.DISTORTED, A=1.0, B=2.0, C=1.5),
}
PRESETS["input1"] = PRESETS["clean"]
PRESETS["input2"] = PRESETS["harmonic"]
PRESETS["input3"] = PRESETS["sawtooth"]
PRESETS["input4"] = PRESETS["square"]


def get_preset(name: str) -> SignalSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise InvalidSpecError(f"unknown input {name!r}; choose from {sorted(PRESETS)}") from None
