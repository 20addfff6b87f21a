"""Linear readout training and free-running (generative) prediction.

Time alignment: the reservoir consumes ``u[t]`` and its state is regressed
onto ``u[t+1]``.  Training uses teacher forcing over ``washout + train``
steps; the test phase then feeds each prediction back as the next input.

The engine runs R independent runs in lockstep (one row each).  Runs never
interact; every row draws its own noise stream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .linalg import SingularSystemError, ridge_solve
from .metrics import DegenerateWeightsError, dynamic_range, nmse
from .reservoir import (
    NoiseBatch,
    ReservoirConfig,
    ReservoirState,
    WeightSet,
    advance,
    build_topology,
)
from .rng import RngStream
from .signals import SignalSpec, TimeSeries, generate


class Mode(str, Enum):
    OFFLINE = "offline"
    ONLINE = "online"


@dataclass(frozen=True)
class TrainingPlan:
    washout_steps: int = 200
    train_steps: int = 2000
    test_steps: int = 100
    mode: Mode = Mode.OFFLINE
    online_segments: int = 40
    blend_old: float = 0.9
    blend_new: float = 0.1
    ridge_lambda: float = 1e-8
    # blowup when |y| exceeds this multiple of max|target| over the test span
    blowup_factor: float = 10.0
    nmse_convention: str = "range"

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if min(self.washout_steps, self.train_steps, self.test_steps) < 1:
            raise ValueError("step counts must be >= 1")
        if self.online_segments < 1 or self.online_segments > self.test_steps:
            raise ValueError("online_segments must be in [1, test_steps]")
        if not math.isclose(self.blend_old + self.blend_new, 1.0, abs_tol=1e-12):
            raise ValueError("blend_old + blend_new must equal 1")
        if min(self.blend_old, self.blend_new) < 0:
            raise ValueError("blend weights must be nonnegative")
        if self.ridge_lambda < 0:
            raise ValueError("ridge_lambda must be >= 0")
        if self.blowup_factor <= 0:
            raise ValueError("blowup_factor must be positive")

    @property
    def train_end(self) -> int:
        return self.washout_steps + self.train_steps

    @property
    def signal_length(self) -> int:
        """Samples needed for training plus a test span of one-step targets."""
        return self.train_end + self.test_steps + 1

    def segment_bounds(self) -> list[tuple[int, int]]:
        """Contiguous test segments; the remainder goes to the last one."""
        size = self.test_steps // self.online_segments
        bounds = [(i * size, (i + 1) * size) for i in range(self.online_segments)]
        bounds[-1] = (bounds[-1][0], self.test_steps)
        return bounds

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["mode"] = self.mode.value
        return d


@dataclass
class RunResult:
    nmse: float | None
    blowup: bool
    blowup_step: int | None
    w_out: np.ndarray
    predicted: TimeSeries
    target: TimeSeries
    failed: bool = False
    error: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        if self.failed:
            return "failed"
        return "blowup" if self.blowup else "ok"

    def wout_stats(self) -> dict:
        w = np.asarray(self.w_out, dtype=float)
        out = {"wout_db": None, "wout_ratio": None, "wout_max_abs": None, "wout_l2": None}
        if w.size and np.all(np.isfinite(w)):
            out["wout_max_abs"] = float(np.abs(w).max())
            out["wout_l2"] = float(np.linalg.norm(w))
            try:
                out["wout_ratio"], out["wout_db"] = dynamic_range(w)
            except DegenerateWeightsError:
                pass
        return out

    def to_record(self) -> dict:
        rec = {"status": self.status, "nmse": self.nmse, "blowup": self.blowup, "blowup_step": self.blowup_step}
        rec.update(self.wout_stats())
        if self.error:
            rec["error"] = self.error
        rec.update(self.extra)
        return rec

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "target", "predicted"])
            pred = self.predicted.values
            for k, tv in enumerate(self.target.values):
                w.writerow([k, repr(float(tv)), repr(float(pred[k])) if k < len(pred) else ""])


def detect_blowup(y_t: float, state: ReservoirState | np.ndarray | None, threshold: float) -> bool:
    """True iff ``|y_t| > threshold`` or anything is non-finite."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if not math.isfinite(y_t) or abs(y_t) > threshold:
        return True
    if state is not None:
        x = getattr(state, "x", state)
        if not np.all(np.isfinite(x)):
            return True
    return False


def _blowup_mask(y: np.ndarray, x: np.ndarray, thr: np.ndarray) -> np.ndarray:
    finite = np.isfinite(y) & np.all(np.isfinite(x), axis=1)
    with np.errstate(invalid="ignore"):
        return ~finite | (np.abs(y) > thr)


# -- batched engine ---------------------------------------------------------------


def _teacher_force(weights, config, plan, U, noise, x=None):
    """Drive with the true signal; returns final states and the training states."""
    R = U.shape[0]
    if x is None:
        x = np.zeros((R, config.N))
    S = np.empty((R, plan.train_steps, config.N))
    w_in = weights.W_in[:, 0]
    for t in range(plan.train_end):
        x = advance(x, U[:, t], w_in, weights.W_s, config.a, config.kind, config.b, noise.next())
        if t >= plan.washout_steps:
            S[:, t - plan.washout_steps] = x
    return x, S


def _fit_rows(S, Y, lam):
    """Per-run ridge fits; rows whose system is singular come back as NaN."""
    R, _, N = S.shape
    W = np.empty((R, N))
    errors: list[str | None] = [None] * R
    for r in range(R):
        try:
            W[r] = ridge_solve(S[r], Y[r], lam)[0]
        except SingularSystemError as exc:
            W[r] = np.nan
            errors[r] = str(exc)
    return W, errors


def _free_run(weights, config, plan, x, W, targets, noise, online: bool):
    """Generative test phase for R runs.

    Returns (predictions, blowup step per run or -1, final readouts).
    """
    R, te = targets.shape
    W = W.copy()
    W_final = W.copy()
    thr = plan.blowup_factor * np.max(np.abs(targets), axis=1)
    pred = np.zeros((R, te))
    blow = np.full(R, -1)
    alive = np.all(np.isfinite(W), axis=1)
    x = np.where(alive[:, None], x, 0.0)
    W[~alive] = 0.0
    y = np.einsum("rn,rn->r", W, x)
    w_in = weights.W_in[:, 0]
    update = online and plan.blend_new != 0
    seg_ends = {stop: start for start, stop in plan.segment_bounds()[:-1]} if update else {}
    states = np.empty((R, te, config.N)) if update else None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(te):
            x = advance(x, y, w_in, weights.W_s, config.a, config.kind, config.b, noise.next())
            y = np.einsum("rn,rn->r", W, x)
            bad = alive & _blowup_mask(y, x, thr)
            if bad.any():
                blow[bad] = k
                W_final[bad] = W[bad]
                alive &= ~bad
                x[~alive] = 0.0
                y[~alive] = 0.0
                W[~alive] = 0.0
            pred[:, k] = y
            if states is not None:
                states[:, k] = x
            start = seg_ends.get(k + 1)
            if start is not None:
                for r in np.flatnonzero(alive):
                    try:
                        w_seg = ridge_solve(states[r, start : k + 1], targets[r, start : k + 1], plan.ridge_lambda)[0]
                    except SingularSystemError:
                        w_seg = None
                    if w_seg is None or not np.all(np.isfinite(w_seg)):
                        blow[r] = k
                        W_final[r] = W[r]
                        alive[r] = False
                        W[r] = 0.0
                        x[r] = 0.0
                        y[r] = 0.0
                        continue
                    W[r] = plan.blend_old * W[r] + plan.blend_new * w_seg
    W_final[alive] = W[alive]
    return pred, blow, W_final


def _results(plan, pred, blow, W_final, targets, dt, errors=None) -> list[RunResult]:
    out = []
    for r in range(pred.shape[0]):
        tgt = TimeSeries(targets[r], dt)
        err = errors[r] if errors else None
        if err is not None:
            out.append(RunResult(None, False, None, W_final[r][None, :], TimeSeries([], dt), tgt, failed=True, error=err))
            continue
        b = int(blow[r])
        if b >= 0:
            out.append(RunResult(None, True, b, W_final[r][None, :], TimeSeries(pred[r, :b], dt), tgt))
        else:
            score = nmse(targets[r], pred[r], plan.nmse_convention)
            out.append(RunResult(score, False, None, W_final[r][None, :], TimeSeries(pred[r], dt), tgt))
    return out


def run_batch(
    weights: WeightSet,
    config: ReservoirConfig,
    plan: TrainingPlan,
    U: np.ndarray,
    streams: Sequence[RngStream] | None = None,
    dt: float = 1.0,
) -> list[RunResult]:
    """Train and test R runs sharing one topology.

    ``U`` has one input series per row (length ``plan.signal_length``);
    ``streams[r]`` supplies row r's neuron noise for both phases.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    if U.shape[1] < plan.signal_length:
        raise ValueError(f"signal needs {plan.signal_length} samples, got {U.shape[1]}")
    noise = NoiseBatch(streams, config)
    x, S = _teacher_force(weights, config, plan, U, noise)
    Y = U[:, plan.washout_steps + 1 : plan.train_end + 1]
    W, errors = _fit_rows(S, Y, plan.ridge_lambda)
    targets = U[:, plan.train_end + 1 : plan.signal_length]
    pred, blow, W_final = _free_run(weights, config, plan, x, W, targets, noise, plan.mode is Mode.ONLINE)
    for r, e in enumerate(errors):
        if e is not None:
            W_final[r] = W[r]
    return _results(plan, pred, blow, W_final, targets, dt, errors if any(errors) else None)


# -- single-run API -----------------------------------------------------------------


def _single_noise(config, noise):
    # chunk=1 draws exactly what each step consumes, so a stream can be
    # handed from training to testing without read-ahead
    return NoiseBatch([noise] if noise is not None else None, config, chunk=1)


def train_offline(
    weights: WeightSet,
    config: ReservoirConfig,
    plan: TrainingPlan,
    signal,
    noise: RngStream | None = None,
) -> tuple[WeightSet, ReservoirState]:
    """Fit ``W_out`` mapping state x[t] to u[t+1] after the washout.

    Returns the trained weights and the reservoir state at the end of the
    training span (the starting point for the test phase).
    """
    u = np.asarray(getattr(signal, "values", signal), dtype=float)
    if len(u) < plan.train_end + 1:
        raise ValueError(f"signal needs at least {plan.train_end + 1} samples for washout + training")
    x, S = _teacher_force(weights, config, plan, u[None, :], _single_noise(config, noise))
    Y = u[plan.washout_steps + 1 : plan.train_end + 1]
    W_out = ridge_solve(S[0], Y, plan.ridge_lambda)
    return weights.with_readout(W_out), ReservoirState(x[0], plan.train_end)


def _test_single(weights, config, plan, test_target, noise, state, online):
    if weights.W_out is None:
        raise ValueError("W_out is not trained")
    tgt = np.asarray(getattr(test_target, "values", test_target), dtype=float)
    dt = getattr(test_target, "dt", 1.0)
    plan_ = plan
    if len(tgt) != plan.test_steps:
        segs = min(plan.online_segments, len(tgt))
        plan_ = replace(plan, test_steps=len(tgt), online_segments=segs)
    x = (state.x if state is not None else np.zeros(config.N))[None, :]
    W = weights.W_out[:1]
    pred, blow, W_final = _free_run(weights, config, plan_, x, W, tgt[None, :], _single_noise(config, noise), online)
    return _results(plan_, pred, blow, W_final, tgt[None, :], dt)[0]


def predict_free_run(
    weights: WeightSet,
    config: ReservoirConfig,
    plan: TrainingPlan,
    test_target,
    noise: RngStream | None = None,
    state: ReservoirState | None = None,
) -> RunResult:
    """Generative test with a fixed readout, starting from ``state``."""
    return _test_single(weights, config, plan, test_target, noise, state, online=False)


def train_online(
    weights: WeightSet,
    config: ReservoirConfig,
    plan: TrainingPlan,
    test_target,
    noise: RngStream | None = None,
    state: ReservoirState | None = None,
) -> RunResult:
    """Generative test that re-fits the readout after every segment but the last.

    Each refit uses only the finished segment's (state, target) pairs and is
    blended in as ``blend_old * W_out + blend_new * W_segment``.
    """
    return _test_single(weights, config, plan, test_target, noise, state, online=True)


def make_signal(spec: SignalSpec, plan: TrainingPlan, config: ReservoirConfig) -> TimeSeries:
    """Training and test signal in one span, from the run's input-noise stream."""
    return generate(spec, plan.signal_length, config.input_stream() if spec.needs_noise else None)


def run_trial(config: ReservoirConfig, plan: TrainingPlan, spec: SignalSpec, weights: WeightSet | None = None) -> RunResult:
    """Complete train + test cycle for one run, with all streams derived from ``config``."""
    if weights is None:
        weights = build_topology(config)
    signal = make_signal(spec, plan, config)
    stream = config.noise_stream() if config.noisy else None
    res = run_batch(weights, config, plan, signal.values[None, :], [stream] if stream else None, spec.dt)[0]
    return res
