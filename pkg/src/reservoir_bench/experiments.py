"""Config-driven sweeps over (model, size, noise, input) grids.

A sweep is split into tasks, one per (cell, topology).  Each task simulates
its runs in fixed lockstep batches of ``batch_size`` and writes a checkpoint
file, so the output does not depend on the number of workers or on the
order tasks finish in, and an interrupted sweep resumes where it stopped.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import shutil
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .metrics import MCPlan, aggregate_values, drive_batch, mann_kendall, mc_from_states
from .readout import TrainingPlan, run_batch
from .reservoir import DEFAULT_LEAK, DEFAULT_NOISE_SUPPORT, DEFAULT_RHO, DEFAULT_W_IN_SCALE, NeuronKind, NeuronModel, ReservoirConfig, build_topology
from .rng import Purpose, derive_stream
from .signals import SignalSpec, generate, get_preset

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
COLUMNS = ["model", "N", "b", "input_id", "topology", "run", "status", "nmse", "blowup", "blowup_step", "wout_db", "mc_total"]
TASK_KINDS = ("nmse", "mc")


class ConfigError(ValueError):
    pass


class RecordsError(ValueError):
    pass


@dataclass(frozen=True)
class ReservoirParams:
    """Dynamics hyperparameters shared by every cell of a sweep."""

    a: float = DEFAULT_LEAK
    rho_target: float = DEFAULT_RHO
    w_in_scale: float = DEFAULT_W_IN_SCALE
    noise_support: tuple[float, float] = DEFAULT_NOISE_SUPPORT

    def config(self, N: int, model: NeuronModel, seed: int, topology: int, run: int = 0) -> ReservoirConfig:
        return ReservoirConfig(
            N=N,
            a=self.a,
            model=model,
            rho_target=self.rho_target,
            w_in_scale=self.w_in_scale,
            seed=seed,
            topology_index=topology,
            run_index=run,
            noise_support=tuple(self.noise_support),
        )


@dataclass(frozen=True)
class InputRef:
    id: str
    spec: SignalSpec


@dataclass(frozen=True)
class Cell:
    model: NeuronKind
    b: float
    N: int
    input_id: str

    def key(self) -> tuple:
        return (self.model.value, self.N, self.b, self.input_id)


@dataclass
class SweepConfig:
    models: list[str] = field(default_factory=lambda: ["ASN", "BSN"])
    sizes: list[int] = field(default_factory=lambda: [10, 20, 30, 40, 50])
    noise_levels: list[float] = field(default_factory=lambda: [0.05])
    inputs: list[Any] = field(default_factory=lambda: ["clean"])
    topologies: int = 5
    runs_per_topology: int = 50
    plan: TrainingPlan = field(default_factory=TrainingPlan)
    base_seed: int = 2023
    output_path: str = "results/sweep.csv"
    # explicit (model, b) pairs; when set they replace models x noise_levels
    cells: list[tuple[str, float]] | None = None
    reservoir: ReservoirParams = field(default_factory=ReservoirParams)
    task: str = "nmse"
    k_max: int = 50
    mc_plan: MCPlan = field(default_factory=MCPlan)
    batch_size: int = 50
    hist_bins: int = 50
    name: str = "sweep"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    # -- validation / grid ----------------------------------------------------
    def validate(self) -> None:
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        if self.task not in TASK_KINDS:
            raise ConfigError(f"task must be one of {TASK_KINDS}")
        if not self.sizes or not self.inputs:
            raise ConfigError("sizes and inputs must be non-empty")
        if self.cells is None and (not self.models or not self.noise_levels):
            raise ConfigError("models and noise_levels must be non-empty")
        if self.cells is not None and not self.cells:
            raise ConfigError("cells must be non-empty when given")
        if self.topologies < 1 or self.runs_per_topology < 1:
            raise ConfigError("topologies and runs_per_topology must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if any(int(n) < 1 for n in self.sizes):
            raise ConfigError("sizes must be >= 1")
        try:
            self.model_noise_pairs()
            self.input_refs()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def model_noise_pairs(self) -> list[NeuronModel]:
        if self.cells is not None:
            return [NeuronModel(m, float(b)) for m, b in self.cells]
        return [NeuronModel(m, float(b)) for m in self.models for b in self.noise_levels]

    def input_refs(self) -> list[InputRef]:
        refs = []
        for item in self.inputs:
            if isinstance(item, str):
                refs.append(InputRef(item, get_preset(item)))
            elif isinstance(item, dict):
                spec = item.get("spec")
                refs.append(InputRef(str(item["id"]), SignalSpec.from_dict(spec) if spec else get_preset(item["id"])))
            else:
                raise ConfigError(f"bad input entry {item!r}")
        ids = [r.id for r in refs]
        if len(set(ids)) != len(ids):
            raise ConfigError("input ids must be unique")
        return refs

    def grid(self) -> list[Cell]:
        cells = [
            Cell(m.kind, m.b, int(N), ref.id)
            for m in self.model_noise_pairs()
            for N in self.sizes
            for ref in self.input_refs()
        ]
        return sorted(cells, key=Cell.key)

    @property
    def expected_rows(self) -> int:
        return len(self.grid()) * self.topologies * self.runs_per_topology

    # -- (de)serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "name": self.name,
            "task": self.task,
            "models": list(self.models),
            "noise_levels": list(self.noise_levels),
            "cells": [list(c) for c in self.cells] if self.cells is not None else None,
            "sizes": list(self.sizes),
            "inputs": [i if isinstance(i, str) else dict(i) for i in self.inputs],
            "topologies": self.topologies,
            "runs_per_topology": self.runs_per_topology,
            "plan": self.plan.to_dict(),
            "reservoir": {**asdict(self.reservoir), "noise_support": list(self.reservoir.noise_support)},
            "k_max": self.k_max,
            "mc_plan": asdict(self.mc_plan),
            "base_seed": self.base_seed,
            "batch_size": self.batch_size,
            "hist_bins": self.hist_bins,
            "output_path": self.output_path,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        d = dict(d)
        if "schema_version" not in d:
            raise ConfigError("config lacks schema_version")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "plan" in d:
                d["plan"] = TrainingPlan(**d["plan"])
            if "reservoir" in d:
                r = dict(d["reservoir"])
                if "noise_support" in r:
                    r["noise_support"] = tuple(r["noise_support"])
                d["reservoir"] = ReservoirParams(**r)
            if "mc_plan" in d:
                d["mc_plan"] = MCPlan(**d["mc_plan"])
            if d.get("cells") is not None:
                d["cells"] = [tuple(c) for c in d["cells"]]
            return cls(**d)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(data)

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("output_path")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]


# -- task execution -------------------------------------------------------------------


def _signals(spec: SignalSpec, length: int, seed: int, topology: int, runs: list[int]) -> np.ndarray:
    return np.stack(
        [
            generate(spec, length, derive_stream(seed, topology, r, Purpose.INPUT_NOISE) if spec.needs_noise else None).values
            for r in runs
        ]
    )


def _noise_streams(rc: ReservoirConfig, seed: int, topology: int, runs: list[int]):
    if not rc.noisy:
        return None
    return [derive_stream(seed, topology, r, Purpose.NEURON_NOISE) for r in runs]


def _row(cell: Cell, topology: int, run: int, **vals) -> dict:
    row = {c: None for c in COLUMNS}
    row.update(model=cell.model.value, N=cell.N, b=cell.b, input_id=cell.input_id, topology=topology, run=run)
    row.update(vals)
    return row


def run_task(config: SweepConfig, cell: Cell, topology: int) -> list[dict]:
    """All runs of one (cell, topology): a list of CSV rows in run order."""
    spec = {r.id: r.spec for r in config.input_refs()}[cell.input_id]
    rc = config.reservoir.config(cell.N, NeuronModel(cell.model, cell.b), config.base_seed, topology)
    weights = build_topology(rc)
    rows: list[dict] = []
    all_runs = list(range(config.runs_per_topology))
    for start in range(0, len(all_runs), config.batch_size):
        runs = all_runs[start : start + config.batch_size]
        try:
            if config.task == "mc":
                rows.extend(_mc_rows(config, cell, rc, weights, spec, topology, runs))
            else:
                rows.extend(_nmse_rows(config, cell, rc, weights, spec, topology, runs))
        except Exception as exc:  # contained: the batch is recorded as failed
            log.error("cell %s topology %d runs %d-%d failed: %s", cell.key(), topology, runs[0], runs[-1], exc)
            rows.extend(_row(cell, topology, r, status="failed", blowup=False) for r in runs)
    return rows


def _nmse_rows(config, cell, rc, weights, spec, topology, runs):
    U = _signals(spec, config.plan.signal_length, config.base_seed, topology, runs)
    results = run_batch(weights, rc, config.plan, U, _noise_streams(rc, config.base_seed, topology, runs), spec.dt)
    rows = []
    for r, res in zip(runs, results):
        stats = res.wout_stats()
        rows.append(
            _row(
                cell,
                topology,
                r,
                status=res.status,
                nmse=res.nmse,
                blowup=res.blowup,
                blowup_step=res.blowup_step,
                wout_db=stats["wout_db"],
            )
        )
    return rows


def _mc_rows(config, cell, rc, weights, spec, topology, runs):
    plan = config.mc_plan
    U = _signals(spec, plan.input_length, config.base_seed, topology, runs)
    states = drive_batch(weights, rc, U, _noise_streams(rc, config.base_seed, topology, runs))
    rows = []
    for i, r in enumerate(runs):
        res = mc_from_states(states[i], U[i], config.k_max, plan)
        row = _row(cell, topology, r, status="ok", blowup=False, mc_total=res.total)
        row["per_delay"] = [float(v) for v in res.scores]
        rows.append(row)
    return rows


def _task_entry(args):
    cfg_dict, cell_tuple, topology = args
    config = SweepConfig.from_dict(cfg_dict)
    model, b, N, input_id = cell_tuple
    return run_task(config, Cell(NeuronKind(model), b, N, input_id), topology)


# -- CSV I/O --------------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv_text(rows: Iterable[dict], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(COLUMNS)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in COLUMNS])
    return buf.getvalue()


def _sort_key(row: dict) -> tuple:
    return (row["model"], int(row["N"]), float(row["b"]), row["input_id"], int(row["topology"]), int(row["run"]))


def _opt_float(s: str):
    return None if s == "" else float(s)


def _opt_int(s: str):
    return None if s == "" else int(s)


def _parse_bool(s: str) -> bool:
    if s == "true":
        return True
    if s == "false":
        return False
    raise ValueError(f"bad boolean {s!r}")


def read_records(path) -> list[dict]:
    """Parse a sweep CSV; malformed content raises RecordsError naming the row."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise RecordsError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise RecordsError(f"{path}: empty records file (row 1)")
        if header != COLUMNS:
            raise RecordsError(f"{path}: row 1: unexpected header {header}")
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(COLUMNS):
                raise RecordsError(f"{path}: row {lineno}: expected {len(COLUMNS)} fields, got {len(rec)}")
            d = dict(zip(COLUMNS, rec))
            try:
                rows.append(
                    {
                        "model": NeuronKind.parse(d["model"]).value,
                        "N": int(d["N"]),
                        "b": float(d["b"]),
                        "input_id": d["input_id"],
                        "topology": int(d["topology"]),
                        "run": int(d["run"]),
                        "status": d["status"],
                        "nmse": _opt_float(d["nmse"]),
                        "blowup": _parse_bool(d["blowup"]),
                        "blowup_step": _opt_int(d["blowup_step"]),
                        "wout_db": _opt_float(d["wout_db"]),
                        "mc_total": _opt_float(d["mc_total"]),
                    }
                )
            except ValueError as exc:
                raise RecordsError(f"{path}: row {lineno}: {exc}") from exc
            if rows[-1]["status"] not in ("ok", "blowup", "failed"):
                raise RecordsError(f"{path}: row {lineno}: unknown status {d['status']!r}")
        if not rows:
            raise RecordsError(f"{path}: no records (row 2)")
    return rows


# -- sweeps -----------------------------------------------------------------------------


def _check_writable(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        probe = path.parent / f".{path.name}.probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output path {path} is not writable: {exc}") from exc


def _parts_dir(out: Path) -> Path:
    return out.parent / f"{out.name}.parts"


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + ".summary.json")


JOBS_ENV = "RESERVOIR_BENCH_JOBS"


def resolve_jobs(jobs: int | None) -> int:
    """Explicit value, else the RESERVOIR_BENCH_JOBS environment variable, else 1."""
    if jobs is None:
        env = os.environ.get(JOBS_ENV, "").strip()
        if not env:
            return 1
        try:
            jobs = int(env)
        except ValueError:
            raise ConfigError(f"{JOBS_ENV} must be an integer, got {env!r}") from None
    if jobs < 1:
        raise ConfigError("jobs must be >= 1")
    return jobs


def run_sweep(config: SweepConfig, jobs: int | None = 1, stop_after: int | None = None) -> list[dict]:
    """Execute every cell x topology x run and write CSV + JSON summary.

    Completed tasks are checkpointed under ``<output>.parts/``; rerunning an
    interrupted sweep reuses them.  ``stop_after`` ends the call after that
    many new tasks without writing the final CSV (returns the rows so far).
    """
    jobs = resolve_jobs(jobs)
    out = Path(config.output_path)
    _check_writable(out)
    parts = _parts_dir(out)
    parts.mkdir(parents=True, exist_ok=True)
    stamp = parts / "config.sha"
    digest = config.digest()
    if stamp.exists() and stamp.read_text().strip() != digest:
        log.warning("checkpoint directory %s belongs to a different config; discarding", parts)
        shutil.rmtree(parts)
        parts.mkdir(parents=True)
    stamp.write_text(digest + "\n")

    tasks = [(cell, topo) for cell in config.grid() for topo in range(config.topologies)]
    pending = []
    for i, (cell, topo) in enumerate(tasks):
        if not (parts / f"task_{i:06d}.json").exists():
            pending.append(i)
    if stop_after is not None:
        pending = pending[:stop_after]
    log.info("sweep %s: %d tasks, %d pending", config.name, len(tasks), len(pending))

    def save(i: int, rows: list[dict]) -> None:
        tmp = parts / f"task_{i:06d}.tmp"
        tmp.write_text(json.dumps(rows))
        os.replace(tmp, parts / f"task_{i:06d}.json")

    cfg_dict = config.to_dict()
    if jobs <= 1 or len(pending) <= 1:
        for i in pending:
            cell, topo = tasks[i]
            save(i, run_task(config, cell, topo))
    else:
        args = [(cfg_dict, (tasks[i][0].model.value, tasks[i][0].b, tasks[i][0].N, tasks[i][0].input_id), tasks[i][1]) for i in pending]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, rows in zip(pending, pool.map(_task_entry, args)):
                save(i, rows)

    done = [i for i in range(len(tasks)) if (parts / f"task_{i:06d}.json").exists()]
    if len(done) < len(tasks):
        rows = []
        for i in done:
            rows.extend(_read_part(parts / f"task_{i:06d}.json"))
        return sorted(rows, key=_sort_key)

    rows = []
    for i in range(len(tasks)):
        rows.extend(_read_part(parts / f"task_{i:06d}.json"))
    rows.sort(key=_sort_key)
    if len(rows) != config.expected_rows:
        raise RuntimeError(f"row count {len(rows)} != expected {config.expected_rows}")
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text(_csv_text(rows))
    os.replace(tmp, out)
    summary = summarize(rows, config.hist_bins)
    with open(_summary_path(out), "w") as fh:
        json.dump({"config": config.to_dict(), "cells": summary}, fh, indent=2)
        fh.write("\n")
    shutil.rmtree(parts)
    return rows


def _read_part(path: Path) -> list[dict]:
    with open(path) as fh:
        return json.load(fh)


def default_mc_config(**overrides) -> SweepConfig:
    """Memory-capacity grid: {analog, binary} x {40, 50} x {b=0, b=5%}."""
    base = dict(
        name="memory",
        task="mc",
        cells=[("AN", 0.0), ("ASN", 0.05), ("BN", 0.0), ("BSN", 0.05)],
        sizes=[40, 50],
        inputs=["distorted"],
        runs_per_topology=10,
        output_path="results/memory.csv",
        reservoir=MC_RESERVOIR,
    )
    base.update(overrides)
    return SweepConfig(**base)


def run_mc_suite(config: SweepConfig | None = None, jobs: int = 1) -> list[dict]:
    """Memory capacity per run over the config's grid (defaults to the four analog/binary cells)."""
    if config is None:
        config = default_mc_config()
    if config.task != "mc":
        config = replace(config, task="mc")
    return run_sweep(config, jobs=jobs)


# -- summaries and reports ----------------------------------------------------------


def _quantiles(vals: list[float]) -> dict | None:
    if not vals:
        return None
    a = np.sort(np.asarray(vals, dtype=float))
    q1, med, q3 = np.percentile(a, [25, 50, 75])
    iqr = q3 - q1
    lo_w = float(a[a >= q1 - 1.5 * iqr].min())
    hi_w = float(a[a <= q3 + 1.5 * iqr].max())
    return {
        "min": float(a[0]),
        "q1": float(q1),
        "median": float(med),
        "q3": float(q3),
        "max": float(a[-1]),
        "whisker_lo": lo_w,
        "whisker_hi": hi_w,
        "count": int(a.size),
    }


def _mc_summary(totals: list[float], delays: list[list[float]]) -> dict:
    out = {"mean": statistics.fmean(totals), "std": float(np.std(totals)), "count": len(totals)}
    if delays:
        out["per_delay_mean"] = [float(v) for v in np.mean(np.array(delays), axis=0)]
    return out


def summarize(rows: list[dict], bins: int = 50) -> list[dict]:
    """Per-cell statistics in canonical cell order."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((row["model"], row["N"], row["b"], row["input_id"]), []).append(row)
    out = []
    for key in sorted(groups):
        g = groups[key]
        total = len(g)
        failed = sum(r["status"] == "failed" for r in g)
        blow = sum(r["status"] == "blowup" for r in g)
        agg = aggregate_values([r["nmse"] if r["status"] == "ok" else None for r in g], bins)
        mc = [r["mc_total"] for r in g if r["mc_total"] is not None]
        delays = [r["per_delay"] for r in g if r.get("per_delay")]
        out.append(
            {
                "model": key[0],
                "N": key[1],
                "b": key[2],
                "input_id": key[3],
                "count_total": total,
                "count_valid": total - failed - blow,
                "count_blowup": blow,
                "count_failed": failed,
                "blowup_rate": blow / max(total - failed, 1),
                "nmse": agg.to_dict(),
                "wout_db": _quantiles([r["wout_db"] for r in g if r["status"] == "ok" and r["wout_db"] is not None]),
                "mc": _mc_summary(mc, delays) if mc else None,
            }
        )
    return out


SUMMARY_COLUMNS = [
    "model", "N", "b", "input_id", "count_total", "count_valid", "count_blowup", "count_failed",
    "valid_fraction", "blowup_rate", "nmse_mean", "nmse_std", "wout_db_median", "mc_mean", "mc_std",
]


def _summary_rows(summary: list[dict]) -> list[list]:
    rows = []
    for c in summary:
        rows.append(
            [
                c["model"], c["N"], c["b"], c["input_id"], c["count_total"], c["count_valid"],
                c["count_blowup"], c["count_failed"], c["nmse"]["valid_fraction"], c["blowup_rate"],
                c["nmse"]["mean"], c["nmse"]["std"],
                c["wout_db"]["median"] if c["wout_db"] else None,
                c["mc"]["mean"] if c["mc"] else None,
                c["mc"]["std"] if c["mc"] else None,
            ]
        )
    return rows


def _write_table(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def blowup_trend(summary: list[dict]) -> list[dict]:
    """Mann-Kendall test of blowup rate vs b for each (model, N, input) series."""
    series: dict[tuple, list[tuple[float, float]]] = {}
    for c in summary:
        series.setdefault((c["model"], c["N"], c["input_id"]), []).append((c["b"], c["blowup_rate"]))
    out = []
    for (model, N, input_id), pts in sorted(series.items()):
        if len(pts) < 3:
            continue
        pts.sort()
        mk = mann_kendall([r for _, r in pts])
        out.append(
            {"model": model, "N": N, "input_id": input_id, "points": len(pts), "S": mk.s, "z": mk.z,
             "p_increasing": mk.p_increasing, "p_decreasing": mk.p_decreasing, "trend": mk.trend()}
        )
    return out


def _attach_delay_curves(summary: list[dict], companion: Path) -> None:
    # per-delay MC curves are not in the CSV; take them from the sweep's JSON summary
    if not companion.exists():
        return
    try:
        cells = json.loads(companion.read_text()).get("cells", [])
    except (OSError, json.JSONDecodeError):
        log.warning("ignoring unreadable summary %s", companion)
        return
    curves = {
        (c["model"], c["N"], c["b"], c["input_id"]): c["mc"]["per_delay_mean"]
        for c in cells
        if c.get("mc") and c["mc"].get("per_delay_mean")
    }
    for c in summary:
        key = (c["model"], c["N"], c["b"], c["input_id"])
        if c["mc"] and key in curves:
            c["mc"]["per_delay_mean"] = curves[key]


def report(records_path, out_dir=None, figures: bool = True, bins: int = 50) -> dict[str, str]:
    """Summary tables, histogram/box/blowup data and figures for a sweep CSV."""
    rows = read_records(records_path)
    records_path = Path(records_path)
    out = Path(out_dir) if out_dir else records_path.parent / f"{records_path.stem}_report"
    out.mkdir(parents=True, exist_ok=True)
    summary = summarize(rows, bins)
    _attach_delay_curves(summary, _summary_path(records_path))
    written: dict[str, str] = {}

    p = out / "summary.csv"
    _write_table(p, SUMMARY_COLUMNS, _summary_rows(summary))
    written["summary"] = str(p)

    hist_rows = []
    for c in summary:
        edges, counts = c["nmse"]["histogram"]["edges"], c["nmse"]["histogram"]["counts"]
        for i, n in enumerate(counts):
            hist_rows.append([c["model"], c["N"], c["b"], c["input_id"], edges[i], edges[i + 1], n])
    p = out / "nmse_histograms.csv"
    _write_table(p, ["model", "N", "b", "input_id", "bin_lo", "bin_hi", "count"], hist_rows)
    written["histograms"] = str(p)

    box_rows = []
    for c in summary:
        q = c["wout_db"]
        if q:
            box_rows.append([c["model"], c["N"], c["b"], c["input_id"], q["count"], q["min"], q["whisker_lo"], q["q1"], q["median"], q["q3"], q["whisker_hi"], q["max"]])
    p = out / "dynamic_range.csv"
    _write_table(p, ["model", "N", "b", "input_id", "count", "min", "whisker_lo", "q1", "median", "q3", "whisker_hi", "max"], box_rows)
    written["dynamic_range"] = str(p)

    p = out / "blowup.csv"
    _write_table(
        p,
        ["model", "N", "b", "input_id", "count_total", "count_blowup", "blowup_rate_pct", "nmse_mean"],
        [[c["model"], c["N"], c["b"], c["input_id"], c["count_total"], c["count_blowup"], 100 * c["blowup_rate"], c["nmse"]["mean"]] for c in summary],
    )
    written["blowup"] = str(p)

    mc_cells = [c for c in summary if c["mc"]]
    if mc_cells:
        p = out / "memory_capacity.csv"
        k_max = max((len(c["mc"].get("per_delay_mean") or []) for c in mc_cells), default=0)
        _write_table(
            p,
            ["model", "N", "b", "input_id", "count", "mc_mean", "mc_std"] + [f"k{k}" for k in range(1, k_max + 1)],
            [
                [c["model"], c["N"], c["b"], c["input_id"], c["mc"]["count"], c["mc"]["mean"], c["mc"]["std"]]
                + list(c["mc"].get("per_delay_mean") or [None] * k_max)
                for c in mc_cells
            ],
        )
        written["memory_capacity"] = str(p)

    trend = blowup_trend(summary)
    p = out / "summary.json"
    with open(p, "w") as fh:
        json.dump({"cells": summary, "blowup_trend": trend}, fh, indent=2)
        fh.write("\n")
    written["summary_json"] = str(p)

    if figures:
        from . import plotting

        written.update(plotting.render_all(summary, rows, out))
    return written


# -- presets ----------------------------------------------------------------------------

# Dynamics used by the figure/table presets (see README for how they were chosen).
DESK_RESERVOIR = ReservoirParams()
# smaller input gain for the memory-capacity grid (see README, "Defaults")
MC_RESERVOIR = replace(DESK_RESERVOIR, w_in_scale=0.15)
OFFLINE_PLAN = TrainingPlan()
ONLINE_PLAN = TrainingPlan(mode="online", test_steps=2000)
SIZES = [10, 20, 30, 40, 50]
FOUR_INPUTS = ["input1", "input2", "input3", "input4"]


def presets() -> dict[str, SweepConfig]:
    """Desk-scale sweeps mirroring each figure/table (5 topologies x 50 runs)."""
    common = dict(reservoir=DESK_RESERVOIR, topologies=5, runs_per_topology=50)
    return {
        "size_scan": SweepConfig(name="size_scan", models=["ASN", "BSN"], sizes=SIZES, noise_levels=[0.05], inputs=["clean"], plan=OFFLINE_PLAN, output_path="results/size_scan.csv", **common),
        "noise_scan": SweepConfig(name="noise_scan", models=["ASN", "BSN"], sizes=SIZES, noise_levels=[0.01, 0.02, 0.03, 0.04, 0.05, 0.10, 0.15], inputs=["clean"], plan=OFFLINE_PLAN, output_path="results/noise_scan.csv", **common),
        "distorted_scan": SweepConfig(name="distorted_scan", models=["ASN", "BSN"], sizes=SIZES, noise_levels=[0.01, 0.05, 0.10, 0.15], inputs=["distorted"], plan=OFFLINE_PLAN, output_path="results/distorted_scan.csv", **common),
        "input_variants": SweepConfig(name="input_variants", models=["ASN", "BSN"], sizes=SIZES, noise_levels=[0.05], inputs=["variant_a", "variant_b", "variant_c"], plan=OFFLINE_PLAN, output_path="results/input_variants.csv", **common),
        "online_blowup": SweepConfig(name="online_blowup", cells=[("AN", 0.0)] + [("ASN", b) for b in (0.01, 0.02, 0.03, 0.04, 0.05, 0.10, 0.15)], sizes=[20], inputs=FOUR_INPUTS, plan=ONLINE_PLAN, output_path="results/online_blowup.csv", **common),
        "input_families": SweepConfig(name="input_families", models=["ASN", "BSN"], sizes=[20, 30], noise_levels=[0.05], inputs=FOUR_INPUTS, plan=OFFLINE_PLAN, output_path="results/input_families.csv", **common),
        "weight_range": SweepConfig(name="weight_range", cells=[("AN", 0.0), ("ASN", 0.05), ("BN", 0.0), ("BSN", 0.05)], sizes=[20], inputs=FOUR_INPUTS, plan=OFFLINE_PLAN, output_path="results/weight_range.csv", **common),
        "memory": default_mc_config(),
    }
