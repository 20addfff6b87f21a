"""Command-line interface: ``reservoir-bench <subcommand> ...``.

Payloads (JSON or CSV) go to stdout, diagnostics to stderr.  Exit codes:
0 success, 1 usage/config error, 2 I/O or records error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from dataclasses import replace

from . import experiments as ex
from .metrics import MCPlan, memory_capacity
from .readout import TrainingPlan, run_trial
from .reservoir import NeuronKind, NeuronModel, build_topology
from .signals import PRESETS, InvalidSpecError, SignalKind, SignalSpec, generate, get_preset

log = logging.getLogger("reservoir_bench")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _json_default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _clean(obj):
    # JSON has no NaN/inf; report them as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _emit(payload) -> None:
    json.dump(_clean(payload), sys.stdout, indent=2, default=_json_default, allow_nan=False)
    sys.stdout.write("\n")


# -- shared flag groups -----------------------------------------------------------------


def _add_reservoir_flags(p) -> None:
    d = ex.DESK_RESERVOIR
    g = p.add_argument_group("reservoir")
    g.add_argument("--model", default="ASN", help="neuron model: AN, ASN, BN or BSN (default ASN)")
    g.add_argument("--n", type=int, default=20, help="reservoir size N (default 20)")
    g.add_argument("--b", type=float, default=None, help="noise scaling b as a fraction; default 0.05 for ASN/BSN, 0 otherwise")
    g.add_argument("--a", type=float, default=d.a, help=f"leaking rate (default {d.a})")
    g.add_argument("--rho", type=float, default=d.rho_target, help=f"spectral radius target (default {d.rho_target})")
    g.add_argument("--w-in-scale", type=float, default=d.w_in_scale, help=f"input weight scale (default {d.w_in_scale})")
    g.add_argument(
        "--noise-scale",
        type=float,
        default=d.noise_support[1],
        help=f"neuron noise r ~ U[-s, s) before scaling by b (default s={d.noise_support[1]})",
    )
    g.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    g.add_argument("--topology", type=int, default=0, help="topology index (default 0)")
    g.add_argument("--run", type=int, default=0, help="run index within the topology (default 0)")


def _add_signal_flags(p, default_input: str = "clean") -> None:
    g = p.add_argument_group("input signal")
    g.add_argument("--input", default=default_input, help=f"named input preset (default {default_input}); one of {', '.join(sorted(PRESETS))}")
    g.add_argument("--kind", choices=[k.value for k in SignalKind], help="build a custom signal of this kind instead of --input")
    for name, default in (("A", 1.0), ("B", 2.0), ("C", 0.0), ("f1", 0.10), ("f2", 0.02)):
        g.add_argument(f"--{name}", type=float, default=None, help=f"custom signal parameter {name} (default {default})")
    g.add_argument("--harmonics", type=int, default=None, help="odd harmonics in the harmonic kind (default 15)")
    g.add_argument("--dt", type=float, default=None, help="sample spacing in seconds (default 1.0)")


def _signal_spec(args) -> SignalSpec:
    base = get_preset(args.input) if args.kind is None else SignalSpec(SignalKind(args.kind))
    changes = {k: getattr(args, k) for k in ("A", "B", "C", "f1", "f2", "dt") if getattr(args, k) is not None}
    if args.harmonics is not None:
        changes["harmonic_count"] = args.harmonics
    return replace(base, **changes) if changes else base


def _model(args) -> NeuronModel:
    kind = NeuronKind.parse(args.model)
    b = args.b if args.b is not None else (0.05 if kind.stochastic else 0.0)
    return NeuronModel(kind, b)


def _reservoir_config(args):
    params = ex.ReservoirParams(
        a=args.a,
        rho_target=args.rho,
        w_in_scale=args.w_in_scale,
        noise_support=(-args.noise_scale, args.noise_scale),
    )
    return params.config(args.n, _model(args), args.seed, args.topology, args.run)


# -- subcommands -----------------------------------------------------------------------


def cmd_gen_signal(args) -> int:
    spec = _signal_spec(args)
    from .rng import Purpose, derive_stream

    noise = derive_stream(args.seed, 0, 0, Purpose.INPUT_NOISE) if spec.needs_noise else None
    ts = generate(spec, args.length, noise)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "u"])
        for i, u in enumerate(ts.values):
            w.writerow([repr(i * ts.dt), repr(float(u))])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def cmd_run(args) -> int:
    config = _reservoir_config(args)
    spec = _signal_spec(args)
    base = ex.ONLINE_PLAN if args.mode == "online" else ex.OFFLINE_PLAN
    changes = {"mode": args.mode}
    for flag, name in (("washout", "washout_steps"), ("train", "train_steps"), ("test", "test_steps"), ("segments", "online_segments")):
        if getattr(args, flag) is not None:
            changes[name] = getattr(args, flag)
    if args.test is not None and args.segments is None:
        changes["online_segments"] = min(base.online_segments, args.test)
    if args.nmse_convention:
        changes["nmse_convention"] = args.nmse_convention
    plan = replace(base, **changes)
    weights = build_topology(config)
    res = run_trial(config, plan, spec, weights)
    if args.trace:
        res.write_trace(args.trace)
        log.info("wrote trace %s", args.trace)
    if args.save_weights:
        paths = weights.with_readout(res.w_out).save_csv(args.save_weights)
        log.info("wrote %s", ", ".join(paths))
    payload = {
        "model": config.kind.value,
        "N": config.N,
        "b": config.b,
        "input": spec.to_dict(),
        "mode": plan.mode.value,
        "seed": config.seed,
        "topology": config.topology_index,
        "run": config.run_index,
        **res.to_record(),
        "plan": plan.to_dict(),
        "reservoir": {"a": config.a, "rho_target": config.rho_target, "w_in_scale": config.w_in_scale, "noise_support": list(config.noise_support)},
    }
    _emit(payload)
    return EXIT_OK


def _load_sweep_config(args, default_preset: str | None = None) -> ex.SweepConfig:
    if args.config and args.preset:
        raise UsageError("give either --config or --preset, not both")
    if args.config:
        cfg = ex.SweepConfig.load(args.config)
    else:
        name = args.preset or default_preset
        if name is None:
            raise UsageError("a sweep needs --config PATH or --preset NAME")
        all_presets = ex.presets()
        if name not in all_presets:
            raise UsageError(f"unknown preset {name!r}; choose from {', '.join(all_presets)}")
        cfg = all_presets[name]
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.output:
        changes["output_path"] = args.output
    if args.runs is not None:
        changes["runs_per_topology"] = args.runs
    if args.topologies is not None:
        changes["topologies"] = args.topologies
    return replace(cfg, **changes) if changes else cfg


def _sweep_common(args, cfg: ex.SweepConfig) -> int:
    if args.dump_config:
        _emit(cfg.to_dict())
        return EXIT_OK
    rows = ex.run_sweep(cfg, jobs=args.jobs, stop_after=args.max_tasks)
    complete = len(rows) == cfg.expected_rows
    payload = {
        "name": cfg.name,
        "complete": complete,
        "rows": len(rows),
        "expected_rows": cfg.expected_rows,
        "output": cfg.output_path if complete else None,
    }
    if complete:
        payload["summary"] = str(ex._summary_path(ex.Path(cfg.output_path)))
        if args.report:
            payload["report"] = ex.report(cfg.output_path, args.report_dir, figures=not args.no_figures)
    _emit(payload)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.list_presets:
        _emit({k: {"task": v.task, "rows": v.expected_rows, "output_path": v.output_path} for k, v in ex.presets().items()})
        return EXIT_OK
    return _sweep_common(args, _load_sweep_config(args))


def cmd_mc(args) -> int:
    if args.model is not None:
        if args.config or args.preset:
            raise UsageError("--model selects a single-cell MC probe; drop --config/--preset")
        args.run = args.topology_run
        if args.seed is None:
            args.seed = 0
        config = _reservoir_config(args)
        spec = _signal_spec(args)
        plan = MCPlan()
        weights = build_topology(config)
        u = generate(spec, plan.input_length, config.input_stream() if spec.needs_noise else None)
        res = memory_capacity(config, weights, plan, u, args.k_max, config.noise_stream() if config.noisy else None)
        _emit({"model": config.kind.value, "N": config.N, "b": config.b, "seed": config.seed, **res.to_dict()})
        return EXIT_OK
    cfg = _load_sweep_config(args, default_preset="memory")
    if cfg.task != "mc":
        cfg = replace(cfg, task="mc")
    return _sweep_common(args, cfg)


def cmd_report(args) -> int:
    written = ex.report(args.records, args.out, figures=not args.no_figures, bins=args.bins)
    _emit(written)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------------


def _add_sweep_flags(p) -> None:
    p.add_argument("--config", help="sweep config JSON file")
    p.add_argument("--preset", help="named preset sweep (see `sweep --list-presets`)")
    p.add_argument("--output", help="override the config's output CSV path")
    p.add_argument("--seed", type=int, default=None, help="override the config's base seed")
    p.add_argument("--runs", type=int, default=None, help="override runs per topology")
    p.add_argument("--topologies", type=int, default=None, help="override the number of topologies")
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: $RESERVOIR_BENCH_JOBS or 1)")
    p.add_argument("--max-tasks", type=int, default=None, help="stop after this many new (cell, topology) tasks; rerun to resume")
    p.add_argument("--report", action="store_true", help="also write report tables and figures when the sweep completes")
    p.add_argument("--report-dir", default=None, help="report directory (default <output stem>_report)")
    p.add_argument("--no-figures", action="store_true", help="skip PNG figures in the report")
    p.add_argument("--dump-config", action="store_true", help="print the resolved config JSON and exit")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reservoir-bench", description="Echo-state network neuron-model benchmark toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-signal", help="write an input signal as CSV (t, u)")
    _add_signal_flags(p)
    p.add_argument("--length", type=int, default=500, help="number of samples (default 500)")
    p.add_argument("--seed", type=int, default=0, help="seed for the distortion noise (default 0)")
    p.add_argument("--output", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_gen_signal)

    p = sub.add_parser("run", help="one train + test cycle, JSON result on stdout")
    _add_reservoir_flags(p)
    _add_signal_flags(p)
    p.add_argument("--mode", choices=["offline", "online"], default="offline", help="readout training mode (default offline)")
    p.add_argument("--washout", type=int, default=None, help="washout steps")
    p.add_argument("--train", type=int, default=None, help="teacher-forced training steps")
    p.add_argument("--test", type=int, default=None, help="free-running test steps")
    p.add_argument("--segments", type=int, default=None, help="online update segments (default 40)")
    p.add_argument("--nmse-convention", choices=["range", "squared_range"], default=None, help="NMSE normaliser: target range or its square")
    p.add_argument("--trace", help="write the test-phase target/prediction trace to this CSV")
    p.add_argument("--save-weights", metavar="PREFIX", help="write W_in, W_s and W_out as PREFIX_<name>.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a sweep config or preset, writing CSV + JSON summary")
    _add_sweep_flags(p)
    p.add_argument("--list-presets", action="store_true", help="list preset sweeps and exit")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mc", help="memory capacity: the default grid, a config, or one cell with --model")
    _add_sweep_flags(p)
    g = p.add_argument_group("single-cell probe")
    g.add_argument("--model", default=None, help="probe one reservoir instead of a sweep: AN, ASN, BN or BSN")
    g.add_argument("--n", type=int, default=50, help="reservoir size (default 50)")
    g.add_argument("--b", type=float, default=None, help="noise scaling (default 0.05 for stochastic models)")
    d = ex.MC_RESERVOIR
    g.add_argument("--a", type=float, default=d.a, help=f"leaking rate (default {d.a})")
    g.add_argument("--rho", type=float, default=d.rho_target, help=f"spectral radius target (default {d.rho_target})")
    g.add_argument("--w-in-scale", type=float, default=d.w_in_scale, help=f"input weight scale (default {d.w_in_scale})")
    g.add_argument("--noise-scale", type=float, default=d.noise_support[1], help=f"neuron noise half-width (default {d.noise_support[1]})")
    g.add_argument("--topology", type=int, default=0, help="topology index (default 0)")
    g.add_argument("--topology-run", type=int, default=0, help="run index (default 0)")
    g.add_argument("--k-max", type=int, default=50, help="largest delay (default 50)")
    _add_signal_flags(g, default_input="distorted")
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("report", help="summary tables, plot data and figures from a sweep CSV")
    p.add_argument("records", help="sweep CSV")
    p.add_argument("--out", default=None, help="output directory (default <records stem>_report)")
    p.add_argument("--bins", type=int, default=50, help="histogram bins (default 50)")
    p.add_argument("--no-figures", action="store_true", help="write tables only")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    try:
        return args.func(args)
    except (OSError, ex.RecordsError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ex.ConfigError, InvalidSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # pragma: no cover - last resort
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
