"""Batch command-line interface.

Subcommands: simulate, analyze, jstat, optimize, threshold, feasibility.
Structured reports are JSON (stdout or --out); event and per-block tables are
CSV; figures are rendered next to the delimited output.  Exit codes: 0 on
success, 2 for invalid input or configuration, 1 for internal errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import Config
from .counting import counts_to_json_dict, eberhard_j_reduced, normalized_j, read_counts_json
from .errors import (
    InconsistentCountsError,
    InvalidStreamError,
    ParameterError,
    ThresholdBracketError,
)
from .events import accumulate_counts, blocked_counts, read_events_dir, simulate_run, write_events_dir
from .figures import save_block_j_figure, save_threshold_curve_figure
from .model import SourceParams
from .optimize import OptimizationProblem, critical_efficiency, optimize
from .qkd import feasibility
from .significance import blocked_significance, blocks_from_counts, write_block_csv

MANIFEST_NAME = "manifest.json"

_USER_ERRORS = (
    ParameterError,
    InconsistentCountsError,
    InvalidStreamError,
    ThresholdBracketError,
    FileNotFoundError,
    json.JSONDecodeError,
)


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
        print(f"wrote {out}", file=sys.stderr)
    else:
        print(text)


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = Config.from_file(args.config) if args.config else Config()
    out_dir = Path(args.out)
    streams = simulate_run(config.run_config())
    write_events_dir(streams, out_dir)
    manifest = {"version": __version__, "config": config.to_dict()}
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    print(f"wrote 8 event files and {MANIFEST_NAME} to {out_dir}", file=sys.stderr)
    return 0


def _load_manifest(events_dir: Path) -> dict:
    path = events_dir / MANIFEST_NAME
    if not path.exists():
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh).get("config", {})


def _cmd_analyze(args: argparse.Namespace) -> int:
    events_dir = Path(args.events)
    manifest = _load_manifest(events_dir)
    duration_s = args.duration_s if args.duration_s is not None else manifest.get("duration_s")
    window_ns = args.window_ns if args.window_ns is not None else manifest.get("window_ns", 1000)
    duration_ns = None if duration_s is None else int(round(duration_s * 1e9))
    if duration_ns is None:
        print("no duration available; inferring from the latest timestamp", file=sys.stderr)

    streams = read_events_dir(events_dir, duration_ns)
    counts = accumulate_counts(streams, window_ns)
    j_total = eberhard_j_reduced(counts)
    per_block = blocked_counts(streams, window_ns, args.blocks)
    series = blocks_from_counts(per_block)
    significance = blocked_significance(series).to_json_dict() if args.blocks >= 2 else None

    base = Path(args.out).with_suffix("") if args.out else events_dir / "analysis"
    blocks_csv = base.parent / (base.name + "_blocks.csv")
    figure = base.parent / (base.name + "_blocks.svg")
    write_block_csv(per_block, blocks_csv)
    save_block_j_figure(series.j_values, figure, series.block_duration_s)

    report = {
        "window_ns": window_ns,
        "blocks": args.blocks,
        "duration_s": counts.duration_s,
        "reduced_counts": counts_to_json_dict(counts),
        "j": j_total,
        "significance": significance,
        "blocks_csv": str(blocks_csv),
        "figure": str(figure),
    }
    _emit(report, args.out)
    return 0


def _cmd_jstat(args: argparse.Namespace) -> int:
    counts_file = read_counts_json(args.counts)
    j = eberhard_j_reduced(counts_file.reduced)
    print(f"J = {j}")
    if counts_file.n_per_setting is not None:
        print(f"J/N = {normalized_j(j, counts_file.n_per_setting)!r}")
    return 0


def _problem_from_args(args: argparse.Namespace) -> OptimizationProblem:
    return OptimizationProblem(
        eta_a=args.eta_a,
        eta_b=args.eta_b,
        background_a=args.background_a,
        background_b=args.background_b,
        visibility=args.visibility,
        noise_model=args.noise_model,
        fix_r=args.fix_r,
        multistart_count=args.multistarts,
        seed=args.seed,
    )


def _cmd_optimize(args: argparse.Namespace) -> int:
    result = optimize(_problem_from_args(args))
    _emit(result.to_json_dict(), args.out)
    return 0


def _cmd_threshold(args: argparse.Namespace) -> int:
    threshold = critical_efficiency(
        background=args.background,
        visibility=args.visibility,
        fix_r=args.fix_r,
        tolerance=args.tolerance,
        seed=args.seed,
    )
    report = {
        "critical_efficiency": threshold,
        "visibility": args.visibility,
        "background_per_pair": args.background,
        "fix_r": args.fix_r,
        "tolerance": args.tolerance,
    }
    if args.curve_out:
        etas, jns = [], []
        eta = max(threshold - 2 * args.tolerance, 0.02)
        while eta <= 1.0:
            problem = OptimizationProblem(
                eta_a=eta,
                eta_b=eta,
                background_a=args.background,
                background_b=args.background,
                visibility=args.visibility,
                fix_r=args.fix_r,
                multistart_count=3,
                seed=args.seed,
            )
            etas.append(eta)
            jns.append(optimize(problem).jn_star)
            eta += max((1.0 - threshold) / 8, 0.02)
        save_threshold_curve_figure(etas, jns, threshold, args.curve_out)
        report["curve"] = {"eta": etas, "jn": jns, "figure": args.curve_out}
    _emit(report, args.out)
    return 0


def _cmd_feasibility(args: argparse.Namespace) -> int:
    source = None
    if args.r is not None:
        source = SourceParams(args.r, args.visibility, args.noise_model)
    report = feasibility(args.eta_a, args.eta_b, source)
    _emit(report.to_json_dict(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eberhard",
        description="Simulate, analyze, and optimize fair-sampling-free Bell tests.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate event streams for one run")
    p.add_argument("--config", help="JSON config file (defaults used for missing keys)")
    p.add_argument("--out", required=True, help="output directory for event CSVs and manifest")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("analyze", help="count, block, and test a directory of event files")
    p.add_argument("--events", required=True, help="directory holding the 8 event CSVs")
    p.add_argument("--window-ns", type=int, default=None, help="coincidence window (default: manifest or 1000)")
    p.add_argument("--blocks", type=int, default=30, help="number of time blocks (default 30)")
    p.add_argument("--duration-s", type=float, default=None, help="run duration per setting if no manifest")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("jstat", help="print J (and J/N) for a counts file")
    p.add_argument("--counts", required=True, help="JSON counts file")
    p.set_defaults(func=_cmd_jstat)

    p = sub.add_parser("optimize", help="find the best state and settings for given efficiencies")
    p.add_argument("--eta-a", type=float, required=True)
    p.add_argument("--eta-b", type=float, required=True)
    p.add_argument("--visibility", type=float, default=1.0)
    p.add_argument("--background-a", type=float, default=0.0, help="background counts per produced pair")
    p.add_argument("--background-b", type=float, default=0.0)
    p.add_argument("--noise-model", default="coherence-damping", choices=["coherence-damping", "white-noise"])
    p.add_argument("--fix-r", type=float, default=None)
    p.add_argument("--multistarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("threshold", help="critical symmetric arm efficiency by bisection")
    p.add_argument("--visibility", type=float, default=1.0)
    p.add_argument("--background", type=float, default=0.0, help="background counts per produced pair, each arm")
    p.add_argument("--fix-r", type=float, default=None)
    p.add_argument("--tolerance", type=float, default=0.002)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--curve-out", help="also render the optimized J/N vs efficiency curve here")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("feasibility", help="check efficiencies against DI-QKD thresholds")
    p.add_argument("--eta-a", type=float, required=True)
    p.add_argument("--eta-b", type=float, required=True)
    p.add_argument("--r", type=float, default=None, help="state parameter; adds model basis visibilities")
    p.add_argument("--visibility", type=float, default=1.0)
    p.add_argument("--noise-model", default="coherence-damping", choices=["coherence-damping", "white-noise"])
    p.add_argument("--out")
    p.set_defaults(func=_cmd_feasibility)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
