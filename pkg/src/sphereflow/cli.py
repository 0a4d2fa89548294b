"""Command-line front end.

Subcommands: ``flow``, ``sweep``, ``spectrum``, ``verify``, ``ainv``.
Reports are JSON, traces and curves CSV; reductions run in a fixed order,
so identical configuration and seed give byte-identical reports for any
worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .curves import DiscreteCurve
from .errors import ParameterError
from .flow import COLLAPSED, CONVERGED, EXHAUSTED, FlowParams, evolve
from .geodesics import simple_spectrum, verify_cover, verify_zoll
from .metrics import MetricSpec, parse_metric
from .sweepout import SweepoutGrid, estimate_ls_values, sweep_report
from .topology import a_invariant, load_loop


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run configuration for the subcommands."""

    metric: MetricSpec
    grid: SweepoutGrid
    flow: FlowParams
    delta_len: float = 1e-2
    out: Path = Path(".")
    workers: int = 1
    seed: int = 0

    @classmethod
    def load(cls, args) -> "RunConfig":
        data: dict = {}
        if args.config:
            data = json.loads(Path(args.config).read_text())
        metric_source = args.metric or data.get("metric")
        if metric_source is None:
            raise ParameterError("no metric given (use --metric or config)")
        metric = parse_metric(metric_source)
        grid = SweepoutGrid(**data.get("grid", {}))
        flow_params = FlowParams(**data.get("flow", {}))
        workers = args.workers or data.get("workers") or os.cpu_count() or 1
        seed = args.seed if args.seed is not None else int(data.get("seed", 0))
        out = Path(args.out or data.get("out", "."))
        return cls(
            metric=metric,
            grid=grid,
            flow=flow_params,
            delta_len=float(data.get("delta_len", 1e-2)),
            out=out,
            workers=int(workers),
            seed=seed,
        )


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def cmd_flow(config: RunConfig, curve_path: str) -> int:
    curve = DiscreteCurve.from_csv(curve_path)
    outcome = evolve(curve, config.metric, config.flow)
    config.out.mkdir(parents=True, exist_ok=True)
    trace_path = config.out / "trace.csv"
    outcome.trace.to_csv(trace_path)
    final_path = None
    if outcome.curve is not None:
        final_path = str(config.out / "final_curve.csv")
        outcome.curve.to_csv(final_path)
    _write_json(config.out / "outcome.json", outcome.to_json_dict(final_path))
    print(f"{outcome.status} limit_length={outcome.limit_length} t={outcome.stop_time:.4f}")
    return 0 if outcome.status in (COLLAPSED, CONVERGED) else 2


def _run_sweep(config: RunConfig):
    est = estimate_ls_values(
        config.metric, config.grid, config.flow, workers=config.workers
    )
    report = sweep_report(config.metric, config.grid, est)
    return est, report


def cmd_sweep(config: RunConfig) -> int:
    est, report = _run_sweep(config)
    _write_json(config.out / "sweep.json", report)
    print(
        "estimates l1=%.6f l2=%.6f l3=%.6f (%d members)"
        % (est.l1, est.l2, est.l3, len(est.records))
    )
    for w in est.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 2 if (est.unreliable or est.warnings) else 0


def cmd_spectrum(config: RunConfig) -> int:
    est, sweep = _run_sweep(config)
    report = simple_spectrum(config.metric, est.converged, config.delta_len)
    config.out.mkdir(parents=True, exist_ok=True)
    paths = {}
    for i, entry in enumerate(report.entries):
        rel = f"spectrum_rep_{i}.csv"
        entry.representative.to_csv(config.out / rel)
        paths[id(entry)] = rel
    payload = report.to_json_dict(config.metric, paths)
    payload["sweep"] = sweep["estimates"]
    _write_json(config.out / "spectrum.json", payload)
    print("sigma_s =", [round(x, 6) for x in report.sigma_s])
    flagged = any(not e.validated for e in report.entries)
    return 2 if flagged else 0


def cmd_verify(config: RunConfig, theorem: str) -> int:
    est, _ = _run_sweep(config)
    spectrum = simple_spectrum(config.metric, est.converged, config.delta_len)
    sigma = spectrum.sigma_s
    if theorem == "zoll":
        verdict = verify_zoll(config.metric, sigma, seed=config.seed)
    else:
        verdict = verify_cover(config.metric, sigma, seed=config.seed)
    _write_json(config.out / f"verify_{theorem}.json", verdict)
    if theorem == "cover" and not verdict["hypothesis_met"]:
        print("hypothesis not met: spectrum has >2 values", file=sys.stderr)
        return 3
    print(f"verify {theorem}: {'pass' if verdict['passed'] else 'fail'}")
    return 0 if verdict["passed"] else 1


def cmd_ainv(loop_manifest: str, out: Path | None) -> int:
    loop = load_loop(loop_manifest)
    bit = a_invariant(loop)
    log = {
        "manifest": str(loop_manifest),
        "n_curves": len(loop.curves),
        "delta_loop": loop.delta_loop,
        "a_invariant": bit,
    }
    if out is not None:
        _write_json(Path(out) / "ainv.json", log)
    print(bit)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sphereflow",
        description="Curve shortening, sweepouts, and simple closed geodesics "
        "on metric 2-spheres.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--metric", help="metric JSON file")
        p.add_argument("--config", help="run configuration JSON file")
        p.add_argument("--out", help="output directory", default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)

    p_flow = sub.add_parser("flow", help="evolve one curve from CSV")
    common(p_flow)
    p_flow.add_argument("--curve", required=True, help="curve CSV (index,x,y,z)")

    p_sweep = sub.add_parser("sweep", help="flow the plane-section family")
    common(p_sweep)

    p_spec = sub.add_parser("spectrum", help="simple length spectrum from a sweep")
    common(p_spec)

    p_verify = sub.add_parser("verify", help="theorem-level numerical verdicts")
    common(p_verify)
    p_verify.add_argument("theorem", choices=["zoll", "cover"])

    p_ainv = sub.add_parser("ainv", help="Z2 invariant of a loop manifest")
    p_ainv.add_argument("--loop", required=True, help="loop manifest JSON")
    p_ainv.add_argument("--out", default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ainv":
            return cmd_ainv(args.loop, Path(args.out) if args.out else None)
        config = RunConfig.load(args)
        if args.command == "flow":
            return cmd_flow(config, args.curve)
        if args.command == "sweep":
            return cmd_sweep(config)
        if args.command == "spectrum":
            return cmd_spectrum(config)
        if args.command == "verify":
            return cmd_verify(config, args.theorem)
        parser.error(f"unknown command {args.command}")
    except Exception as exc:  # surface a diagnostic, keep the exit contract
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
