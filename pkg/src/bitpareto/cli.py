"""Batch front end.

    bitpareto validate  CONFIG
    bitpareto enumerate CONFIG
    bitpareto front     CONFIG
    bitpareto scalarize CONFIG --weights 0.2,0.3,0.5 [--continuous]
    bitpareto sweep     CONFIG [--continuous]
    bitpareto check     CONFIG
    bitpareto compare   CONFIG
    bitpareto demo      --fixture NAME

Exit codes: 0 ok, 1 input/validation error, 2 a requested check failed,
3 config parse error.  Errors go to stderr as ``error[ClassName]: message``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import export
from .conditions import check_all, check_minkowski_convexity, compare_s0_vs_weak_pareto
from .config import FIXTURES, ExperimentConfig, load_fixture, parse_config
from .distortion import LayeredExponentialModel
from .errors import BitParetoError
from .pareto import enumerate_grid, filter_front
from .scalarize import WeightVector, scalarize_continuous, scalarize_discrete, sweep_s0

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CHECK = 2
EXIT_PARSE = 3


class _Run:
    """Per-invocation state: config, output directory, lazily computed artifacts."""

    def __init__(self, cfg: ExperimentConfig, args):
        self.cfg = cfg
        self.args = args
        self.out = Path(args.out) if args.out else cfg.output_directory
        self.peak = args.psnr_peak
        self._cloud = None
        self._front = None
        self._s0 = None

    def wants(self, fmt: str) -> bool:
        return fmt in self.cfg.formats

    def path(self, suffix: str) -> Path:
        return self.out / f"{self.cfg.name}.{suffix}"

    def meta(self) -> dict:
        return {"config": self.cfg.to_dict()}

    @property
    def cloud(self):
        if self._cloud is None:
            c = self.cfg
            self._cloud = enumerate_grid(c.model, c.dag, c.budget, c.grid_step)
        return self._cloud

    @property
    def front(self):
        if self._front is None:
            self._front = filter_front(self.cloud, self.cfg.tolerances.dominance_eps)
        return self._front

    def s0(self, continuous: bool = False):
        if self._s0 is None:
            c = self.cfg
            if continuous:
                self._s0 = sweep_s0(c.model, c.weight_resolution, c.dag, c.budget)
            else:
                self._s0 = sweep_s0(self.cloud, c.weight_resolution, tie_tol=c.tolerances.tie)
        return self._s0


def _dag_report(cfg: ExperimentConfig) -> dict:
    dag = cfg.dag
    subgraphs = []
    for i in range(dag.node_count):
        sub = dag.subgraph(i)
        entry = {"resolution": i, "members": list(sub.members), "parents": sorted(sub.parent_set)}
        if cfg.labels:
            entry["label"] = cfg.labels[i]
        subgraphs.append(entry)
    return {
        "name": cfg.name,
        "node_count": dag.node_count,
        "arcs": [list(a) for a in dag.arcs],
        "topological_order": list(dag.topological_order),
        "subgraphs": subgraphs,
        "valid": True,
    }


def cmd_validate(run: _Run) -> int:
    report = _dag_report(run.cfg)
    for sub in report["subgraphs"]:
        label = f" ({sub['label']})" if "label" in sub else ""
        print(f"pi_{sub['resolution']}{label}: {{{', '.join(map(str, sub['members']))}}}")
    if run.wants("json"):
        export.write_json(report, run.path("validate.json"))
    print(f"valid: {report['node_count']} nodes, {len(report['arcs'])} arcs")
    return EXIT_OK


def cmd_enumerate(run: _Run) -> int:
    cloud = run.cloud
    n = cloud.dimension
    if run.wants("csv"):
        rows = [[export._fmt(x) for x in (*a, *d)] for a, d in cloud]
        header = [f"b_{i}" for i in range(n)] + [f"g_{i}" for i in range(n)]
        export.atomic_write(run.path("cloud.csv"), export._csv_text(header, rows))
    print(f"enumerated {len(cloud)} grid points at step {run.cfg.grid_step}")
    return EXIT_OK


def _write_front(run: _Run) -> None:
    front = run.front
    if run.wants("csv"):
        export.write_front_csv(front, run.path("front.csv"), run.peak)
    if run.wants("json"):
        export.write_front_json(front, run.path("front.json"), run.meta())


def cmd_front(run: _Run) -> int:
    _write_front(run)
    counts = run.front.counts()
    print(" ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def _parse_weights(text: str, n: int) -> WeightVector:
    try:
        raw = [float(x) for x in text.split(",")]
    except ValueError:
        raise BitParetoError(f"--weights: cannot parse {text!r}") from None
    if len(raw) != n:
        raise BitParetoError(f"--weights: expected {n} values, got {len(raw)}")
    try:
        return WeightVector.normalized(raw)
    except ValueError as exc:
        raise BitParetoError(f"--weights: {exc}") from None


def cmd_scalarize(run: _Run) -> int:
    cfg = run.cfg
    weight = _parse_weights(run.args.weights, cfg.node_count)
    if run.args.continuous:
        result = scalarize_continuous(weight, cfg.model, cfg.dag, cfg.budget)
    else:
        result = scalarize_discrete(weight, run.cloud, cfg.tolerances.tie)
    data = export.result_json(result)
    if run.wants("json"):
        export.write_json({**data, "metadata": run.meta()}, run.path("scalarize.json"))
    print(export.json_text(data), end="")
    return EXIT_OK


def _write_sweep(run: _Run, s0) -> None:
    if run.wants("csv"):
        export.write_sweep_csv(s0.entries, run.path("sweep.csv"), run.peak)
    if run.wants("json"):
        export.write_sweep_json(s0, run.path("sweep.json"), run.meta())


def cmd_sweep(run: _Run) -> int:
    s0 = run.s0(run.args.continuous)
    _write_sweep(run, s0)
    if run.wants("plotdata") and not run.args.continuous:
        export.write_plotdata(run.front, s0, run.out, run.cfg.name)
    print(f"{len(s0.entries)} weights, {len(s0.distinct_distortions)} distinct S0 points")
    return EXIT_OK


def _checks(run: _Run) -> list:
    cfg = run.cfg
    return check_all(
        cfg.model, cfg.dag, run.front, cfg.budget,
        envelope_tol=cfg.tolerances.envelope,
        continuity_factor=cfg.tolerances.continuity_factor,
        support_tol=cfg.tolerances.support,
    )


def cmd_check(run: _Run) -> int:
    reports = _checks(run)
    if run.wants("json"):
        export.write_json({"reports": [r.to_dict() for r in reports]}, run.path("check.json"))
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check_name} ({len(r.witnesses)} witnesses)")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK


def _coverage(run: _Run):
    return compare_s0_vs_weak_pareto(run.s0(), run.front, run.cfg.tolerances.match)


def cmd_compare(run: _Run) -> int:
    report = _coverage(run)
    if run.wants("json"):
        export.write_json(report.to_dict(), run.path("compare.json"))
    print(f"coverage {report.covered_count}/{report.weak_pareto_count}"
          f" (match tol {report.match_tolerance:g})")
    for p in report.missed:
        print(f"missed {json.dumps([float(x) for x in p])}")
    return EXIT_OK if report.complete else EXIT_CHECK


def cmd_demo(run: _Run) -> int:
    cmd_validate(run)
    _write_front(run)
    s0 = run.s0()
    _write_sweep(run, s0)
    if run.wants("plotdata"):
        export.write_plotdata(run.front, s0, run.out, run.cfg.name)
    coverage = _coverage(run)
    reports = _checks(run)
    summary = {
        "counts": run.front.counts(),
        "coverage": coverage.to_dict(),
        "reports": [r.to_dict() for r in reports],
    }
    if run.wants("json"):
        export.write_json(summary, run.path("demo.json"))
    print(" ".join(f"{k}={v}" for k, v in summary["counts"].items()))
    print(f"coverage {coverage.covered_count}/{coverage.weak_pareto_count}")
    for p in coverage.missed:
        print(f"missed {json.dumps([float(x) for x in p])}")
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.check_name} ({len(r.witnesses)} witnesses)")
    ok = coverage.complete and all(r.passed for r in reports)
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "validate": cmd_validate,
    "enumerate": cmd_enumerate,
    "front": cmd_front,
    "scalarize": cmd_scalarize,
    "sweep": cmd_sweep,
    "check": cmd_check,
    "compare": cmd_compare,
    "demo": cmd_demo,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--psnr-peak", type=float, default=None, metavar="PEAK",
                        help="add psnr_i = 10 log10(PEAK^2 / g_i) columns to CSV output")
    common.add_argument("--seed", type=int, default=None, help="reserved; nothing is random")

    parser = argparse.ArgumentParser(prog="bitpareto", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "demo":
            p.add_argument("--fixture", required=True, choices=FIXTURES)
        else:
            p.add_argument("config", help="experiment config (JSON)")
        if name == "scalarize":
            p.add_argument("--weights", required=True, help="comma-separated, normalized if needed")
        if name in ("scalarize", "sweep"):
            p.add_argument("--continuous", action="store_true",
                           help="solve the continuous problem (layered-exponential models only)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "demo":
            cfg = load_fixture(args.fixture)
        else:
            cfg = parse_config(args.config)
        if getattr(args, "continuous", False) and not isinstance(cfg.model, LayeredExponentialModel):
            raise BitParetoError("--continuous needs a layered-exponential model")
        return COMMANDS[args.command](_Run(cfg, args))
    except BitParetoError as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, KeyError, OSError) as exc:
        print(f"error[{type(exc).__name__}]: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
