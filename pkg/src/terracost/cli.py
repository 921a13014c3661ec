"""Command-line front end: config ingestion, solver orchestration, emission.

Subcommands:

* ``solve``    - run the configured solver, write trajectory CSV, report
  JSON, and plot data.
* ``verify``   - exhaustively enumerate a small grid and report the gap
  between the forward sweep and the true discrete minimum.
* ``schedule`` - print the coupled refinement table (tau_k, delta_k).
* ``bench``    - run the sweep across halving levels and print evaluation
  counts, for complexity-scaling checks.

Exit codes: 0 success, 1 configuration error, 2 solver error, 3 I/O error.

Config files are JSON; see the README for the schema.  Every field is
either an inline expression or a heightmap file path (relative paths are
resolved against the config file's directory).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dp, localsearch, oracle, ritz
from .cost import CostMode, CostModel, path_cost_profile
from .expr import ExprSyntaxError
from .terrain import (
    ScalarField2D,
    field_from_expression,
    field_from_heightmap,
    load_heightmap,
)

__all__ = ["ConfigError", "RunConfig", "load_config", "main"]

_METHODS = ("dp", "local", "ritz")
_MODES = {"full3d": CostMode.FULL_3D, "flat2d": CostMode.FLAT_2D}


class ConfigError(Exception):
    """Invalid or unreadable run configuration."""


@dataclass
class FieldConfig:
    expression: str | None = None
    heightmap: str | None = None


@dataclass
class ProblemConfig:
    l: float
    y_l: float
    corridor: tuple[float, float]
    mode: str


@dataclass
class SolverConfig:
    method: str = "dp"
    tau: float | None = None
    gamma: float = 1.0
    epsilon: float = 0.5
    m: int = 1
    K: int = 10
    q: int = 16
    M: int = 512
    budget: int = 50000
    max_iter: int | None = None
    refine_levels: int = 0


@dataclass
class OutputConfig:
    trajectory_csv: str = "trajectory.csv"
    report_json: str = "report.json"
    plot_data: str = "plot.dat"


@dataclass
class RunConfig:
    problem: ProblemConfig
    fields: dict[str, FieldConfig]
    solver: SolverConfig
    output: OutputConfig
    gap_threshold: float | None = None
    base_dir: Path = field(default_factory=Path)
    warnings: list[str] = field(default_factory=list)


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"missing required field '{key}' in {where}")
    return mapping[key]


def _field_config(raw, name: str) -> FieldConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"field '{name}' must be an object")
    expression = raw.get("expression")
    heightmap = raw.get("heightmap")
    if (expression is None) == (heightmap is None):
        raise ConfigError(
            f"field '{name}' needs exactly one of 'expression' or 'heightmap'"
        )
    unknown = set(raw) - {"expression", "heightmap"}
    if unknown:
        raise ConfigError(f"field '{name}' has unknown keys {sorted(unknown)}")
    return FieldConfig(expression=expression, heightmap=heightmap)


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run configuration file.

    Defaults: q = 16, gamma = 1, epsilon = 0.5, m = 1, K = 10, M = 512;
    the corridor defaults to the endpoint bounding interval widened by 50%
    per side.  epsilon = 0 is accepted but flagged with a warning, since
    refinement convergence is then not guaranteed.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")

    problem_raw = _require(raw, "problem", "config")
    l = float(_require(problem_raw, "l", "problem"))
    y_l = float(_require(problem_raw, "y_l", "problem"))

    fields_raw = _require(raw, "fields", "config")
    fields = {}
    for name in ("alpha", "beta"):
        fields[name] = _field_config(_require(fields_raw, name, "fields"), name)
    for name in ("phi", "mask"):
        if name in fields_raw:
            fields[name] = _field_config(fields_raw[name], name)

    mode = problem_raw.get("mode")
    if mode is None:
        mode = "full3d" if "phi" in fields else "flat2d"
    if mode not in _MODES:
        raise ConfigError(f"problem.mode must be one of {sorted(_MODES)}, got {mode!r}")
    if mode == "full3d" and "phi" not in fields:
        raise ConfigError("problem.mode 'full3d' requires a 'phi' field")

    corridor_raw = problem_raw.get("corridor")
    if corridor_raw is None:
        corridor = dp.default_corridor(l, y_l)
    else:
        if not (isinstance(corridor_raw, list) and len(corridor_raw) == 2):
            raise ConfigError("problem.corridor must be [y_lo, y_hi]")
        corridor = (float(corridor_raw[0]), float(corridor_raw[1]))
    problem = ProblemConfig(l=l, y_l=y_l, corridor=corridor, mode=mode)

    solver_raw = raw.get("solver", {})
    solver = SolverConfig()
    for key, value in solver_raw.items():
        if not hasattr(solver, key):
            raise ConfigError(f"unknown solver option '{key}'")
        setattr(solver, key, value)
    if solver.method not in _METHODS:
        raise ConfigError(f"solver.method must be one of {_METHODS}, got {solver.method!r}")
    if solver.tau is not None:
        solver.tau = float(solver.tau)
    if solver.method in ("dp", "local"):
        if solver.gamma <= 0:
            raise ConfigError(f"solver.gamma must be positive, got {solver.gamma}")
        if solver.epsilon < 0:
            raise ConfigError(f"solver.epsilon must be >= 0, got {solver.epsilon}")

    output = OutputConfig()
    for key, value in raw.get("output", {}).items():
        if not hasattr(output, key):
            raise ConfigError(f"unknown output option '{key}'")
        setattr(output, key, str(value))

    gap_threshold = None
    if "verify" in raw:
        gap_threshold = raw["verify"].get("gap_threshold")
        if gap_threshold is not None:
            gap_threshold = float(gap_threshold)

    config = RunConfig(
        problem=problem,
        fields=fields,
        solver=solver,
        output=output,
        gap_threshold=gap_threshold,
        base_dir=path.parent,
    )
    if solver.method in ("dp", "local") and solver.epsilon == 0:
        config.warnings.append(
            "epsilon = 0: delta shrinks only proportionally to tau; refinement "
            "convergence is not guaranteed"
        )
    return config


# ---------------------------------------------------------------------------
# realization: config -> fields/model/spec


def _build_field(config: RunConfig, name: str) -> ScalarField2D:
    fc = config.fields[name]
    if fc.expression is not None:
        try:
            return field_from_expression(fc.expression)
        except ExprSyntaxError as exc:
            raise ConfigError(f"field '{name}': {exc}") from exc
    hm_path = Path(fc.heightmap)
    if not hm_path.is_absolute():
        hm_path = config.base_dir / hm_path
    if not hm_path.exists():
        raise ConfigError(f"field '{name}': heightmap file not found: {hm_path}")
    try:
        return field_from_heightmap(load_heightmap(hm_path))
    except ValueError as exc:
        raise ConfigError(f"field '{name}': {exc}") from exc


def realize(config: RunConfig) -> dp.ProblemSpec:
    """Instantiate fields, cost model, and problem from a validated config."""
    alpha = _build_field(config, "alpha")
    beta = _build_field(config, "beta")
    phi = _build_field(config, "phi") if "phi" in config.fields else None
    mask = _build_field(config, "mask") if "mask" in config.fields else None
    model = CostModel(
        alpha=alpha,
        beta=beta,
        phi=phi,
        mode=_MODES[config.problem.mode],
        quadrature_subdivisions=int(config.solver.q),
    )
    try:
        return dp.ProblemSpec(
            l=config.problem.l,
            y_l=config.problem.y_l,
            corridor=config.problem.corridor,
            model=model,
            mask=mask,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# solving and emission


def _grid_for(config: RunConfig, spec: dp.ProblemSpec) -> dp.StageGrid:
    s = config.solver
    if s.tau is None:
        raise ConfigError(f"solver.method '{s.method}' requires solver.tau")
    delta = s.gamma * s.tau ** (1.0 + s.epsilon)
    return dp.build_grid(spec, s.tau, delta)


def _solve(config: RunConfig, spec: dp.ProblemSpec, threads: int):
    """Dispatch on solver.method; returns (trajectory, report dict)."""
    s = config.solver
    report: dict = {"method": s.method, "iterations": None}
    if s.method == "ritz":
        t0 = time.perf_counter()
        result = ritz.minimize(
            spec.model,
            spec.l,
            spec.y_l,
            basis_size=int(s.K),
            mesh_points=int(s.M),
            budget=int(s.budget),
        )
        wall = time.perf_counter() - t0
        xs = np.linspace(0.0, spec.l, int(s.M))
        ys, _ = ritz.candidate_eval(result.candidate, xs)
        zs = dp._heights(spec.model, xs, ys)
        cost, _, _ = path_cost_profile(spec.model, xs, ys)
        traj = dp.Trajectory(
            xs=xs,
            ys=ys,
            zs=zs,
            cost=cost,
            diagnostics=dp.SolveDiagnostics(wall_time=wall, method="ritz"),
        )
        report.update(
            {
                "J": traj.cost,
                "grid": {"basis_size": int(s.K), "mesh_points": int(s.M)},
                "objective_smooth": result.cost,
                "objective_evaluations": result.evaluations,
                "budget_exhausted": not result.converged,
                "segment_cost_evaluations": None,
                "wall_time_s": wall,
            }
        )
        return traj, report

    grid = _grid_for(config, spec)
    grid_info = {
        "tau": grid.tau,
        "delta": grid.delta,
        "n": grid.n,
        "lattice_size": grid.lattice_size(spec.corridor),
    }
    if s.method == "dp":
        if s.refine_levels > 0:
            schedule = dp.refinement_schedule(
                s.tau, s.gamma, s.epsilon, int(s.refine_levels)
            )
            trajs = dp.solve_refined(spec, schedule, threads=threads)
            traj = trajs[-1]
            report["levels"] = [
                {
                    "tau": tau,
                    "delta": delta,
                    "J": t.cost,
                    "segment_cost_evaluations": t.diagnostics.segment_cost_evaluations,
                }
                for (tau, delta), t in zip(schedule, trajs)
            ]
            finest = schedule[-1]
            grid_info.update(tau=finest[0], delta=finest[1])
            fine_grid = dp.build_grid(spec, finest[0], finest[1])
            grid_info.update(n=fine_grid.n, lattice_size=fine_grid.lattice_size(spec.corridor))
        else:
            traj = dp.solve(grid, spec, threads=threads)
    else:  # local
        traj, _ = localsearch.run(
            spec, grid, m=int(s.m), max_iter=s.max_iter, threads=threads
        )
        report["iterations"] = traj.diagnostics.iterations
        if traj.diagnostics.hit_max_iter:
            report["hit_max_iter"] = True
    report.update(
        {
            "J": traj.cost,
            "grid": grid_info,
            "segment_cost_evaluations": traj.diagnostics.segment_cost_evaluations,
            "wall_time_s": traj.diagnostics.wall_time,
        }
    )
    return traj, report


def _write_outputs(config: RunConfig, spec: dp.ProblemSpec, traj, report, out_dir: Path):
    out_dir.mkdir(parents=True, exist_ok=True)
    _, cum_len, cum_cost = path_cost_profile(spec.model, traj.xs, traj.ys)

    csv_path = out_dir / config.output.trajectory_csv
    rows = ["x,y,z,cumulative_length,cumulative_cost"]
    for i in range(traj.xs.size):
        rows.append(
            ",".join(
                repr(float(v))
                for v in (traj.xs[i], traj.ys[i], traj.zs[i], cum_len[i], cum_cost[i])
            )
        )
    csv_path.write_text("\n".join(rows) + "\n")

    report_path = out_dir / config.output.report_json
    report = dict(report)
    report["warnings"] = list(config.warnings)
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")

    plot_path = out_dir / config.output.plot_data
    lines = [
        f"{float(traj.xs[i])!r} {float(traj.ys[i])!r} {float(traj.zs[i])!r}"
        for i in range(traj.xs.size)
    ]
    plot_path.write_text("\n".join(lines) + "\n")
    return csv_path, report_path, plot_path


# ---------------------------------------------------------------------------
# subcommands


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("TERRACOST_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            print(f"warning: ignoring non-integer TERRACOST_THREADS={env!r}", file=sys.stderr)
    return os.cpu_count() or 1


def _cmd_solve(args) -> int:
    try:
        config = load_config(args.config)
        spec = realize(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    for message in config.warnings:
        print(f"warning: {message}", file=sys.stderr)
    try:
        traj, report = _solve(config, spec, _resolve_threads(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # solver failures map to exit 2
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    try:
        paths = _write_outputs(config, spec, traj, report, Path(args.out))
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    print(f"J = {traj.cost:.6f} ({report['method']})")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_verify(args) -> int:
    try:
        config = load_config(args.config)
        spec = realize(config)
        if config.solver.method == "ritz":
            raise ConfigError("verify needs a grid method; set solver.method to 'dp'")
        grid = _grid_for(config, spec)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        exact = oracle.enumerate_paths(grid, spec, cap=args.cap)
        sweep = dp.solve(grid, spec, threads=_resolve_threads(args))
        gap = sweep.cost - exact.best_cost
    except Exception as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    print(f"paths evaluated:    {exact.paths_evaluated}")
    print(f"exhaustive minimum: {exact.best_cost!r}")
    print(f"sweep minimum:      {sweep.cost!r}")
    print(f"gap:                {max(0.0, gap)!r}")
    threshold = config.gap_threshold
    if threshold is None:
        # Default policy: with a zero delivery rate the sweep is exact, so
        # any real gap is a failure; otherwise the gap is informational.
        threshold = 1e-9 if _alpha_is_zero(spec) else float("inf")
    if max(0.0, gap) > threshold:
        print(f"gap exceeds threshold {threshold!r}", file=sys.stderr)
        return 2
    return 0


def _alpha_is_zero(spec: dp.ProblemSpec) -> bool:
    xs = np.linspace(0.0, spec.l, 5)
    ys = np.linspace(spec.corridor[0], spec.corridor[1], 5)
    gx, gy = np.meshgrid(xs, ys)
    return bool(np.all(np.asarray(spec.model.alpha.value(gx, gy)) == 0.0))


def _cmd_schedule(args) -> int:
    try:
        levels = dp.refinement_schedule(
            args.tau0, args.gamma, args.epsilon, args.levels - 1
        )
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    print(f"{'k':>3} {'tau':>14} {'delta':>14}")
    for k, (tau, delta) in enumerate(levels):
        print(f"{k:>3} {tau:>14.8f} {delta:>14.8f}")
    return 0


def _cmd_bench(args) -> int:
    try:
        config = load_config(args.config)
        spec = realize(config)
        if config.solver.method == "ritz":
            raise ConfigError("bench needs a grid method; set solver.method to 'dp'")
        if config.solver.tau is None:
            raise ConfigError("bench requires solver.tau")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    s = config.solver
    threads = _resolve_threads(args)
    rows = []
    try:
        for tau, delta in dp.refinement_schedule(s.tau, s.gamma, s.epsilon, args.levels - 1):
            grid = dp.build_grid(spec, tau, delta)
            traj = dp.solve(grid, spec, threads=threads)
            evals = traj.diagnostics.segment_cost_evaluations
            rows.append(
                {
                    "tau": tau,
                    "delta": delta,
                    "n": grid.n,
                    "lattice_size": grid.lattice_size(spec.corridor),
                    "segment_cost_evaluations": evals,
                    "evaluations_per_stage": evals / grid.n,
                    "J": traj.cost,
                    "wall_time_s": traj.diagnostics.wall_time,
                }
            )
    except Exception as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    header = f"{'tau':>12} {'delta':>12} {'n':>5} {'N':>6} {'evals':>12} {'evals/stage':>12} {'J':>10} {'time[s]':>9}"
    print(header)
    for r in rows:
        print(
            f"{r['tau']:>12.6f} {r['delta']:>12.6f} {r['n']:>5} {r['lattice_size']:>6} "
            f"{r['segment_cost_evaluations']:>12} {r['evaluations_per_stage']:>12.1f} "
            f"{r['J']:>10.5f} {r['wall_time_s']:>9.3f}"
        )
    for a, b in zip(rows, rows[1:]):
        ratio = b["segment_cost_evaluations"] / a["segment_cost_evaluations"]
        per_stage = b["evaluations_per_stage"] / a["evaluations_per_stage"]
        print(
            f"tau {a['tau']:.6f} -> {b['tau']:.6f}: eval growth x{ratio:.2f}, "
            f"per-stage x{per_stage:.2f}"
        )
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")
        except OSError as exc:
            print(f"I/O error: {exc}", file=sys.stderr)
            return 3
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="terracost",
        description="Minimum-construction-cost trajectories over terrain.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the configured solver")
    p_solve.add_argument("--config", required=True, help="path to JSON run config")
    p_solve.add_argument("--out", default=".", help="output directory")
    p_solve.add_argument("--threads", type=int, default=None, help="worker cap")
    p_solve.set_defaults(handler=_cmd_solve)

    p_verify = sub.add_parser("verify", help="compare the sweep against enumeration")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--cap", type=int, default=oracle.DEFAULT_CAP)
    p_verify.add_argument("--threads", type=int, default=None)
    p_verify.set_defaults(handler=_cmd_verify)

    p_schedule = sub.add_parser("schedule", help="print the refinement table")
    p_schedule.add_argument("--tau0", type=float, required=True)
    p_schedule.add_argument("--gamma", type=float, default=1.0)
    p_schedule.add_argument("--epsilon", type=float, default=0.5)
    p_schedule.add_argument("--levels", type=int, default=4)
    p_schedule.set_defaults(handler=_cmd_schedule)

    p_bench = sub.add_parser("bench", help="evaluation counts across levels")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--levels", type=int, default=3)
    p_bench.add_argument("--out", default=None, help="optional JSON output path")
    p_bench.add_argument("--threads", type=int, default=None)
    p_bench.set_defaults(handler=_cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


def script_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    script_entry()
