"""Stage-grid construction and the forward sweep that solves it.

The corridor is discretized into stages: abscissae x_i = i*l/n (step tau)
and, at each interior stage, the feasible subset of the ordinate lattice
y_lo + k*delta.  The first and last stages are the fixed endpoints.  A
forward sweep labels every node with the cheapest cost-to-come d, choosing
for each node of stage i+1 the best predecessor in stage i; backtracking
from the terminal node yields the optimal polyline over the grid.

Because the delivery term makes segment costs depend on the arc length of
the path prefix, each label also carries the accumulated arc length of its
own chosen prefix, and candidate arcs are priced with the predecessor's
stored length.  This keeps the recursion well-defined; it is exact when the
delivery rate is identically zero and a scalar-label approximation
otherwise (the exhaustive reference solver in :mod:`terracost.oracle`
measures the gap).

Refinement follows the coupling delta_k = gamma * tau_k^(1+eps): halving
tau while shrinking delta strictly faster is what makes the refined optima
converge; eps = 0 is accepted but warns, since convergence is then no
longer guaranteed.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .cost import CostModel, SegmentTableau, segment_cost_batch
from .terrain import ScalarField2D, feasible

__all__ = [
    "NodeLabel",
    "ProblemSpec",
    "SolveDiagnostics",
    "StageGrid",
    "Trajectory",
    "build_grid",
    "default_corridor",
    "refinement_schedule",
    "solve",
    "solve_refined",
]

# Below this many candidate arcs a stage transition is evaluated serially;
# threading overhead would dominate.
_PARALLEL_THRESHOLD = 4096


def default_corridor(l: float, y_l: float) -> tuple[float, float]:
    """Bounding interval of {0, y_l} widened by 50% of its width per side.

    Degenerates for y_l = 0, where [-l/2, l/2] is used instead.
    """
    lo, hi = min(0.0, y_l), max(0.0, y_l)
    width = hi - lo
    if width == 0.0:
        return (-0.5 * l, 0.5 * l)
    return (lo - 0.5 * width, hi + 0.5 * width)


@dataclass(frozen=True)
class ProblemSpec:
    """A fixed-endpoint corridor problem: span, terminal ordinate, fields."""

    l: float
    y_l: float
    corridor: tuple[float, float]
    model: CostModel
    mask: ScalarField2D | None = None

    def __post_init__(self):
        if self.l <= 0:
            raise ValueError(f"span length must be positive, got {self.l}")
        y_lo, y_hi = self.corridor
        if y_lo >= y_hi:
            raise ValueError(f"corridor must be a proper interval, got {self.corridor}")
        if not (y_lo <= 0.0 <= y_hi):
            raise ValueError("corridor must contain the start ordinate 0")
        if not (y_lo <= self.y_l <= y_hi):
            raise ValueError(
                f"terminal ordinate {self.y_l} outside corridor {self.corridor}"
            )
        if not feasible(self.mask, 0.0, 0.0):
            raise ValueError("start point (0, 0) is infeasible under the mask")
        if not feasible(self.mask, self.l, self.y_l):
            raise ValueError(
                f"terminal point ({self.l}, {self.y_l}) is infeasible under the mask"
            )


@dataclass(frozen=True)
class StageGrid:
    """Discretization of the corridor: stage abscissae and feasible ordinates.

    ``stages[0]`` and ``stages[n]`` are the endpoint singletons; interior
    stages hold the sorted feasible ordinates of the delta-lattice.
    """

    tau: float
    delta: float
    n: int
    xs: np.ndarray
    stages: list[np.ndarray]

    def lattice_size(self, corridor: tuple[float, float]) -> int:
        """Number of ordinate lattice nodes spanning the corridor."""
        y_lo, y_hi = corridor
        return int(np.floor((y_hi - y_lo) / self.delta + 1e-9)) + 1


class NodeLabel(NamedTuple):
    """Sweep state of one grid node."""

    d: float
    length: float
    pred: int


@dataclass
class SolveDiagnostics:
    segment_cost_evaluations: int = 0
    wall_time: float = 0.0
    method: str = "dp"
    iterations: int | None = None
    hit_max_iter: bool = False
    cost_per_iteration: list[float] | None = None
    evaluations_per_iteration: list[int] | None = None


@dataclass
class Trajectory:
    """A solved polyline: knots, heights, functional value, run stats."""

    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray
    cost: float
    diagnostics: SolveDiagnostics = field(default_factory=SolveDiagnostics)


def build_grid(spec: ProblemSpec, tau: float, delta: float) -> StageGrid:
    """Discretize the corridor with steps tau (x) and delta (y).

    Stage abscissae are exactly equidistant: n = round(l/tau), x_i = i*l/n.
    Interior ordinates are y_lo + k*delta filtered by the feasibility mask;
    an interior stage left empty by the mask is an error.
    """
    if not (0 < tau <= spec.l):
        raise ValueError(f"tau must be in (0, l], got {tau}")
    y_lo, y_hi = spec.corridor
    if not (0 < delta <= y_hi - y_lo):
        raise ValueError(f"delta must be in (0, corridor height], got {delta}")
    n = max(1, round(spec.l / tau))
    xs = np.arange(n + 1) * (spec.l / n)
    xs[n] = spec.l  # guard the terminal node against rounding drift
    k_max = int(np.floor((y_hi - y_lo) / delta + 1e-9))
    lattice = y_lo + delta * np.arange(k_max + 1)
    stages: list[np.ndarray] = [np.array([0.0])]
    for i in range(1, n):
        keep = feasible(spec.mask, np.full(lattice.shape, xs[i]), lattice)
        stage = lattice[keep]
        if stage.size == 0:
            raise ValueError(
                f"stage {i} (x = {xs[i]}) has no feasible ordinates; corridor is blocked"
            )
        stages.append(stage)
    stages.append(np.array([spec.y_l]))
    return StageGrid(tau=tau, delta=delta, n=n, xs=xs, stages=stages)


def _transition_tableau(
    model: CostModel,
    x_start: float,
    tau: float,
    y_from: np.ndarray,
    y_to: np.ndarray,
    executor: ThreadPoolExecutor | None,
    workers: int,
) -> SegmentTableau:
    # Columns (to-nodes) are independent, so chunking them across threads
    # cannot change any result bit.
    if executor is None or y_from.size * y_to.size < _PARALLEL_THRESHOLD:
        return segment_cost_batch(model, x_start, tau, y_from, y_to)
    chunks = np.array_split(y_to, min(workers, y_to.size))
    parts = list(
        executor.map(
            lambda chunk: segment_cost_batch(model, x_start, tau, y_from, chunk),
            chunks,
        )
    )
    return SegmentTableau(
        np.concatenate([p.fixed_cost for p in parts], axis=1),
        np.concatenate([p.prefix_slope for p in parts], axis=1),
        np.concatenate([p.delta_len for p in parts], axis=1),
    )


def _sweep(grid: StageGrid, spec: ProblemSpec, executor=None, workers: int = 1):
    """Forward pass; returns per-stage label arrays and the evaluation count."""
    model = spec.model
    d = np.zeros(1)
    length = np.zeros(1)
    preds: list[np.ndarray] = [np.array([-1])]
    labels = [(d, length, preds[0])]
    evaluations = 0
    for i in range(grid.n):
        y_from = grid.stages[i]
        y_to = grid.stages[i + 1]
        tau_i = grid.xs[i + 1] - grid.xs[i]
        tab = _transition_tableau(
            model, grid.xs[i], tau_i, y_from, y_to, executor, workers
        )
        evaluations += y_from.size * y_to.size
        # Candidate cost-to-come for every (pred k, node s) pair; ties pick
        # the smallest k (argmin returns the first minimum).
        candidates = d[:, None] + tab.fixed_cost + length[:, None] * tab.prefix_slope
        best = np.argmin(candidates, axis=0)
        cols = np.arange(y_to.size)
        d = candidates[best, cols]
        length = length[best] + tab.delta_len[best, cols]
        preds.append(best)
        labels.append((d, length, best))
    return labels, evaluations


def solve(grid: StageGrid, spec: ProblemSpec, threads: int = 1) -> Trajectory:
    """Run the forward sweep and backtrack the optimal polyline.

    The per-node minimizations inside one stage transition may be evaluated
    in parallel (``threads`` > 1); results are independent of execution
    order.  The returned trajectory's cost is the terminal label, which by
    construction of the prefix threading equals the polyline's path cost.
    """
    t0 = time.perf_counter()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as executor:
            labels, evaluations = _sweep(grid, spec, executor, threads)
    else:
        labels, evaluations = _sweep(grid, spec)
    terminal_d = labels[-1][0]
    idx = [0]
    for i in range(grid.n, 0, -1):
        idx.append(int(labels[i][2][idx[-1]]))
    idx.reverse()
    ys = np.array([grid.stages[i][idx[i]] for i in range(grid.n + 1)])
    zs = _heights(spec.model, grid.xs, ys)
    diag = SolveDiagnostics(
        segment_cost_evaluations=evaluations,
        wall_time=time.perf_counter() - t0,
        method="dp",
    )
    return Trajectory(xs=grid.xs, ys=ys, zs=zs, cost=float(terminal_d[0]), diagnostics=diag)


def _heights(model: CostModel, xs, ys):
    if model.phi is None:
        return np.zeros_like(np.asarray(xs, dtype=float))
    v = model.phi.value(xs, ys)
    return np.asarray(v, dtype=float)


def sweep_labels(grid: StageGrid, spec: ProblemSpec) -> list[list[NodeLabel]]:
    """Per-stage node labels of the forward sweep (for inspection/tests)."""
    labels, _ = _sweep(grid, spec)
    return [
        [NodeLabel(float(d[k]), float(length[k]), int(pred[k])) for k in range(d.size)]
        for d, length, pred in labels
    ]


def refinement_schedule(
    tau_0: float, gamma: float, epsilon: float, k_max: int
) -> list[tuple[float, float]]:
    """Halving schedule [(tau_k, delta_k)] with delta_k = gamma*tau_k^(1+eps).

    eps must be positive for guaranteed convergence of the refined optima;
    eps = 0 is accepted with a warning.
    """
    if tau_0 <= 0:
        raise ValueError(f"tau_0 must be positive, got {tau_0}")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    if k_max < 0:
        raise ValueError(f"k_max must be non-negative, got {k_max}")
    if epsilon == 0:
        warnings.warn(
            "epsilon = 0 couples delta proportionally to tau; convergence of the "
            "refined solutions is not guaranteed",
            RuntimeWarning,
            stacklevel=2,
        )
    schedule = []
    for k in range(k_max + 1):
        tau_k = tau_0 / 2**k
        schedule.append((tau_k, gamma * tau_k ** (1.0 + epsilon)))
    return schedule


def solve_refined(
    spec: ProblemSpec,
    schedule: list[tuple[float, float]],
    threads: int = 1,
) -> list[Trajectory]:
    """One solve per schedule level, finest last.

    Each level's evaluation count is checked against the worst-case bound
    N^2 * n (N = corridor lattice size, one unit per candidate arc).
    """
    if not schedule:
        raise ValueError("schedule must contain at least one (tau, delta) level")
    y_lo, y_hi = spec.corridor
    results = []
    for tau, delta in schedule:
        grid = build_grid(spec, tau, delta)
        traj = solve(grid, spec, threads=threads)
        bound = ((y_hi - y_lo) / delta + 1.0) ** 2 * grid.n
        used = traj.diagnostics.segment_cost_evaluations
        if used > bound:
            raise RuntimeError(
                f"evaluation count {used} exceeded the N^2*n bound {bound:.0f}"
            )
        results.append(traj)
    return results
