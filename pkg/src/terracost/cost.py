"""The trajectory cost functional and its quadrature.

A path y(x) over span [0, l] lies on the relief z = phi(x, y(x)), so its
3-D arc-length density per unit x is

    Phi(x) = sqrt(1 + y'(x)^2 + z'(x)^2),
    z'(x)  = phi_x(x, y(x)) + phi_y(x, y(x)) * y'(x).

The total cost charges two rates along the path: a construction rate
beta(x, y) per unit built length, and a delivery rate alpha(x, y) per unit
built length times the length of road already completed between the origin
and the working point (materials travel over the finished prefix).  That
prefix length is the inner integral of Phi from 0 to x, which makes the
functional non-additive over segments: every segment cost depends on the
arc length accumulated before it.  All evaluators here therefore thread a
``len_start`` prefix explicitly.

In the flattened 2-D mode z' is dropped entirely and the relief is ignored.

Quadrature is a composite trapezoid rule with ``q`` subintervals per
segment; the inner prefix integral uses trapezoid prefix sums over the same
sample points, so inner and outer sampling stay aligned.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .terrain import ScalarField2D

__all__ = [
    "CostMode",
    "CostModel",
    "SegmentCostResult",
    "SegmentTableau",
    "arc_element",
    "path_cost",
    "path_cost_profile",
    "segment_cost",
    "segment_cost_batch",
    "smooth_path_cost",
    "z_prime",
]


class CostMode(enum.Enum):
    FULL_3D = "full3d"
    FLAT_2D = "flat2d"


@dataclass(frozen=True)
class CostModel:
    """Field bundle plus evaluation settings for the cost functional.

    ``quadrature_subdivisions`` must be even and >= 2 (composite scheme).
    In FLAT_2D mode ``phi`` is ignored by cost evaluation and may be None.
    """

    alpha: ScalarField2D
    beta: ScalarField2D
    phi: ScalarField2D | None = None
    mode: CostMode = CostMode.FULL_3D
    quadrature_subdivisions: int = 16

    def __post_init__(self):
        q = self.quadrature_subdivisions
        if q < 2 or q % 2 != 0:
            raise ValueError(f"quadrature_subdivisions must be even and >= 2, got {q}")
        if self.mode is CostMode.FULL_3D and self.phi is None:
            raise ValueError("full 3-D mode requires a relief field phi")


class SegmentCostResult(NamedTuple):
    delta_j: float
    delta_len: float


class SegmentTableau(NamedTuple):
    """Per-pair segment costs split by their dependence on the prefix.

    A segment's added cost is affine in the arc length already built before
    it: delta_j = fixed_cost + prefix_slope * len_start, where prefix_slope
    is the integral of alpha * Phi over the segment.  ``delta_len`` is the
    integral of Phi (the segment's own arc length).
    """

    fixed_cost: np.ndarray
    prefix_slope: np.ndarray
    delta_len: np.ndarray


def z_prime(model: CostModel, x, y, yp):
    """Slope of the height profile along the path; identically 0 in 2-D mode."""
    if model.mode is CostMode.FLAT_2D:
        shape = np.broadcast_shapes(np.shape(x), np.shape(y), np.shape(yp))
        return 0.0 if shape == () else np.zeros(shape)
    _, px, py = model.phi.value_and_partials(x, y)
    return px + py * yp


def arc_element(model: CostModel, x, y, yp):
    """3-D arc-length density sqrt(1 + y'^2 + z'^2); always >= 1."""
    zp = z_prime(model, x, y, yp)
    return np.sqrt(1.0 + yp * yp + zp * zp)


def _trapz(g: np.ndarray, h: float) -> np.ndarray:
    # Composite trapezoid along the last axis, uniform spacing h.
    return h * (0.5 * (g[..., 0] + g[..., -1]) + g[..., 1:-1].sum(axis=-1))


def _tableau(model: CostModel, xs, ys, yp, h: float) -> SegmentTableau:
    """Shared kernel: integrate one batch of linear segments.

    ``xs``/``ys`` are sample grids whose last axis holds q+1 quadrature
    points per segment; ``yp`` is the (constant) slope per segment,
    broadcastable against them.
    """
    if model.mode is CostMode.FULL_3D:
        _, px, py = model.phi.value_and_partials(xs, ys)
        zp = px + py * yp
        phi_arc = np.sqrt(1.0 + yp * yp + zp * zp)
    else:
        phi_arc = np.sqrt(1.0 + yp * yp)
    phi_arc = np.broadcast_to(phi_arc, ys.shape)

    # Within-segment arc-length prefix (trapezoid prefix sums).
    panel = 0.5 * h * (phi_arc[..., :-1] + phi_arc[..., 1:])
    prefix = np.concatenate(
        [np.zeros(panel.shape[:-1] + (1,)), np.cumsum(panel, axis=-1)], axis=-1
    )

    a = np.broadcast_to(np.asarray(model.alpha.value(xs, ys)), ys.shape)
    b = np.broadcast_to(np.asarray(model.beta.value(xs, ys)), ys.shape)
    delivery = a * phi_arc
    fixed = _trapz(delivery * prefix, h) + _trapz(b * phi_arc, h)
    slope = _trapz(delivery, h)
    return SegmentTableau(fixed, slope, prefix[..., -1])


def segment_cost_batch(
    model: CostModel, x_start: float, tau: float, y_from, y_to
) -> SegmentTableau:
    """Evaluate all from x to pairs of one stage transition in one call.

    Returns arrays of shape (len(y_from), len(y_to)).  Each pair is the
    linear segment from (x_start, y_from[k]) to (x_start + tau, y_to[s]).
    """
    if tau <= 0:
        raise ValueError(f"segment width must be positive, got {tau}")
    q = model.quadrature_subdivisions
    h = tau / q
    ts = np.arange(q + 1) / q
    xs = x_start + tau * ts
    yf = np.asarray(y_from, dtype=float)[:, None, None]
    yt = np.asarray(y_to, dtype=float)[None, :, None]
    ys = yf + (yt - yf) * ts
    yp = (yt - yf) / tau
    return _tableau(model, xs, ys, yp, h)


def segment_cost(
    model: CostModel,
    x_start: float,
    y_start: float,
    y_end: float,
    tau: float,
    len_start: float = 0.0,
) -> SegmentCostResult:
    """Added cost and added arc length of one linear segment.

    ``len_start`` is the arc length of the path prefix already built before
    this segment; the delivery term integrates alpha * Phi * (len_start +
    within-segment prefix).
    """
    if len_start < 0:
        raise ValueError(f"len_start must be non-negative, got {len_start}")
    tab = segment_cost_batch(model, x_start, tau, [y_start], [y_end])
    delta_j = float(tab.fixed_cost[0, 0] + len_start * tab.prefix_slope[0, 0])
    delta_len = float(tab.delta_len[0, 0])
    if not np.isfinite(delta_j) or not np.isfinite(delta_len):
        raise ValueError(
            "non-finite segment cost: fields are singular along the segment"
        )
    return SegmentCostResult(delta_j, delta_len)


def path_cost_profile(model: CostModel, xs, ys):
    """Cost of a polyline plus its cumulative length/cost per knot.

    Returns (total_cost, cum_length, cum_cost); the prefix length threads
    through segments exactly as the stage sweep does, so a solver's reported
    cost and this evaluation of its knots agree to rounding.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.shape != ys.shape or xs.size < 2:
        raise ValueError("polyline needs matching 1-D x and y knots (>= 2)")
    if np.any(np.diff(xs) <= 0):
        raise ValueError("polyline x-knots must be strictly increasing")
    if abs(xs[0]) > 1e-12:
        raise ValueError(f"polyline must start at x = 0, got {xs[0]}")
    cum_len = np.zeros(xs.size)
    cum_cost = np.zeros(xs.size)
    total = 0.0
    length = 0.0
    for i in range(xs.size - 1):
        tab = segment_cost_batch(model, xs[i], xs[i + 1] - xs[i], [ys[i]], [ys[i + 1]])
        # Same association order as the stage sweep, so a solver's terminal
        # label and the re-evaluation of its knots agree bit for bit.
        total = float((total + tab.fixed_cost[0, 0]) + length * tab.prefix_slope[0, 0])
        length = float(length + tab.delta_len[0, 0])
        cum_len[i + 1] = length
        cum_cost[i + 1] = total
    if not np.isfinite(total):
        raise ValueError("non-finite path cost: fields are singular along the path")
    return total, cum_len, cum_cost


def path_cost(model: CostModel, xs, ys) -> float:
    """Functional value of a piecewise-linear trajectory given by its knots."""
    total, _, _ = path_cost_profile(model, xs, ys)
    return total


def smooth_path_cost(
    model: CostModel,
    y: Callable,
    yp: Callable,
    mesh_points: int,
    length: float,
) -> float:
    """Functional value of a smooth candidate y(x) on [0, length].

    The span is split into ``mesh_points`` - 1 cells; inside each cell the
    same composite trapezoid scheme samples the exact y and y' callables (no
    chord approximation), and the inner delivery integral threads
    cumulatively across cells.  ``y``/``yp`` must accept numpy arrays.
    """
    if mesh_points < 64:
        raise ValueError(f"mesh_points must be >= 64, got {mesh_points}")
    if length <= 0:
        raise ValueError(f"span length must be positive, got {length}")
    q = model.quadrature_subdivisions
    mesh = np.linspace(0.0, length, mesh_points)
    cell = length / (mesh_points - 1)
    h = cell / q
    ts = np.arange(q + 1) / q
    xs = mesh[:-1, None] + cell * ts  # (cells, q+1)
    ys = y(xs)
    yps = yp(xs)

    if model.mode is CostMode.FULL_3D:
        _, px, py = model.phi.value_and_partials(xs, ys)
        zp = px + py * yps
        phi_arc = np.sqrt(1.0 + yps * yps + zp * zp)
    else:
        phi_arc = np.broadcast_to(np.sqrt(1.0 + yps * yps), xs.shape)

    panel = 0.5 * h * (phi_arc[:, :-1] + phi_arc[:, 1:])
    prefix = np.concatenate(
        [np.zeros((xs.shape[0], 1)), np.cumsum(panel, axis=1)], axis=1
    )
    cell_len = prefix[:, -1]
    len_start = np.concatenate([[0.0], np.cumsum(cell_len)[:-1]])[:, None]

    a = np.broadcast_to(np.asarray(model.alpha.value(xs, ys)), xs.shape)
    b = np.broadcast_to(np.asarray(model.beta.value(xs, ys)), xs.shape)
    delivery = a * phi_arc
    total = float(
        np.sum(_trapz(delivery * (len_start + prefix), h))
        + np.sum(_trapz(b * phi_arc, h))
    )
    if not np.isfinite(total):
        raise ValueError("non-finite path cost: fields are singular along the path")
    return total
