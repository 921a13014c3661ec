"""Sine-series benchmark solver: candidates, objective, minimization."""

from __future__ import annotations

import numpy as np
import pytest

from terracost import CostMode, CostModel, field_from_expression
from terracost.ritz import RitzCandidate, candidate_eval, minimize, objective

from conftest import (
    SERIES_COEFFS_RELIEF,
    SERIES_COEFFS_RIDGE,
    make_relief3d_spec,
    make_ridge2d_spec,
)

SQRT2 = float(np.sqrt(2.0))


def flat_model(alpha="0", beta="1"):
    return CostModel(
        alpha=field_from_expression(alpha),
        beta=field_from_expression(beta),
        mode=CostMode.FLAT_2D,
    )


# ---------------------------------------------------------------------------
# candidate evaluation


def test_zero_coefficients_give_chord():
    cand = RitzCandidate(np.zeros(4), span=2.0, end_ordinate=1.0)
    y, yp = candidate_eval(cand, 0.8)
    assert y == pytest.approx(0.4, abs=1e-15)
    assert yp == pytest.approx(0.5, abs=1e-15)


def test_single_mode_midspan_value():
    cand = RitzCandidate(np.array([1.0]), span=1.0, end_ordinate=1.0)
    y, _ = candidate_eval(cand, 0.5)
    assert y == pytest.approx(1.5, abs=1e-15)  # chord 0.5 plus sin(pi/2)


def test_boundary_conditions_structural():
    rng = np.random.default_rng(53)
    for _ in range(20):
        coeffs = rng.normal(scale=0.5, size=10)
        cand = RitzCandidate(coeffs, span=1.0, end_ordinate=1.0)
        y0, _ = candidate_eval(cand, 0.0)
        yl, _ = candidate_eval(cand, 1.0)
        assert y0 == 0.0
        assert abs(yl - 1.0) <= 1e-12


def test_candidate_eval_vectorized():
    cand = RitzCandidate(np.array([0.3, -0.2, 0.1]), span=1.0, end_ordinate=1.0)
    xs = np.linspace(0.0, 1.0, 17)
    y, yp = candidate_eval(cand, xs)
    for i, x in enumerate(xs):
        sy, syp = candidate_eval(cand, float(x))
        assert y[i] == pytest.approx(sy, abs=1e-15)
        assert yp[i] == pytest.approx(syp, abs=1e-15)


def test_slope_matches_finite_differences():
    cand = RitzCandidate(np.array([0.3, -0.2, 0.1]), span=1.0, end_ordinate=1.0)
    h = 1e-7
    for x in (0.1, 0.33, 0.71):
        _, yp = candidate_eval(cand, x)
        ylo, _ = candidate_eval(cand, x - h)
        yhi, _ = candidate_eval(cand, x + h)
        assert yp == pytest.approx((yhi - ylo) / (2 * h), abs=1e-5)


def test_candidate_validation():
    with pytest.raises(ValueError):
        RitzCandidate(np.zeros((2, 2)), span=1.0, end_ordinate=1.0)
    with pytest.raises(ValueError):
        RitzCandidate(np.zeros(3), span=-1.0, end_ordinate=1.0)


# ---------------------------------------------------------------------------
# objective


def test_chord_objective_is_path_length():
    cand = RitzCandidate(np.zeros(5), span=1.0, end_ordinate=1.0)
    assert objective(cand, flat_model()) == pytest.approx(SQRT2, abs=1e-9)


def test_series_objective_ridge():
    cand = RitzCandidate(SERIES_COEFFS_RIDGE, span=1.0, end_ordinate=1.0)
    model = make_ridge2d_spec().model
    assert objective(cand, model) == pytest.approx(1.43743, abs=0.005)


def test_series_objective_relief():
    cand = RitzCandidate(SERIES_COEFFS_RELIEF, span=1.0, end_ordinate=1.0)
    model = make_relief3d_spec().model
    assert objective(cand, model) == pytest.approx(1.13763, abs=0.005)


# ---------------------------------------------------------------------------
# minimization


def test_flat_problem_keeps_chord():
    result = minimize(flat_model(), 1.0, 1.0, basis_size=4, budget=4000)
    assert result.cost == pytest.approx(SQRT2, abs=1e-4)
    assert np.all(np.abs(result.candidate.coefficients) < 1e-3)


def test_minimize_never_exceeds_chord_objective(ritz_cached):
    result = ritz_cached("ridge2d", 10)
    chord = RitzCandidate(np.zeros(10), span=1.0, end_ordinate=1.0)
    assert result.cost <= objective(chord, make_ridge2d_spec().model) + 1e-12


def test_minimize_ridge_reaches_benchmark(ritz_cached):
    result = ritz_cached("ridge2d", 10)
    assert result.cost <= 1.4380
    assert result.evaluations <= 50000


def test_minimize_relief_reaches_benchmark(ritz_cached):
    result = ritz_cached("relief3d", 10)
    assert result.cost <= 1.1382
    assert result.evaluations <= 50000


def test_larger_basis_never_worse(ritz_cached):
    for problem in ("ridge2d", "relief3d"):
        small = ritz_cached(problem, 3)
        large = ritz_cached(problem, 10)
        assert large.cost <= small.cost + 1e-6


def test_budget_exhaustion_reported_not_raised():
    model = make_ridge2d_spec().model
    result = minimize(model, 1.0, 1.0, basis_size=10, budget=50)
    # The simplex may finish its in-flight operation (a shrink costs up to
    # basis_size + 1 evaluations) before noticing the cap.
    assert result.evaluations <= 50 + 11
    assert not result.converged


def test_minimize_validation():
    with pytest.raises(ValueError, match="basis_size"):
        minimize(flat_model(), 1.0, 1.0, basis_size=0)
    with pytest.raises(ValueError, match="budget"):
        minimize(flat_model(), 1.0, 1.0, budget=0)
