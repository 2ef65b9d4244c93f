"""Tests for the scalar/2-d root-finding helpers."""

import math

import numpy as np
import pytest

from conncoef.errors import NoConvergence, SingularJacobian
from conncoef.rootfind import SolverOptions, bracket_scan, broyden2, secant


# --------------------------------------------------------------------------
# options
# --------------------------------------------------------------------------

def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(tol_residual=0.0)
    with pytest.raises(ValueError):
        SolverOptions(tol_step=-1e-9)
    with pytest.raises(ValueError):
        SolverOptions(max_iter=0)
    with pytest.raises(ValueError):
        SolverOptions(damping="thirds")


# --------------------------------------------------------------------------
# secant
# --------------------------------------------------------------------------

def test_secant_quadratic():
    root = secant(lambda t: t * t - 4.0, 1.0, 3.0)
    assert abs(root - 2.0) <= 1e-9


def test_secant_affine_is_immediate():
    root = secant(lambda t: 3.0 * t - 6.0, 0.0, 1.0,
                  SolverOptions(max_iter=2))
    assert abs(root - 2.0) <= 1e-12


def test_secant_returns_endpoint_root():
    calls = []

    def f(t):
        calls.append(t)
        return t

    assert secant(f, 0.0, 5.0) == 0.0
    assert calls == [0.0, 5.0]  # no iteration needed


def test_secant_rejects_nonfinite_start():
    with pytest.raises(ValueError):
        secant(lambda t: float("nan"), 0.0, 1.0)


def test_secant_no_convergence_carries_best():
    with pytest.raises(NoConvergence) as exc:
        secant(lambda t: t * t + 1.0, 0.5, 1.5, SolverOptions(max_iter=5))
    assert exc.value.best is not None
    assert exc.value.residual >= 1.0  # t^2 + 1 is bounded below by 1


# --------------------------------------------------------------------------
# bracket_scan
# --------------------------------------------------------------------------

def test_bracket_scan_simple_crossings():
    brackets = bracket_scan(math.cos, 0.0, 7.0, 0.5)
    assert len(brackets) == 2
    for (a, b), root in zip(brackets, (math.pi / 2, 3 * math.pi / 2)):
        assert a < root < b


def test_bracket_scan_validates_step():
    with pytest.raises(ValueError):
        bracket_scan(math.cos, 0.0, 1.0, 0.0)


def test_bracket_scan_exact_grid_zeros():
    # Roots 0, 2, 6 all fall exactly on the 0.5-step grid.  Each must yield
    # exactly one bracket (paired with the right neighbor), not two.
    f = lambda t: t * (t - 2.0) * (t - 6.0)
    brackets = bracket_scan(f, -1.0, 7.0, 0.5)
    assert brackets == [(0.0, 0.5), (2.0, 2.5), (6.0, 6.5)]
    roots = sorted(secant(f, a, b) for a, b in brackets)
    assert np.allclose(roots, [0.0, 2.0, 6.0], atol=1e-9)


def test_bracket_scan_trailing_zero_degenerates():
    brackets = bracket_scan(lambda t: t - 2.0, 0.0, 2.0, 1.0)
    assert brackets == [(2.0, 2.0)]


def test_bracket_scan_warns_on_nan():
    def f(t):
        return float("nan") if t < 0 else t - 0.75

    with pytest.warns(RuntimeWarning, match="NaN"):
        brackets = bracket_scan(f, -1.0, 1.0, 0.5)
    assert brackets == [(0.5, 1.0)]


# --------------------------------------------------------------------------
# broyden2
# --------------------------------------------------------------------------

def _circle_hyperbola(v):
    x, y = v
    return np.array([x * x + y * y - 5.0, x * y - 2.0])


def test_broyden2_quadratic_pair():
    root = broyden2(_circle_hyperbola, np.array([2.2, 0.8]))
    assert np.allclose(root, [2.0, 1.0], atol=1e-8)


def test_broyden2_affine():
    M = np.array([[2.0, 1.0], [0.0, 3.0]])
    r = np.array([1.0, -2.0])
    root = broyden2(lambda v: M @ (v - r), np.array([5.0, 5.0]))
    assert np.allclose(root, r, atol=1e-9)


def test_broyden2_singular_jacobian():
    with pytest.raises(SingularJacobian):
        broyden2(lambda v: np.array([1.0, 1.0]), np.array([0.0, 0.0]))


def test_broyden2_rejects_nonfinite_seed_value():
    with pytest.raises(ValueError):
        broyden2(lambda v: np.array([np.nan, 0.0]), np.array([0.0, 0.0]))


def test_broyden2_no_convergence_trace():
    with pytest.raises(NoConvergence) as exc:
        broyden2(_circle_hyperbola, np.array([30.0, -40.0]),
                 SolverOptions(max_iter=2))
    err = exc.value
    assert err.best is not None and len(err.best) == 2
    assert np.isfinite(err.residual)
    assert len(err.trace) >= 1
    assert err.residual <= err.trace[0]  # best is no worse than the seed


def test_broyden2_damps_through_failed_evaluations():
    # The full quasi-Newton step from x = 4 lands in the forbidden region
    # x < 0; the solver must treat the failed evaluation as a halving event
    # and still reach the root at (2, 1).
    def F(v):
        if v[0] < 0:
            raise ValueError("out of domain")
        return np.array([math.atan(v[0] - 2.0), v[1] - 1.0])

    root = broyden2(F, np.array([4.0, 0.0]))
    assert np.allclose(root, [2.0, 1.0], atol=1e-8)
