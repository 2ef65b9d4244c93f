"""Nonlinear-solver plumbing: secant, bracketing scan, 2-D Broyden."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConncoefError, NoConvergence, SingularJacobian

__all__ = ["SolverOptions", "secant", "bracket_scan", "broyden2"]


@dataclass(frozen=True)
class SolverOptions:
    """Shared solver knobs.

    tol_residual: stop when |f| (max-norm for systems) drops below this.
    tol_step: stop when the step is below tol_step * (1 + |x|).
    max_iter: iteration budget.
    damping: "halving" backtracks on residual increase, "none" never does.
    """

    tol_residual: float = 1e-9
    tol_step: float = 1e-13
    max_iter: int = 50
    damping: str = "halving"

    def __post_init__(self):
        if self.tol_residual <= 0 or self.tol_step <= 0:
            raise ValueError("tolerances must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.damping not in ("none", "halving"):
            raise ValueError("damping must be 'none' or 'halving'")


def secant(f, t0: float, t1: float, opts: SolverOptions | None = None) -> float:
    """Secant iteration for a scalar root.

    Stops when |f| <= tol_residual or the step falls below
    tol_step * (1 + |t|); raises NoConvergence (with the best iterate
    attached) when max_iter runs out.
    """
    opts = opts or SolverOptions()
    a, b = float(t0), float(t1)
    fa, fb = f(a), f(b)
    if not (np.isfinite(fa) and np.isfinite(fb)):
        raise ValueError("f must be finite at both starting points")
    best, fbest = (a, fa) if abs(fa) < abs(fb) else (b, fb)
    for _ in range(opts.max_iter):
        if abs(fbest) <= opts.tol_residual:
            return best
        if fb == fa:
            break  # flat secant; cannot divide
        t = b - fb * (b - a) / (fb - fa)
        ft = f(t)
        if np.isfinite(ft) and abs(ft) < abs(fbest):
            best, fbest = t, ft
        if abs(fbest) <= opts.tol_residual or abs(t - b) <= opts.tol_step * (1 + abs(t)):
            if abs(fbest) <= opts.tol_residual or np.isfinite(ft):
                return best
        a, fa, b, fb = b, fb, t, ft
    if abs(fbest) <= opts.tol_residual:
        return best
    raise NoConvergence(
        f"secant: no root to |f|<={opts.tol_residual:g} within "
        f"{opts.max_iter} iterations", best=best, residual=abs(fbest))


def bracket_scan(f, lo: float, hi: float, step: float) -> list[tuple[float, float]]:
    """Sample f on [lo, hi] with the given step; return sign-change intervals.

    A sample that is exactly zero counts as one crossing, paired with its
    right neighbour (or returned as the degenerate pair (t, t) when it is
    the last sample); sign tracking restarts after it, so a sign change
    through an exact zero yields a single bracket.  NaN samples are skipped
    (a single warning reports how many).
    """
    if step <= 0:
        raise ValueError("step must be > 0")
    ts = []
    t = float(lo)
    while t <= hi + 1e-12 * max(1.0, abs(hi)):
        ts.append(min(t, hi))
        t += step
    if ts[-1] < hi:
        ts.append(hi)

    brackets = []
    nan_count = 0
    prev_t = prev_f = None
    zero_t = None
    for t in ts:
        ft = f(t)
        if not np.isfinite(ft):
            nan_count += 1
            continue
        if zero_t is not None:
            brackets.append((zero_t, t))
            zero_t = None
            prev_f = None  # crossing consumed by the exact zero
        if ft == 0:
            zero_t = t
        elif prev_f is not None and (prev_f < 0) != (ft < 0):
            brackets.append((prev_t, t))
        prev_t, prev_f = t, ft
    if zero_t is not None:
        brackets.append((zero_t, zero_t))
    if nan_count:
        warnings.warn(f"bracket_scan: skipped {nan_count} NaN samples",
                      RuntimeWarning, stacklevel=2)
    return brackets


def broyden2(F, seed, opts: SolverOptions | None = None) -> np.ndarray:
    """Broyden's (good) method for a 2-D system F(x) = 0.

    a. initial Jacobian by forward differences, step 1e-6 * (1 + |x_i|)
    b. solve J dx = -F, backtrack by halving (<= 8 times) while the max-norm
       residual would increase (opts.damping = "halving")
    c. rank-one Broyden update of J from the accepted step; when a damped
       step still increases the residual, the quasi-Newton model is assumed
       stale and J is recomputed by forward differences once before the
       step is retried

    Returns the first iterate with residual <= opts.tol_residual.  Raises
    SingularJacobian if the difference Jacobian is singular at the seed, and
    NoConvergence (best iterate, residual, trace attached) on a spent budget
    or when the step shrinks below floating-point resolution of x.  Steps
    where F raises ValueError/ArithmeticError (or returns non-finite values)
    count as residual increases and are halved away.
    The returned/attached iterate never has a residual above the seed's.
    """
    opts = opts or SolverOptions()
    x = np.asarray(seed, dtype=float).reshape(2)
    fx = np.asarray(F(x), dtype=float).reshape(2)
    if not np.all(np.isfinite(fx)):
        raise ValueError("F must be finite at the seed")

    def _diff_jacobian(xv, fv):
        h = 1e-6 * (1.0 + np.abs(xv))
        J = np.empty((2, 2))
        for i in range(2):
            xp = xv.copy()
            xp[i] += h[i]
            J[:, i] = (np.asarray(F(xp), dtype=float).reshape(2) - fv) / h[i]
        return J

    Jm = _diff_jacobian(x, fx)
    scale = max(np.max(np.abs(Jm)) ** 2, 1e-300)
    if abs(np.linalg.det(Jm)) <= 1e-14 * scale:
        raise SingularJacobian(
            "forward-difference Jacobian at the seed is numerically singular")

    res = float(np.max(np.abs(fx)))
    trace = [res]
    best_x, best_res = x.copy(), res
    fresh_jacobian = True
    for _ in range(opts.max_iter):
        if best_res <= opts.tol_residual:
            return best_x
        try:
            dx = np.linalg.solve(Jm, -fx)
        except np.linalg.LinAlgError:
            break
        def _eval(xv):
            try:
                out = np.asarray(F(xv), dtype=float).reshape(2)
            except (ValueError, ArithmeticError, ConncoefError):
                return None
            return out if np.all(np.isfinite(out)) else None

        xn = x + dx
        fn = _eval(xn)
        if opts.damping == "halving":
            lam = 1.0
            for _ in range(8):
                if fn is not None and np.max(np.abs(fn)) < res:
                    break
                if not np.any(xn != x):
                    break  # step below the resolution of x; halving is moot
                lam *= 0.5
                xn = x + lam * dx
                fn = _eval(xn)
        if fn is None:
            break
        if (np.max(np.abs(fn)) >= res and not fresh_jacobian
                and opts.damping == "halving"):
            # stale quasi-Newton model: retry the step from a fresh
            # finite-difference Jacobian before accepting an uphill move
            try:
                Jm = _diff_jacobian(x, fx)
            except (ValueError, ArithmeticError, ConncoefError):
                break
            fresh_jacobian = True
            if abs(np.linalg.det(Jm)) <= 1e-14 * max(
                    np.max(np.abs(Jm)) ** 2, 1e-300):
                break
            continue
        step = xn - x
        ss = float(step @ step)
        if ss == 0.0:
            break  # converged to the floating-point floor of the residual
        Jm = Jm + np.outer(fn - fx - Jm @ step, step) / ss
        fresh_jacobian = False
        x, fx = xn, fn
        res = float(np.max(np.abs(fx)))
        trace.append(res)
        if res < best_res:
            best_x, best_res = x.copy(), res
    if best_res <= opts.tol_residual:
        return best_x
    raise NoConvergence(
        f"broyden2: residual {best_res:.3e} > {opts.tol_residual:g} after "
        f"{len(trace) - 1} iterations", best=best_x, residual=best_res,
        trace=trace)
