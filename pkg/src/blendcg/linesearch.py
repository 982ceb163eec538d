"""Segment minimization shared by all solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class LineSearchError(RuntimeError):
    pass


@dataclass(frozen=True)
class SegmentSearchResult:
    gamma: float
    point: np.ndarray
    f_value: float
    evals: int
    # f(point) - f(start), resolved below the rounding level of f_value
    delta: float = 0.0


def _increment(obj, a, d, f_a):
    """gamma -> f(a + gamma d) - f(a), plus f(a) and the evaluations spent on it."""
    line = getattr(obj, "line", None)
    if line is not None:
        return line(a, d), (obj(a) if f_a is None else f_a), 0 if f_a is not None else 1
    base = obj(a) if f_a is None else f_a
    return (lambda g: obj(a + g * d) - base), base, 0 if f_a is not None else 1


def increment(obj, a, b, f_a: Optional[float] = None) -> float:
    """f(b) - f(a) without rounding against the magnitude of f."""
    a = np.asarray(a, dtype=float)
    phi, _, _ = _increment(obj, a, np.asarray(b, dtype=float) - a, f_a)
    return float(phi(1.0))


def ternary(obj, a, b, budget: int = 64, f_a: Optional[float] = None, rel_tol: float = 1e-12,
            gamma_max: float = 1.0) -> SegmentSearchResult:
    """Minimize a convex f over a + gamma (b - a), gamma in [0, gamma_max].

    The interval shrinks by 2/3 per iteration; the search stops after
    ``budget`` iterations or once the bracket is shorter than ``rel_tol``
    times ``gamma_max``. Both endpoints are candidates, preferred on ties.
    """
    if budget <= 0:
        raise ValueError("ternary search needs a positive budget")
    a = np.asarray(a, dtype=float)
    d = np.asarray(b, dtype=float) - a
    phi, f_a, evals = _increment(obj, a, d, f_a)
    lo, hi = 0.0, float(gamma_max)
    for _ in range(budget):
        if hi - lo <= rel_tol * gamma_max:
            break
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if phi(m1) < phi(m2):
            hi = m2
        else:
            lo = m1
        evals += 2
    best_g, best_delta = 0.0, 0.0
    for g in (gamma_max, (lo + hi) / 2):
        delta = phi(g)
        evals += 1
        if delta < best_delta:
            best_g, best_delta = g, delta
    return SegmentSearchResult(best_g, a + best_g * d, float(f_a + best_delta), evals,
                               float(best_delta))


def backtracking(obj, x, direction, gamma_max: float = 1.0, shrink: float = 0.7,
                 budget: int = 100, f_x: Optional[float] = None, slope: Optional[float] = None,
                 sufficient_decrease: float = 0.0) -> SegmentSearchResult:
    """Largest gamma = gamma_max * shrink^j with f(x + gamma d) < f(x).

    With ``sufficient_decrease`` > 0 the Armijo condition
    f(x + gamma d) <= f(x) + c gamma <grad, d> is required instead, where
    ``slope`` is <grad f(x), d>.
    """
    if not 0 < shrink < 1 or budget <= 0:
        raise ValueError("invalid backtracking parameters")
    x = np.asarray(x, dtype=float)
    d = np.asarray(direction, dtype=float)
    phi, f_x, evals = _increment(obj, x, d, f_x)
    if sufficient_decrease > 0 and slope is None:
        raise ValueError("Armijo backtracking needs the directional derivative")
    gamma = float(gamma_max)
    for _ in range(budget):
        delta = phi(gamma)
        evals += 1
        if sufficient_decrease > 0:
            ok = delta <= sufficient_decrease * gamma * slope and delta < 0
        else:
            ok = delta < 0
        if ok:
            return SegmentSearchResult(gamma, x + gamma * d, float(f_x + delta), evals,
                                       float(delta))
        gamma *= shrink
    raise LineSearchError(f"no decrease within {budget} backtracking steps")


def exact_quadratic(obj, a, b) -> float:
    """Closed-form minimizer over [0, 1] of f(a + gamma (b - a)) for f = ||Ax - b||^2.

    For test oracles only.
    """
    d = np.asarray(b, dtype=float) - a
    Ad = obj.A @ d
    curv = float(Ad @ Ad)
    if curv == 0.0:
        return 0.0 if obj.gradient(a) @ d >= 0 else 1.0
    return float(np.clip(-(obj.residual(a) @ Ad) / curv, 0.0, 1.0))
