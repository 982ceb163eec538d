"""Projection-free gradient step over the convex hull of an active set.

A single step either lands on a face of conv S (drop) or moves inside it by
line search (descent); neither needs a projection or a smoothness estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import DROP_TOL, ActiveSet, Backtracking, StepKind, TernarySearch
from .linesearch import LineSearchError, backtracking, increment, ternary


@dataclass(frozen=True)
class PromoteDrops:
    eps0: float
    last_progress: float

    @property
    def slack(self) -> float:
        return min(max(self.last_progress, 0.0) / 2, self.eps0)


@dataclass
class SigdResult:
    active_set: ActiveSet
    kind: StepKind
    progress: float
    f_value: float


def project_direction(c) -> np.ndarray:
    """Orthogonal projection onto {z : sum z = 0}."""
    c = np.asarray(c, dtype=float)
    return c - c.mean()


def ratio_test(lam, d) -> float:
    """Largest eta >= 0 with lam - eta d >= 0."""
    lam = np.asarray(lam, dtype=float)
    d = np.asarray(d, dtype=float)
    pos = d > 0
    if not pos.any():
        raise ValueError("direction has no positive entry")
    return float(np.min(lam[pos] / d[pos]))


def sigd_step(obj, active_set: ActiveSet, mode: Optional[PromoteDrops] = None,
              line_search: TernarySearch | Backtracking = TernarySearch(),
              f_x: Optional[float] = None, grad=None) -> SigdResult:
    """One simplex gradient descent step on ``active_set`` (mutated in place).

    ``mode=None`` is the plain acceptance test f(y) <= f(x); a
    :class:`PromoteDrops` mode accepts a bounded increase to favour drops.
    """
    if len(active_set) == 0:
        raise ValueError("empty active set")
    x = active_set.x
    if f_x is None or grad is None:
        f_x, grad = obj.value_and_gradient(x)
    V = active_set.matrix
    lam = active_set.weights
    c = V @ grad
    d = project_direction(c)
    if np.max(np.abs(d)) <= 1e-12 * (1 + np.max(np.abs(c))):
        active_set.reset(active_set.atoms[0])
        delta = increment(obj, x, active_set.x, f_x)
        return SigdResult(active_set, StepKind.DROP, -delta, f_x + delta)

    pos = d > 0
    ratios = np.full(lam.shape, np.inf)
    ratios[pos] = lam[pos] / d[pos]
    blocking = int(np.argmin(ratios))
    eta = float(ratios[blocking])
    tau = lam - eta * d
    tau[blocking] = 0.0
    tau[tau < 0] = 0.0
    tau /= tau.sum()
    y = V.T @ tau
    rise = increment(obj, x, y, f_x)

    slack = 0.0 if mode is None else mode.slack
    if rise <= slack:
        active_set.weights = tau
        active_set.keep(tau > DROP_TOL)
        active_set.recompute_iterate()
        delta = increment(obj, x, active_set.x, f_x)
        return SigdResult(active_set, StepKind.DROP, -delta, f_x + delta)

    if isinstance(line_search, Backtracking):
        slope = float(grad @ (y - x))
        res = backtracking(obj, x, y - x, 1.0, line_search.shrink, line_search.budget,
                           f_x=f_x, slope=slope,
                           sufficient_decrease=line_search.sufficient_decrease)
    else:
        res = ternary(obj, x, y, line_search.budget, f_a=f_x)
    g = res.gamma
    if g == 0.0:
        raise LineSearchError("line search found no decrease on a descent segment")
    active_set.weights = lam + g * (tau - lam)
    active_set.x = x + g * (y - x)
    return SigdResult(active_set, StepKind.DESCENT, -res.delta, res.f_value)
