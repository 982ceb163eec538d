"""Independent checks: dual gaps, sampled curvature constants, bound reports, references.

Curvature quantities here are sampled maxima, i.e. lower bounds on the true
constants, and are labelled as estimates everywhere.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import Atom, IterationRecord, StepKind
from .objectives import QuadraticObjective, make_rng, restricted_smoothness
from .regions import Birkhoff, Cube, DagPath, L1Ball, Region, Simplex


@dataclass(frozen=True)
class BoundReport:
    name: str
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    tolerance: float = 0.0

    @classmethod
    def compare(cls, name: str, lhs: float, rhs: float, tolerance: float = 0.0) -> "BoundReport":
        lhs, rhs = float(lhs), float(rhs)
        return cls(name, lhs, rhs, lhs <= rhs + tolerance, rhs - lhs, tolerance)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def write_reports(reports: Iterable[BoundReport], path) -> int:
    n = 0
    with open(path, "w") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")
            n += 1
    return n


def dual_gap(obj, region: Region, x) -> float:
    """max_v <grad f(x), x - v> via one exact LMO call."""
    x = np.asarray(x, dtype=float)
    g = obj.gradient(x)
    return float(g @ x - g @ region.lmo(g).coords)


def polytope_dim(region: Region) -> int:
    if isinstance(region, Simplex):
        return region.k - 1
    if isinstance(region, Birkhoff):
        return (region.n - 1) ** 2
    if isinstance(region, DagPath):
        # arcs minus independent conservation constraints bounds the dimension
        return max(1, region.ambient_dim - region.num_nodes + 2)
    return region.ambient_dim


def sample_vertex_sets(region: Region, count: int, seed: int = 0, max_size: int = 8,
                       min_size: int = 2) -> list[list[Atom]]:
    """Random sets of distinct vertices with sizes in [min_size, min(max_size, 2 dim P)]."""
    rng = make_rng(seed)
    cap = max(1, min(max_size, 2 * polytope_dim(region)))
    out = []
    for _ in range(count):
        size = int(rng.integers(min(min_size, cap), cap + 1))
        atoms, keys = [], set()
        for _ in range(20 * size):
            if len(atoms) == size:
                break
            a = region.random_vertex(rng)
            if a.key not in keys:
                keys.add(a.key)
                atoms.append(a)
        out.append(atoms)
    return out


def curvature_estimate(obj, region: Region, samples: int, seed: int = 0,
                       max_size: int = 8) -> float:
    """Sampled lower bound on the curvature constant C.

    Each sample draws a vertex set S (the same sets
    :func:`simplicial_curvature_estimate` uses for the same ``seed``), two
    points x, y in conv S and gamma in (0, 1], and evaluates
    2 [f(x + gamma (y - x)) - f(x) - gamma <grad f(x), y - x>] / gamma^2.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    sets = sample_vertex_sets(region, samples, seed, max_size)
    rng = make_rng(seed + 1_000_003)
    best = 0.0
    for atoms in sets:
        V = np.vstack([a.coords for a in atoms])
        wx, wy = rng.dirichlet(np.full(len(atoms), 0.3), size=2)
        x, y = wx @ V, wy @ V
        gamma = 1.0 - rng.random()
        d = y - x
        line = getattr(obj, "line", None)
        rise = line(x, d)(gamma) if line is not None else obj(x + gamma * d) - obj(x)
        val = 2.0 * (rise - gamma * float(obj.gradient(x) @ d)) / gamma ** 2
        best = max(best, val)
    return best


@dataclass
class SimplicialEstimate:
    value: float
    reports: list[BoundReport]


def simplicial_curvature_estimate(obj: QuadraticObjective, region: Region, trials: int,
                                  seed: int = 0, max_size: int = 8) -> SimplicialEstimate:
    """Max of the restricted smoothness over random vertex sets, |S| <= 2 dim P.

    Every set also yields a report against the cap L D^2 |S| / 4.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    L, D = obj.L, region.diameter()
    best, reports = 0.0, []
    for atoms in sample_vertex_sets(region, trials, seed, max_size):
        ls = restricted_smoothness(obj, atoms)
        best = max(best, ls)
        rhs = L * D * D * len(atoms) / 4
        reports.append(BoundReport.compare("restricted_smoothness_cap", ls, rhs, 1e-9 * max(1.0, rhs)))
    return SimplicialEstimate(best, reports)


def restricted_smoothness_report(obj: QuadraticObjective, region: Region,
                                 atoms: Sequence[Atom]) -> BoundReport:
    ls = restricted_smoothness(obj, atoms)
    D = region.diameter()
    rhs = obj.L * D * D * len(atoms) / 4
    return BoundReport.compare("restricted_smoothness_cap", ls, rhs, 1e-9 * max(1.0, rhs))


def simplex_strong_convexity_floor(alpha: float, k: int) -> float:
    """Lower bound 4 alpha / k on the geometric strong convexity over the k-simplex."""
    if alpha < 0 or k < 2:
        raise ValueError("need alpha >= 0 and k >= 2")
    return 4.0 * alpha / k


def sigd_rate(alpha: float, L: float, k: int) -> float:
    """Per-iteration contraction 1 - alpha / (4 L k) of the primal gap on the simplex."""
    return 1.0 - alpha / (4.0 * L * k)


def gradient_check(obj, points, h: float = 1e-6, tolerance: float = 1e-5) -> BoundReport:
    """Central finite differences against ``obj.gradient``; reports the max relative error."""
    worst = 0.0
    for x in points:
        x = np.asarray(x, dtype=float)
        g = obj.gradient(x)
        fd = np.empty_like(x)
        for i in range(x.size):
            e = np.zeros_like(x)
            e[i] = h
            fd[i] = (obj(x + e) - obj(x - e)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(fd - g)) / (1.0 + np.max(np.abs(g)))))
    return BoundReport.compare("gradient_check", worst, tolerance)


def fw_progress_reports(trace: Sequence[IterationRecord], initial_f: float, K: float,
                        curvature: float) -> list[BoundReport]:
    """Per FW step: f decrease versus phi / (2K) min(1, phi / (K C)).

    ``curvature`` is normally a sampled lower bound, so failures here are
    diagnostic rather than proof of a bug.
    """
    out, prev = [], initial_f
    for rec in trace:
        if rec.step is StepKind.FRANK_WOLFE:
            phi = rec.phi
            need = phi / (2 * K) * min(1.0, phi / (K * curvature)) if curvature > 0 else phi / (2 * K)
            out.append(BoundReport.compare(f"fw_progress@{rec.iter}", need, prev - rec.f_value,
                                           1e-12 * (1 + abs(prev))))
        prev = rec.f_value
    return out


def log_gap_fit(iters, gaps) -> tuple[float, float]:
    """Least-squares slope and R^2 of log2(gap) against iteration."""
    t = np.asarray(iters, dtype=float)
    y = np.log2(np.asarray(gaps, dtype=float))
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss_tot if ss_tot > 0 else 1.0
    return float(coef[0]), r2


# -- reference solutions by projected gradient ---------------------------------

def project_simplex(v, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto {x >= 0, sum x = radius} by sorting."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    ind = np.arange(1, v.size + 1)
    rho = ind[u - css / ind > 0][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def project(region: Region, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if isinstance(region, Simplex):
        return project_simplex(v)
    if isinstance(region, Cube):
        return np.clip(v, 0.0, 1.0)
    if isinstance(region, L1Ball):
        if np.abs(v).sum() <= region.tau:
            return v.copy()
        return np.sign(v) * project_simplex(np.abs(v), region.tau)
    raise NotImplementedError(f"no projection for {region!r}")


def projected_gradient_reference(obj: QuadraticObjective, region: Region, max_iter: int = 200_000,
                                 gap_tol: float = 1e-13, x0: Optional[np.ndarray] = None):
    """Accelerated projected gradient with restarts; returns (x*, f*).

    Independent of every conditional gradient code path, so usable as a
    reference optimum on the simplex, the cube and the l1 ball. Stops once
    the dual gap, an upper bound on f(x) - f*, is at most ``gap_tol``.
    """
    L = obj.L
    x = project(region, np.zeros(region.ambient_dim) if x0 is None else x0)
    if L == 0:
        return x, obj(x)
    y, t, f_x = x.copy(), 1.0, obj(x)
    for it in range(max_iter):
        x_new = project(region, y - obj.gradient(y) / L)
        f_new = obj(x_new)
        if f_new > f_x and t > 1.0:
            # function value restart; a plain projected step is always accepted
            y, t = x.copy(), 1.0
            continue
        t_new = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = x_new + (t - 1) / t_new * (x_new - x)
        x, f_x, t = x_new, f_new, t_new
        if it % 20 == 0 and dual_gap(obj, region, x) <= gap_tol:
            break
    return x, f_x


def polish_on_simplex(obj: QuadraticObjective, x, support_tol: float = 1e-10):
    """Exact minimizer over the face of the simplex spanned by the support of ``x``.

    Solves the equality-constrained least squares KKT system on that face and
    keeps the result only if it is feasible and optimal for the whole simplex
    (gradient coordinates off the support are no smaller than on it).
    Returns ``(x, f)``, unchanged when the check fails.
    """
    x = np.asarray(x, dtype=float)
    support = np.flatnonzero(x > support_tol)
    H = obj.hessian()[np.ix_(support, support)]
    A = obj.A.toarray() if hasattr(obj.A, "toarray") else obj.A
    rhs = 2.0 * A[:, support].T @ obj.b
    s = support.size
    kkt = np.zeros((s + 1, s + 1))
    kkt[:s, :s] = H
    kkt[:s, s] = kkt[s, :s] = 1.0
    try:
        sol = np.linalg.solve(kkt, np.append(rhs, 1.0))
    except np.linalg.LinAlgError:
        return x, obj(x)
    cand = np.zeros_like(x)
    cand[support] = sol[:s]
    g = obj.gradient(cand)
    scale = 1e-9 * (1 + np.max(np.abs(g)))
    if cand.min() < 0 or (g.min() < g[support].max() - scale):
        return x, obj(x)
    return cand, obj(cand)
