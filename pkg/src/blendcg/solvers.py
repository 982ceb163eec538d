"""Blended conditional gradients, stand-alone simplex descent and baseline CG variants."""

from __future__ import annotations

import enum
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .core import (DROP_TOL, ActiveSet, Atom, InvariantViolation, IterationRecord, SolverConfig,
                   StepKind, TernarySearch, Termination, local_extreme_indices)
from .linesearch import backtracking, increment, ternary
from .regions import ConvexHull, Region, Simplex
from .sigd import PromoteDrops, sigd_step
from .weak_separation import Negative, OracleCounters, VertexCache, weak_sep


@dataclass
class RunResult:
    final_set: ActiveSet
    trace: list[IterationRecord]
    termination: Termination
    phi_final: float
    initial_f: float
    initial_phi: float
    dual_gap: float
    algo: str = "bcg"
    counters: OracleCounters = field(default_factory=OracleCounters)

    @property
    def x(self) -> np.ndarray:
        return self.final_set.x

    @property
    def f_value(self) -> float:
        return self.trace[-1].f_value if self.trace else self.initial_f

    def step_counts(self) -> dict[str, int]:
        counts = Counter(r.step.value for r in self.trace)
        return {k.value: counts.get(k.value, 0) for k in StepKind}


class Variant(str, enum.Enum):
    VANILLA_FW = "cg"
    AWAY_FW = "acg"
    PAIRWISE_FW = "pcg"
    LAZY_PAIRWISE_FW = "lpcg"


def _dual_gap(region: Region, grad, x) -> float:
    return float(grad @ x - grad @ region.lmo(grad).coords)


class _Run:
    """Bookkeeping shared by all solvers: trace, clock, invariant checks."""

    def __init__(self, obj, region, config: SolverConfig, aset: ActiveSet, counters: OracleCounters,
                 callback: Optional[Callable] = None):
        self.obj, self.region, self.config = obj, region, config
        self.aset = aset
        self.counters = counters
        self.callback = callback
        self.trace: list[IterationRecord] = []
        self.clock = time.perf_counter()
        self.f, self.grad = obj.value_and_gradient(aset.x)
        self.n_fw = 0
        self.n_drop = 0
        self.initial_size = len(aset)

    def elapsed(self) -> float:
        return time.perf_counter() - self.clock

    def out_of_time(self) -> bool:
        return self.elapsed() > self.config.time_limit

    def record(self, t: int, step: StepKind, phi: float, moved: bool = True,
               size_before: Optional[int] = None, phi_before: Optional[float] = None,
               state=None) -> None:
        f_prev = self.f
        if state is not None:
            self.f, self.grad = state
        elif moved:
            self.f, self.grad = self.obj.value_and_gradient(self.aset.x)
        gap = _dual_gap(self.region, self.grad, self.aset.x) if self.config.exact_gap else None
        if step is StepKind.FRANK_WOLFE:
            self.n_fw += 1
        elif step is StepKind.DROP:
            self.n_drop += 1
        rec = IterationRecord(t, self.elapsed(), self.f, phi, gap, step, len(self.aset),
                              self.counters.lmo_calls, self.counters.cache_hits)
        self.trace.append(rec)
        if self.config.check_invariants:
            self.check(rec, f_prev, size_before, phi_before)
        if self.callback is not None:
            self.callback(rec, self.aset, self.grad)

    def check(self, rec: IterationRecord, f_prev: float, size_before, phi_before) -> None:
        self.aset.check()
        if self.config.vanilla and rec.f_value > f_prev + 1e-12 * (1 + abs(f_prev)):
            raise InvariantViolation(f"iteration {rec.iter}: f increased from {f_prev!r} to {rec.f_value!r}")
        if size_before is not None and rec.step is not StepKind.FRANK_WOLFE and len(self.aset) > size_before:
            raise InvariantViolation(f"iteration {rec.iter}: active set grew on a {rec.step.value} step")
        if size_before is not None and len(self.aset) > size_before + 1:
            raise InvariantViolation(f"iteration {rec.iter}: active set grew by more than one")
        if phi_before is not None and rec.step is StepKind.GAP and not rec.phi < phi_before:
            raise InvariantViolation(f"iteration {rec.iter}: phi did not decrease on a gap step")
        if self.n_drop > self.n_fw + self.initial_size:
            raise InvariantViolation(f"iteration {rec.iter}: more drop steps than FW steps allow")

    def result(self, termination: Termination, phi: float, initial_f: float, initial_phi: float,
               algo: str) -> RunResult:
        final_gap = _dual_gap(self.region, self.grad, self.aset.x)
        return RunResult(self.aset, self.trace, termination, phi, initial_f, initial_phi,
                         final_gap, algo, self.counters)


def _as_active_set(region: Region, start) -> ActiveSet:
    aset = start.copy() if isinstance(start, ActiveSet) else ActiveSet.from_atom(start)
    if not region.membership(aset.x, 1e-9):
        raise ValueError("start point is not in the feasible region")
    return aset


def _fw_update(aset: ActiveSet, atom: Atom, gamma: float, point) -> None:
    """Move to (1 - gamma) x + gamma v and update weights; gamma = 1 resets S."""
    if gamma >= 1.0:
        aset.reset(atom)
        return
    if gamma <= 0.0:
        return
    aset.weights *= 1.0 - gamma
    aset.add(atom, gamma)
    aset.x = point
    _prune(aset)


def _pairwise_update(aset: ActiveSet, atom: Atom, away: int, gamma: float, gamma_max: float,
                     point) -> bool:
    """Shift ``gamma`` weight from atom ``away`` to ``atom``; True if ``away`` was dropped."""
    if gamma <= 0.0:
        return False
    away_key = aset.atoms[away].key
    aset.add(atom, gamma)
    i = aset.index(aset.atoms[away])
    aset.weights[i] = 0.0 if gamma >= gamma_max else aset.weights[i] - gamma
    aset.x = point
    dropped = _prune(aset)
    return dropped and all(a.key != away_key for a in aset.atoms)


def _prune(aset: ActiveSet) -> bool:
    mask = aset.weights > DROP_TOL
    if mask.all():
        return False
    aset.keep(mask)
    aset.recompute_iterate()
    return True


def bcg(obj, region: Region, start, config: SolverConfig = SolverConfig(),
        callback: Optional[Callable] = None) -> RunResult:
    """Blended conditional gradients.

    Each iteration compares the local pairwise gap over the active set with
    the gap estimate ``phi``: simplex descent when the local gap is at least
    ``phi``, otherwise a weak-separation call that yields a Frank-Wolfe step
    or a gap step (``phi`` shrinks to min(phi / 2, exact gap)). Stops once
    ``phi <= eps / 2`` at a gap step, which certifies f(x) - f* <= eps.

    ``start`` is an atom or an existing active set; ``callback(record,
    active_set, gradient)`` runs after every iteration.
    """
    aset = _as_active_set(region, start)
    counters = OracleCounters()
    cache = VertexCache(region.ambient_dim, config.cache_cap)
    run = _Run(obj, region, config, aset, counters, callback)
    # initial gap estimate from one exact LMO call
    v0 = region.lmo(run.grad)
    counters.lmo_calls += 1
    cache.insert(v0)
    phi = max(float(run.grad @ (aset.x - v0.coords)), 0.0) / 2
    initial_f, initial_phi = run.f, phi
    if phi <= config.eps / 2:
        return run.result(Termination.PHI_BELOW_EPS, phi, initial_f, initial_phi, "bcg")

    last_progress = 0.0
    termination = Termination.MAX_ITER
    for t in range(1, config.max_iter + 1):
        if run.out_of_time():
            termination = Termination.TIME_LIMIT
            break
        x, f, grad = aset.x, run.f, run.grad
        size_before, phi_before = len(aset), phi
        away, toward, vals = local_extreme_indices(grad, aset)
        if vals[away] - vals[toward] >= phi:
            mode = None
            if config.drop_promotion_eps0 is not None:
                mode = PromoteDrops(config.drop_promotion_eps0, last_progress)
            res = sigd_step(obj, aset, mode, config.line_search, f_x=f, grad=grad)
            step, last_progress = res.kind, res.progress
        else:
            out = weak_sep(region, cache, grad, x, phi, config.K, aset, counters)
            if isinstance(out, Negative):
                phi = min(phi / 2, max(out.true_gap, 0.0))
                last_progress = 0.0
                run.record(t, StepKind.GAP, phi, moved=False, size_before=size_before,
                           phi_before=phi_before)
                if phi <= config.eps / 2:
                    termination = Termination.PHI_BELOW_EPS
                    break
                continue
            v = out.atom
            if config.pairwise_blend and v.key != aset.atoms[away].key:
                gmax = float(aset.weights[away])
                direction = v.coords - aset.atoms[away].coords
                ls = ternary(obj, x, x + direction, config.fw_line_search.budget, f_a=f,
                             gamma_max=gmax)
                _pairwise_update(aset, v, away, ls.gamma, gmax, ls.point)
            else:
                ls = ternary(obj, x, v.coords, config.fw_line_search.budget, f_a=f)
                _fw_update(aset, v, ls.gamma, ls.point)
            step, last_progress = StepKind.FRANK_WOLFE, -ls.delta
        run.record(t, step, phi, size_before=size_before, phi_before=phi_before)
    return run.result(termination, phi, initial_f, initial_phi, "bcg")


def standalone_sigd(obj, k: int, config: SolverConfig = SolverConfig(),
                    callback: Optional[Callable] = None) -> RunResult:
    """Simplex gradient descent over the probability simplex of dimension ``k``.

    Works on coordinates directly: the support of x is the active set, the
    global gradient argmin is the Frank-Wolfe vertex. With
    ``config.fixed_steps`` descent moves a 1/L_f fraction toward the
    boundary point and FW steps use gamma = 2 / (t + 2).
    """
    if k < 2:
        raise ValueError("stand-alone simplex descent needs k >= 2")
    region = Simplex(k)
    x = np.zeros(k)
    x[0] = 1.0
    aset = ActiveSet.from_atom(region.atom(0))
    counters = OracleCounters()
    run = _Run(obj, region, config, aset, counters, callback)
    initial_f = run.f
    frac = min(1.0, 1.0 / obj.L) if config.fixed_steps else None
    termination = Termination.MAX_ITER
    gap = float(run.grad @ x - run.grad.min())
    for t in range(config.max_iter):
        if gap <= config.eps:
            termination = Termination.PHI_BELOW_EPS
            break
        if run.out_of_time():
            termination = Termination.TIME_LIMIT
            break
        f, grad = run.f, run.grad
        support = np.flatnonzero(x > 0)
        gs = grad[support]
        a, s = support[int(np.argmax(gs))], support[int(np.argmin(gs))]
        w = int(np.argmin(grad))
        counters.lmo_calls += 1
        size_before = support.size
        if grad[a] - grad[s] > grad @ x - grad[w]:
            d = np.zeros(k)
            d[support] = gs - gs.mean()
            pos = d > 0
            ratios = np.full(k, np.inf)
            ratios[pos] = x[pos] / d[pos]
            blocking = int(np.argmin(ratios))
            y = x - ratios[blocking] * d
            y[blocking] = 0.0
            y[y < 0] = 0.0
            y /= y.sum()
            if increment(obj, x, y, f) <= 0:
                x, step = y, StepKind.DROP
            elif frac is not None:
                x, step = (1 - frac) * x + frac * y, StepKind.DESCENT
            else:
                x, step = _segment_min(obj, x, y, f, config), StepKind.DESCENT
        else:
            e_w = np.zeros(k)
            e_w[w] = 1.0
            if frac is not None:
                gamma = 2.0 / (t + 2)
                x = (1 - gamma) * x + gamma * e_w
            else:
                x = ternary(obj, x, e_w, config.fw_line_search.budget, f_a=f).point
            step = StepKind.FRANK_WOLFE
        x[x <= DROP_TOL] = 0.0
        x /= x.sum()
        support = np.flatnonzero(x > 0)
        aset.atoms = [region.atom(i) for i in support]
        aset.weights = x[support].copy()
        aset._index = {at.key: j for j, at in enumerate(aset.atoms)}
        aset._matrix = None
        aset.x = x.copy()
        f_prev = run.f
        run.f, run.grad = obj.value_and_gradient(x)
        gap = float(run.grad @ x - run.grad.min())
        if step is StepKind.FRANK_WOLFE:
            run.n_fw += 1
        elif step is StepKind.DROP:
            run.n_drop += 1
        rec = IterationRecord(t + 1, run.elapsed(), run.f, gap, gap if config.exact_gap else None,
                              step, support.size, counters.lmo_calls, 0)
        run.trace.append(rec)
        if config.check_invariants:
            run.check(rec, f_prev, size_before if step is not StepKind.FRANK_WOLFE else None, None)
        if callback is not None:
            callback(rec, aset, run.grad)
    return run.result(termination, gap, initial_f, gap if not run.trace else run.trace[0].phi,
                      "sigd")


def _segment_min(obj, x, y, f, config: SolverConfig):
    ls = config.line_search
    if isinstance(ls, TernarySearch):
        return ternary(obj, x, y, ls.budget, f_a=f).point
    return backtracking(obj, x, y - x, 1.0, ls.shrink, ls.budget, f_x=f,
                        slope=float(obj.gradient(x) @ (y - x)),
                        sufficient_decrease=ls.sufficient_decrease).point


def baseline(variant, obj, region: Region, start, config: SolverConfig = SolverConfig(),
             callback: Optional[Callable] = None) -> RunResult:
    """Frank-Wolfe (cg), away-step (acg), pairwise (pcg) or lazy pairwise (lpcg).

    Non-lazy variants call the exact LMO every iteration, stop on dual gap
    <= eps and log that gap in the ``phi`` column. The lazy variant routes
    vertex search through weak separation with the same gap-estimate
    halving as :func:`bcg`.
    """
    variant = Variant(variant)
    aset = _as_active_set(region, start)
    counters = OracleCounters()
    run = _Run(obj, region, config, aset, counters, callback)
    lazy = variant is Variant.LAZY_PAIRWISE_FW
    cache = VertexCache(region.ambient_dim, config.cache_cap) if lazy else None
    initial_f = run.f
    v0 = region.lmo(run.grad)
    counters.lmo_calls += 1
    if lazy:
        cache.insert(v0)
    gap = max(float(run.grad @ (aset.x - v0.coords)), 0.0)
    phi = gap / 2 if lazy else gap
    initial_phi = phi
    budget = config.fw_line_search.budget
    termination = Termination.MAX_ITER
    v = v0
    if (phi <= config.eps / 2) if lazy else (gap <= config.eps):
        return run.result(Termination.PHI_BELOW_EPS, phi, initial_f, initial_phi, variant.value)
    for t in range(1, config.max_iter + 1):
        if run.out_of_time():
            termination = Termination.TIME_LIMIT
            break
        x, f, grad = aset.x, run.f, run.grad
        size_before, phi_before = len(aset), phi
        away, _, vals = local_extreme_indices(grad, aset)
        if lazy:
            out = weak_sep(region, cache, grad, x, phi, config.K, aset, counters)
            if isinstance(out, Negative):
                phi = min(phi / 2, max(out.true_gap, 0.0))
                run.record(t, StepKind.GAP, phi, moved=False, size_before=size_before,
                           phi_before=phi_before)
                if phi <= config.eps / 2:
                    termination = Termination.PHI_BELOW_EPS
                    break
                continue
            v = out.atom
        fw_gap = float(grad @ x - grad @ v.coords)

        if variant is Variant.VANILLA_FW:
            ls = ternary(obj, x, v.coords, budget, f_a=f)
            _fw_update(aset, v, ls.gamma, ls.point)
            step = StepKind.FRANK_WOLFE
        elif (variant is Variant.AWAY_FW and fw_gap < float(vals[away] - grad @ x)
              and aset.weights[away] < 1.0):
            lam = float(aset.weights[away])
            gmax = lam / (1.0 - lam)
            direction = x - aset.atoms[away].coords
            ls = ternary(obj, x, x + direction, budget, f_a=f, gamma_max=gmax)
            step = StepKind.DESCENT
            if ls.gamma > 0:
                aset.weights *= 1.0 + ls.gamma
                aset.weights[away] -= ls.gamma
                if ls.gamma >= gmax:
                    aset.weights[away] = 0.0
                    step = StepKind.DROP
                aset.x = ls.point
                if _prune(aset) and ls.gamma < gmax:
                    step = StepKind.DROP
        elif variant is Variant.AWAY_FW:
            ls = ternary(obj, x, v.coords, budget, f_a=f)
            _fw_update(aset, v, ls.gamma, ls.point)
            step = StepKind.FRANK_WOLFE
        else:
            if v.key == aset.atoms[away].key:
                ls = ternary(obj, x, v.coords, budget, f_a=f)
                _fw_update(aset, v, ls.gamma, ls.point)
                step = StepKind.FRANK_WOLFE
            else:
                gmax = float(aset.weights[away])
                direction = v.coords - aset.atoms[away].coords
                ls = ternary(obj, x, x + direction, budget, f_a=f, gamma_max=gmax)
                grew = v not in aset and ls.gamma > 0
                dropped = _pairwise_update(aset, v, away, ls.gamma, gmax, ls.point)
                step = StepKind.DROP if dropped and not grew else StepKind.FRANK_WOLFE
        if lazy:
            run.record(t, step, phi, size_before=size_before, phi_before=phi_before)
            continue
        # the exact dual gap at the new iterate is logged and decides termination
        state = obj.value_and_gradient(aset.x)
        v = region.lmo(state[1])
        counters.lmo_calls += 1
        phi = gap = max(float(state[1] @ (aset.x - v.coords)), 0.0)
        run.record(t, step, phi, size_before=size_before, state=state)
        if gap <= config.eps:
            termination = Termination.PHI_BELOW_EPS
            break
    return run.result(termination, phi, initial_f, initial_phi, variant.value)


def post_optimize(obj, run: RunResult, config: SolverConfig = SolverConfig()) -> RunResult:
    """Re-solve over conv S0 of a finished run until the dual gap reaches its d0.

    The restricted run starts from the heaviest atom of S0, so the returned
    active set is a subset of S0 rebuilt only as far as the gap requires. If
    the iteration or time budget ends the restricted run before it certifies
    the gap and f rose by more than d0, the input run is returned unchanged.
    """
    s0 = run.final_set
    d0 = run.dual_gap
    if len(s0) <= 1 or not d0 > 0:
        return run
    hull = ConvexHull(s0.atoms)
    start = s0.atoms[int(np.argmax(s0.weights))]
    cfg = replace(config, eps=d0, drop_promotion_eps0=None, pairwise_blend=False)
    res = bcg(obj, hull, start, cfg)
    # an uncertified restricted run may sit above f(x0) + d0; keep the input then
    if res.termination is not Termination.PHI_BELOW_EPS and res.f_value - run.f_value > d0:
        return run
    res.algo = f"{run.algo}+post"
    return res
