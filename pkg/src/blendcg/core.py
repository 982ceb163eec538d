"""Shared data model: atoms, active sets, step kinds, traces and solver configuration."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

import numpy as np

DROP_TOL = 1e-12
SUM_TOL = 1e-12


class InvariantViolation(RuntimeError):
    """Raised when a solver detects a broken invariant during a checked run."""


class DegenerateActiveSet(ValueError):
    pass


class Atom:
    """A vertex of a feasible region.

    Identity is the structural ``key`` (coordinate index, permutation, arc set),
    never the floating point coordinates. The dense view may be supplied
    directly or built on first access from ``factory``.
    """

    __slots__ = ("key", "_coords", "_factory")

    def __init__(self, key: Hashable, coords: Optional[np.ndarray] = None,
                 factory: Optional[Callable[[], np.ndarray]] = None):
        if coords is None and factory is None:
            raise ValueError("atom needs coords or a factory")
        self.key = key
        self._coords = None if coords is None else np.asarray(coords, dtype=float)
        self._factory = factory

    @property
    def coords(self) -> np.ndarray:
        if self._coords is None:
            self._coords = np.asarray(self._factory(), dtype=float)
            self._factory = None
        return self._coords

    def __eq__(self, other):
        return isinstance(other, Atom) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"Atom({self.key!r})"


class ActiveSet:
    """Atoms with barycentric weights and the cached iterate they represent.

    Mutated in place by the owning solver run only.
    """

    def __init__(self, atoms: Sequence[Atom], weights, iterate=None):
        self.atoms = list(atoms)
        self.weights = np.asarray(weights, dtype=float).copy()
        if len(self.atoms) != self.weights.shape[0]:
            raise ValueError("atoms and weights differ in length")
        if len({a.key for a in self.atoms}) != len(self.atoms):
            raise ValueError("duplicate atom in active set")
        self._index = {a.key: i for i, a in enumerate(self.atoms)}
        self._matrix = None
        self.x = self.matrix.T @ self.weights if iterate is None else np.array(iterate, dtype=float)

    @classmethod
    def from_atom(cls, atom: Atom) -> "ActiveSet":
        return cls([atom], [1.0], atom.coords.copy())

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom: Atom):
        return atom.key in self._index

    def index(self, atom: Atom) -> int:
        return self._index[atom.key]

    @property
    def matrix(self) -> np.ndarray:
        """Atoms stacked as rows, shape (|S|, dim)."""
        if self._matrix is None:
            self._matrix = np.vstack([a.coords for a in self.atoms])
        return self._matrix

    def copy(self) -> "ActiveSet":
        new = ActiveSet.__new__(ActiveSet)
        new.atoms = list(self.atoms)
        new.weights = self.weights.copy()
        new._index = dict(self._index)
        new._matrix = self._matrix
        new.x = self.x.copy()
        return new

    def add(self, atom: Atom, weight: float) -> int:
        """Append ``atom`` (or increase its weight) without touching the iterate."""
        i = self._index.get(atom.key)
        if i is not None:
            self.weights[i] += weight
            return i
        self.atoms.append(atom)
        self.weights = np.append(self.weights, weight)
        self._index[atom.key] = len(self.atoms) - 1
        if self._matrix is not None:
            self._matrix = np.vstack([self._matrix, atom.coords])
        return len(self.atoms) - 1

    def keep(self, mask) -> None:
        """Restrict to atoms where ``mask`` is true and renormalize the weights."""
        mask = np.asarray(mask, dtype=bool)
        if mask.all():
            return
        if not mask.any():
            raise DegenerateActiveSet("every weight is below the drop threshold")
        self.atoms = [a for a, m in zip(self.atoms, mask) if m]
        w = self.weights[mask]
        self.weights = w / w.sum()
        self._index = {a.key: i for i, a in enumerate(self.atoms)}
        if self._matrix is not None:
            self._matrix = self._matrix[mask]

    def reset(self, atom: Atom) -> None:
        self.atoms = [atom]
        self.weights = np.ones(1)
        self._index = {atom.key: 0}
        self._matrix = None
        self.x = atom.coords.copy()

    def recompute_iterate(self) -> None:
        self.x = self.matrix.T @ self.weights

    def check(self, tol: float = 1e-9) -> None:
        """Raise :class:`InvariantViolation` if any active-set invariant fails."""
        w = self.weights
        if np.any(w < 0):
            raise InvariantViolation(f"negative weight {w.min():.3e}")
        if abs(w.sum() - 1.0) > SUM_TOL * max(1, len(w)):
            raise InvariantViolation(f"weights sum to {w.sum()!r}")
        if len(self._index) != len(self.atoms):
            raise InvariantViolation("duplicate atom")
        drift = np.max(np.abs(self.x - iterate_of(self)))
        if drift > tol * (1 + np.max(np.abs(self.x))):
            raise InvariantViolation(f"iterate drifted from its weights by {drift:.3e}")


def iterate_of(active_set: ActiveSet) -> np.ndarray:
    """Recompute sum_i w_i v_i as a fresh vector."""
    return active_set.matrix.T @ active_set.weights


def prune(active_set: ActiveSet, tol: float = DROP_TOL) -> ActiveSet:
    """Return a copy without atoms of weight <= ``tol``, weights renormalized.

    The cached iterate is recomputed from the surviving atoms; it moves by at
    most ``|S| * tol * max ||v||_inf``.
    """
    out = active_set.copy()
    mask = out.weights > tol
    if not mask.all():
        out.keep(mask)
        out.recompute_iterate()
    return out


def local_extremes(gradient, active_set: ActiveSet):
    """Away and toward atoms of the active set for a linear objective.

    Returns ``(away_atom, toward_atom, away_value, toward_value)``. Ties go to
    the lowest index.
    """
    i, j, vals = local_extreme_indices(gradient, active_set)
    return active_set.atoms[i], active_set.atoms[j], float(vals[i]), float(vals[j])


def local_extreme_indices(gradient, active_set: ActiveSet):
    if len(active_set) == 0:
        raise DegenerateActiveSet("empty active set")
    vals = active_set.matrix @ np.asarray(gradient, dtype=float)
    return int(np.argmax(vals)), int(np.argmin(vals)), vals


class StepKind(str, enum.Enum):
    FRANK_WOLFE = "FW"
    GAP = "gap"
    DESCENT = "descent"
    DROP = "drop"


class Termination(str, enum.Enum):
    PHI_BELOW_EPS = "phi_below_eps"
    MAX_ITER = "max_iter"
    TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    elapsed: float
    f_value: float
    phi: float
    dual_gap: Optional[float]
    step: StepKind
    active_size: int
    lmo_calls: int
    cache_hits: int


@dataclass(frozen=True)
class TernarySearch:
    budget: int = 64

    def __post_init__(self):
        if self.budget <= 0:
            raise ValueError("ternary budget must be positive")


@dataclass(frozen=True)
class Backtracking:
    shrink: float = 0.7
    sufficient_decrease: float = 0.0
    budget: int = 100

    def __post_init__(self):
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if self.sufficient_decrease < 0 or self.budget <= 0:
            raise ValueError("invalid backtracking parameters")


@dataclass(frozen=True)
class SolverConfig:
    K: float = 1.0
    eps: float = 1e-8
    max_iter: int = 10_000
    time_limit: float = math.inf
    # used by simplex descent steps; Frank-Wolfe segments always use ternary search
    line_search: TernarySearch | Backtracking = field(default_factory=TernarySearch)
    fw_line_search: TernarySearch = field(default_factory=TernarySearch)
    drop_promotion_eps0: Optional[float] = None
    pairwise_blend: bool = False
    fixed_steps: bool = False
    seed: int = 0
    exact_gap: bool = False
    check_invariants: bool = False
    cache_cap: Optional[int] = None

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iter <= 0 or not self.time_limit > 0:
            raise ValueError("budgets must be positive")
        if self.drop_promotion_eps0 is not None and self.drop_promotion_eps0 < 0:
            raise ValueError("drop promotion bound must be non-negative")

    @property
    def vanilla(self) -> bool:
        return self.drop_promotion_eps0 is None and not self.fixed_steps
