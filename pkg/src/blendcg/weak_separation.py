"""Lazified linear minimization: active set and cache first, exact LMO last."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import ActiveSet, Atom
from .regions import Region


class VertexCache:
    """Insertion-ordered store of every atom the exact LMO has returned.

    Coordinates are kept in a growing row buffer so a scan is one matvec.
    ``cap`` bounds the size (oldest entries evicted); ``None`` means unbounded.
    """

    def __init__(self, dim: int, cap: Optional[int] = None):
        self.dim = dim
        self.cap = cap
        self.atoms: list[Atom] = []
        self.keys: set = set()
        self._buf = np.empty((8, dim))

    def __len__(self):
        return len(self.atoms)

    def __contains__(self, atom: Atom):
        return atom.key in self.keys

    def insert(self, atom: Atom) -> bool:
        if atom.key in self.keys:
            return False
        if self.cap is not None and len(self.atoms) >= self.cap:
            old = self.atoms.pop(0)
            self.keys.discard(old.key)
            self._buf[: len(self.atoms)] = self._buf[1: len(self.atoms) + 1]
        n = len(self.atoms)
        if n == self._buf.shape[0]:
            grown = np.empty((2 * n, self.dim))
            grown[:n] = self._buf
            self._buf = grown
        self._buf[n] = atom.coords
        self.atoms.append(atom)
        self.keys.add(atom.key)
        return True

    def values(self, c) -> np.ndarray:
        return self._buf[: len(self.atoms)] @ c


@dataclass(frozen=True)
class Positive:
    atom: Atom
    improvement: float
    from_cache: bool


@dataclass(frozen=True)
class Negative:
    true_gap: float
    atom: Atom


SeparationOutcome = Union[Positive, Negative]


@dataclass
class OracleCounters:
    lmo_calls: int = 0
    cache_hits: int = 0
    calls: int = 0


def weak_sep(region: Region, cache: VertexCache, c, x, phi: float, K: float,
             active_set: Optional[ActiveSet] = None,
             counters: Optional[OracleCounters] = None) -> SeparationOutcome:
    """Find a vertex y with <c, x - y> >= phi / K, or certify none beats phi.

    Scan order is the active set, then the cache in insertion order; the first
    atom clearing the threshold is returned. Otherwise the exact LMO is
    called and its output cached. A negative answer carries the exact gap
    <c, x - y*> for the LMO minimizer y*.
    """
    if not phi > 0:
        raise ValueError("phi must be positive")
    if K < 1:
        raise ValueError("K must be >= 1")
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    if c.shape != (region.ambient_dim,) or x.shape != c.shape:
        raise ValueError(f"expected vectors of length {region.ambient_dim}")
    counters = counters if counters is not None else OracleCounters()
    counters.calls += 1
    threshold = phi / K
    cx = float(c @ x)
    if active_set is not None and len(active_set):
        gains = cx - active_set.matrix @ c
        hit = np.flatnonzero(gains >= threshold)
        if hit.size:
            counters.cache_hits += 1
            i = int(hit[0])
            return Positive(active_set.atoms[i], float(gains[i]), True)
    if len(cache):
        gains = cx - cache.values(c)
        hit = np.flatnonzero(gains >= threshold)
        if hit.size:
            counters.cache_hits += 1
            i = int(hit[0])
            return Positive(cache.atoms[i], float(gains[i]), True)
    counters.lmo_calls += 1
    y = region.lmo(c)
    cache.insert(y)
    gap = cx - float(c @ y.coords)
    if gap >= threshold:
        return Positive(y, gap, False)
    return Negative(gap, y)
