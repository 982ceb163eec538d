"""Feasible regions with exact linear minimization oracles.

Every region exposes ``lmo(c)`` returning an :class:`~blendcg.core.Atom`,
``membership(x, tol)``, ``diameter()`` and a few helpers used by solvers and
tests (``start_atom``, ``random_vertex``, ``vertices``).
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from collections import deque
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import nnls

from .assignment import solve_assignment
from .core import Atom


class Region(ABC):
    ambient_dim: int

    @abstractmethod
    def lmo(self, c) -> Atom:
        """Vertex minimizing <c, v> over the region."""

    @abstractmethod
    def membership(self, x, tol: float = 1e-9) -> bool:
        ...

    @abstractmethod
    def diameter(self) -> float:
        ...

    @abstractmethod
    def start_atom(self) -> Atom:
        ...

    @abstractmethod
    def random_vertex(self, rng: np.random.Generator) -> Atom:
        ...

    def vertices(self) -> Iterator[Atom]:
        raise NotImplementedError(f"{type(self).__name__} does not enumerate vertices")

    def _check_dim(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.ambient_dim,):
            raise ValueError(f"expected a vector of length {self.ambient_dim}, got shape {c.shape}")
        return c

    @property
    def name(self) -> str:
        return type(self).__name__


class Simplex(Region):
    """Probability simplex conv{e_1, ..., e_k}."""

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("simplex dimension must be >= 1")
        self.k = self.ambient_dim = int(k)

    def atom(self, i: int) -> Atom:
        e = np.zeros(self.k)
        e[i] = 1.0
        return Atom(("e", int(i)), e)

    def lmo(self, c) -> Atom:
        return self.atom(int(np.argmin(self._check_dim(c))))

    def membership(self, x, tol=1e-9) -> bool:
        x = self._check_dim(x)
        return bool(np.all(x >= -tol) and abs(x.sum() - 1.0) <= tol)

    def diameter(self) -> float:
        return math.sqrt(2.0) if self.k >= 2 else 0.0

    def start_atom(self) -> Atom:
        return self.atom(0)

    def random_vertex(self, rng):
        return self.atom(int(rng.integers(self.k)))

    def vertices(self):
        return (self.atom(i) for i in range(self.k))

    def __repr__(self):
        return f"Simplex({self.k})"


class Cube(Region):
    """Unit hypercube [0, 1]^n."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("cube dimension must be >= 1")
        self.n = self.ambient_dim = int(n)

    def atom(self, bits) -> Atom:
        bits = np.asarray(bits, dtype=bool)
        return Atom(("cube", bits.tobytes()), bits.astype(float))

    def lmo(self, c) -> Atom:
        return self.atom(self._check_dim(c) < 0)

    def membership(self, x, tol=1e-9) -> bool:
        x = self._check_dim(x)
        return bool(np.all(x >= -tol) and np.all(x <= 1 + tol))

    def diameter(self) -> float:
        return math.sqrt(self.n)

    def start_atom(self) -> Atom:
        bits = np.zeros(self.n, dtype=bool)
        bits[0] = True
        return self.atom(bits)

    def random_vertex(self, rng):
        return self.atom(rng.integers(0, 2, self.n).astype(bool))

    def vertices(self):
        if self.n > 20:
            raise ValueError("refusing to enumerate more than 2^20 cube vertices")
        return (self.atom(bits) for bits in itertools.product((False, True), repeat=self.n))

    def __repr__(self):
        return f"Cube({self.n})"


class L1Ball(Region):
    """Scaled cross-polytope {x : ||x||_1 <= tau}."""

    def __init__(self, n: int, tau: float = 1.0):
        if n < 1:
            raise ValueError("dimension must be >= 1")
        if not tau > 0:
            raise ValueError("tau must be positive")
        self.n = self.ambient_dim = int(n)
        self.tau = float(tau)

    def atom(self, i: int, sign: int) -> Atom:
        v = np.zeros(self.n)
        v[i] = sign * self.tau
        return Atom(("l1", int(i), int(sign)), v)

    def lmo(self, c) -> Atom:
        c = self._check_dim(c)
        i = int(np.argmax(np.abs(c)))
        return self.atom(i, -1 if c[i] >= 0 else 1)

    def membership(self, x, tol=1e-9) -> bool:
        return bool(np.abs(self._check_dim(x)).sum() <= self.tau + tol)

    def diameter(self) -> float:
        return 2.0 * self.tau

    def start_atom(self) -> Atom:
        return self.atom(0, 1)

    def random_vertex(self, rng):
        return self.atom(int(rng.integers(self.n)), int(rng.choice((-1, 1))))

    def vertices(self):
        return (self.atom(i, s) for i in range(self.n) for s in (1, -1))

    def __repr__(self):
        return f"L1Ball({self.n}, tau={self.tau})"


class Birkhoff(Region):
    """Doubly stochastic n x n matrices, flattened row-major.

    Vertices are stored as permutations; the dense n^2 view is built on demand.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("Birkhoff order must be >= 1")
        self.n = int(n)
        self.ambient_dim = self.n * self.n

    def atom(self, perm) -> Atom:
        perm = tuple(int(p) for p in perm)
        n = self.n

        def dense():
            m = np.zeros((n, n))
            m[np.arange(n), perm] = 1.0
            return m.ravel()

        return Atom(("perm", perm), factory=dense)

    def lmo(self, c) -> Atom:
        c = self._check_dim(c)
        return self.atom(solve_assignment(c.reshape(self.n, self.n)))

    def membership(self, x, tol=1e-9) -> bool:
        m = self._check_dim(x).reshape(self.n, self.n)
        return bool(np.all(m >= -tol)
                    and np.all(np.abs(m.sum(axis=0) - 1) <= tol)
                    and np.all(np.abs(m.sum(axis=1) - 1) <= tol))

    def diameter(self) -> float:
        return math.sqrt(2.0 * self.n) if self.n >= 2 else 0.0

    def start_atom(self) -> Atom:
        return self.atom(range(self.n))

    def random_vertex(self, rng):
        return self.atom(rng.permutation(self.n))

    def vertices(self):
        if self.n > 8:
            raise ValueError("refusing to enumerate more than 8! permutations")
        return (self.atom(p) for p in itertools.permutations(range(self.n)))

    def __repr__(self):
        return f"Birkhoff({self.n})"


class DagPath(Region):
    """Convex hull of source-sink path incidence vectors of a DAG.

    Coordinates are indexed by arc. The LMO is a shortest path by dynamic
    programming in topological order, so negative arc costs are fine.
    """

    def __init__(self, num_nodes: int, arcs: Sequence[tuple[int, int]], source: int, sink: int):
        self.num_nodes = int(num_nodes)
        self.arcs = [(int(u), int(v)) for u, v in arcs]
        self.source, self.sink = int(source), int(sink)
        self.ambient_dim = len(self.arcs)
        for u, v in self.arcs:
            if not (0 <= u < self.num_nodes and 0 <= v < self.num_nodes):
                raise ValueError(f"arc ({u}, {v}) references a missing node")
        if not (0 <= self.source < self.num_nodes and 0 <= self.sink < self.num_nodes):
            raise ValueError("source or sink out of range")
        self.tail = np.array([u for u, _ in self.arcs], dtype=int)
        self.head = np.array([v for _, v in self.arcs], dtype=int)
        self._out = [[] for _ in range(self.num_nodes)]
        self._in = [[] for _ in range(self.num_nodes)]
        for a, (u, v) in enumerate(self.arcs):
            self._out[u].append(a)
            self._in[v].append(a)
        self.order = self._topological_order()
        self._reaches_sink = self._backward_reach()
        self._from_source = self._forward_reach()
        if not self._reaches_sink[self.source]:
            raise ValueError("sink is unreachable from source")
        # only nodes on some source-sink path matter for the DP
        live = self._from_source & self._reaches_sink
        self._live_order = [v for v in self.order if live[v]]
        self._live_in = [np.array([a for a in self._in[v] if live[self.tail[a]]], dtype=int)
                         for v in range(self.num_nodes)]
        self._live_out = [[a for a in self._out[v] if live[self.head[a]]]
                          for v in range(self.num_nodes)]

    def _topological_order(self):
        indeg = np.array([len(x) for x in self._in])
        queue = deque(np.nonzero(indeg == 0)[0].tolist())
        order = []
        while queue:
            u = queue.popleft()
            order.append(u)
            for a in self._out[u]:
                v = self.arcs[a][1]
                indeg[v] -= 1
                if indeg[v] == 0:
                    queue.append(v)
        if len(order) != self.num_nodes:
            raise ValueError("graph contains a directed cycle")
        return order

    def _backward_reach(self):
        seen = np.zeros(self.num_nodes, dtype=bool)
        seen[self.sink] = True
        for u in reversed(self.order):
            if any(seen[self.arcs[a][1]] for a in self._out[u]):
                seen[u] = True
        return seen

    def _forward_reach(self):
        seen = np.zeros(self.num_nodes, dtype=bool)
        seen[self.source] = True
        for u in self.order:
            if seen[u]:
                for a in self._out[u]:
                    seen[self.arcs[a][1]] = True
        return seen

    def atom(self, arc_ids) -> Atom:
        arc_ids = tuple(sorted(int(a) for a in arc_ids))
        dim = self.ambient_dim

        def dense():
            v = np.zeros(dim)
            v[list(arc_ids)] = 1.0
            return v

        return Atom(("path", arc_ids), factory=dense)

    def lmo(self, c) -> Atom:
        c = self._check_dim(c)
        dist = np.full(self.num_nodes, np.inf)
        pred = np.full(self.num_nodes, -1, dtype=int)
        dist[self.source] = 0.0
        for v in self._live_order:
            ins = self._live_in[v]
            if v == self.source or ins.size == 0:
                continue
            vals = dist[self.tail[ins]] + c[ins]
            k = int(np.argmin(vals))
            dist[v] = vals[k]
            pred[v] = ins[k]
        path = []
        v = self.sink
        while v != self.source:
            a = pred[v]
            path.append(a)
            v = self.tail[a]
        return self.atom(path)

    def incidence(self) -> np.ndarray:
        """Node-arc incidence matrix (+1 at the tail, -1 at the head)."""
        m = np.zeros((self.num_nodes, self.ambient_dim))
        m[self.tail, np.arange(self.ambient_dim)] += 1
        m[self.head, np.arange(self.ambient_dim)] -= 1
        return m

    def membership(self, x, tol=1e-9) -> bool:
        x = self._check_dim(x)
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        net = np.zeros(self.num_nodes)
        np.add.at(net, self.tail, x)
        np.subtract.at(net, self.head, x)
        target = np.zeros(self.num_nodes)
        target[self.source] += 1.0
        target[self.sink] -= 1.0
        return bool(np.all(np.abs(net - target) <= tol))

    def path_count(self) -> int:
        count = [0] * self.num_nodes
        count[self.source] = 1
        for v in self._live_order:
            for a in self._live_in[v]:
                count[v] += count[self.tail[a]]
        return count[self.sink]

    def longest_path_arcs(self) -> int:
        best = np.full(self.num_nodes, -1)
        best[self.source] = 0
        for v in self._live_order:
            for a in self._live_in[v]:
                best[v] = max(best[v], best[self.tail[a]] + 1)
        return int(best[self.sink])

    def vertices(self, limit: int = 100_000):
        if self.path_count() > limit:
            raise ValueError(f"more than {limit} source-sink paths")

        def walk(node, acc):
            if node == self.sink:
                yield self.atom(acc)
                return
            for a in self._live_out[node]:
                acc.append(a)
                yield from walk(self.head[a], acc)
                acc.pop()

        return walk(self.source, [])

    def diameter(self, enumerate_limit: int = 1000) -> float:
        """Exact when at most ``enumerate_limit`` paths exist, else sqrt(2 * longest path)."""
        if self.path_count() <= enumerate_limit:
            m = np.array([a.coords for a in self.vertices()])
            sizes = m.sum(axis=1)
            sq = sizes[:, None] + sizes[None, :] - 2 * m @ m.T
            return float(math.sqrt(max(sq.max(), 0.0)))
        return math.sqrt(2.0 * self.longest_path_arcs())

    def start_atom(self) -> Atom:
        path, v = [], self.source
        while v != self.sink:
            a = self._live_out[v][0]
            path.append(a)
            v = self.head[a]
        return self.atom(path)

    def random_vertex(self, rng):
        path, v = [], self.source
        while v != self.sink:
            outs = self._live_out[v]
            a = outs[int(rng.integers(len(outs)))]
            path.append(a)
            v = self.head[a]
        return self.atom(path)

    def __repr__(self):
        return f"DagPath(nodes={self.num_nodes}, arcs={self.ambient_dim})"


def layered_dag(layers: int, width: int, density: float, seed: int = 0) -> DagPath:
    """Random layered DAG: source -> layer 1 -> ... -> layer L -> sink.

    Arcs between consecutive layers appear independently with probability
    ``density``; every node keeps at least one incoming and one outgoing arc.
    """
    if layers < 1 or width < 1 or not 0 < density <= 1:
        raise ValueError("invalid layered DAG parameters")
    rng = np.random.Generator(np.random.PCG64(seed))
    source, sink = 0, layers * width + 1
    node = lambda layer, i: 1 + layer * width + i  # noqa: E731
    arcs = [(source, node(0, i)) for i in range(width)]
    for layer in range(layers - 1):
        mask = rng.random((width, width)) < density
        for i in range(width):
            if not mask[i].any():
                mask[i, rng.integers(width)] = True
        for j in range(width):
            if not mask[:, j].any():
                mask[rng.integers(width), j] = True
        arcs += [(node(layer, i), node(layer + 1, j))
                 for i in range(width) for j in range(width) if mask[i, j]]
    arcs += [(node(layers - 1, i), sink) for i in range(width)]
    return DagPath(sink + 1, arcs, source, sink)


def write_dag(region: DagPath, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"nodes {region.num_nodes} arcs {region.ambient_dim} "
                 f"source {region.source} sink {region.sink}\n")
        for u, v in region.arcs:
            fh.write(f"{u} {v}\n")


def read_dag(path) -> DagPath:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 8 or header[0::2] != ["nodes", "arcs", "source", "sink"]:
            raise ValueError(f"bad DAG header: {' '.join(header)!r}")
        m, a, s, t = (int(x) for x in header[1::2])
        arcs = [tuple(int(x) for x in line.split()) for line in fh if line.strip()]
    if len(arcs) != a or any(len(arc) != 2 for arc in arcs):
        raise ValueError(f"expected {a} arcs of the form 'u v'")
    return DagPath(m, arcs, s, t)


class ConvexHull(Region):
    """conv of a fixed atom list; the LMO is an exhaustive scan."""

    def __init__(self, atoms: Sequence[Atom]):
        if not atoms:
            raise ValueError("empty atom list")
        self.atoms = list(atoms)
        self.matrix = np.vstack([a.coords for a in self.atoms])
        self.ambient_dim = self.matrix.shape[1]

    def lmo(self, c) -> Atom:
        return self.atoms[int(np.argmin(self.matrix @ self._check_dim(c)))]

    def membership(self, x, tol=1e-9) -> bool:
        x = self._check_dim(x)
        system = np.vstack([self.matrix.T, np.ones(len(self.atoms))])
        _, resid = nnls(system, np.append(x, 1.0))
        return bool(resid <= tol * (1 + np.abs(x).max()))

    def diameter(self) -> float:
        m = self.matrix
        sq = (m * m).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2 * m @ m.T
        return float(math.sqrt(max(d2.max(), 0.0)))

    def start_atom(self) -> Atom:
        return self.atoms[0]

    def random_vertex(self, rng):
        return self.atoms[int(rng.integers(len(self.atoms)))]

    def vertices(self):
        return iter(self.atoms)
