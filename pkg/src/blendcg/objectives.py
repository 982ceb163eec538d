"""Least-squares objectives f(x) = ||Ax - b||^2 and seeded instance generators."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy.io
import scipy.sparse as sp

from .core import Atom
from .regions import Birkhoff, Cube, DagPath, L1Ball, Region, Simplex, layered_dag


class PowerIterationError(RuntimeError):
    pass


def make_rng(seed: int) -> np.random.Generator:
    """The one generator used for every instance: PCG64 seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(seed))


def power_iteration(apply, dim: int, tol: float = 1e-10, max_iter: int = 10_000,
                    seed: int = 0) -> float:
    """Largest eigenvalue of a symmetric PSD operator given as a matvec.

    Stops once successive Rayleigh quotients agree to ``tol`` relative.
    """
    if dim == 0:
        return 0.0
    v = make_rng(seed).standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = apply(v)
        new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return new
        lam = new
        v = w / norm
    raise PowerIterationError(f"no convergence after {max_iter} iterations")


class QuadraticObjective:
    """f(x) = ||Ax - b||^2 with gradient 2 A^T (Ax - b).

    ``L`` and ``alpha`` are the exact smoothness and strong convexity moduli,
    2 lambda_max(A^T A) and 2 lambda_min(A^T A) (zero when A has fewer rows
    than columns).
    """

    def __init__(self, A, b):
        self.A = A if sp.issparse(A) else np.asarray(A, dtype=float)
        if self.A.ndim != 2:
            raise ValueError("A must be a matrix")
        self.b = np.asarray(b, dtype=float)
        if self.b.shape != (self.A.shape[0],):
            raise ValueError(f"b must have length {self.A.shape[0]}")
        self.dim = self.A.shape[1]
        self._L = None
        self._alpha = None

    def residual(self, x):
        return self.A @ x - self.b

    def __call__(self, x) -> float:
        r = self.residual(np.asarray(x, dtype=float))
        return float(r @ r)

    evaluate = __call__

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a point of dimension {self.dim}")
        return 2.0 * (self.A.T @ self.residual(x))

    def value_and_gradient(self, x):
        r = self.residual(x)
        return float(r @ r), 2.0 * (self.A.T @ r)

    def line(self, a, d):
        """gamma -> f(a + gamma d) - f(a), computed without cancellation against f(a)."""
        ra = self.residual(np.asarray(a, dtype=float))
        rd = self.A @ np.asarray(d, dtype=float)
        lin = 2.0 * float(ra @ rd)
        quad = float(rd @ rd)
        return lambda g: g * (lin + g * quad)

    def hessian(self) -> np.ndarray:
        A = self.A.toarray() if sp.issparse(self.A) else self.A
        return 2.0 * A.T @ A

    def hess_vec(self, v) -> np.ndarray:
        return 2.0 * (self.A.T @ (self.A @ v))

    def _spectrum(self):
        A = self.A.toarray() if sp.issparse(self.A) else self.A
        s = np.linalg.svd(A, compute_uv=False)
        top = 2.0 * s[0] ** 2 if s.size else 0.0
        low = 2.0 * s[-1] ** 2 if A.shape[0] >= A.shape[1] and s.size else 0.0
        return float(top), float(low)

    @property
    def L(self) -> float:
        if self._L is None:
            self._L, self._alpha = self._spectrum()
        return self._L

    @property
    def alpha(self) -> float:
        if self._alpha is None:
            self._L, self._alpha = self._spectrum()
        return self._alpha

    def restrict(self, atoms: Sequence[Atom]):
        """Quadratic pulled back to barycentric coordinates: lambda -> f(V lambda)."""
        V = np.column_stack([a.coords for a in atoms])
        return QuadraticObjective(np.asarray(self.A @ V), self.b)


def restricted_smoothness(obj: QuadraticObjective, atoms: Sequence[Atom], tol: float = 1e-10,
                          max_iter: int = 100_000) -> float:
    """Smoothness of lambda -> f(sum_i lambda_i v_i) over the probability simplex.

    This is the largest eigenvalue of the Hessian 2 V^T A^T A V compressed to
    the hyperplane {z : sum z = 0}, found by power iteration.
    """
    if not atoms:
        raise ValueError("empty atom set")
    k = len(atoms)
    if k == 1:
        return 0.0
    AV = np.asarray(obj.A @ np.column_stack([a.coords for a in atoms]))

    def apply(z):
        z = z - z.mean()
        out = 2.0 * (AV.T @ (AV @ z))
        return out - out.mean()

    return power_iteration(apply, k, tol=tol, max_iter=max_iter)


def restricted_smoothness_dense(obj: QuadraticObjective, atoms: Sequence[Atom]) -> float:
    """Same quantity via a dense symmetric eigensolve."""
    k = len(atoms)
    if k == 1:
        return 0.0
    AV = np.asarray(obj.A @ np.column_stack([a.coords for a in atoms]))
    P = np.eye(k) - 1.0 / k
    H = P @ (2.0 * AV.T @ AV) @ P
    return float(np.linalg.eigvalsh((H + H.T) / 2)[-1])


# -- instance families -------------------------------------------------------

@dataclass(frozen=True)
class Lasso:
    m: int
    n: int
    nnz: int
    scale: float = 1.0


@dataclass(frozen=True)
class SignalRecovery:
    m: int
    n: int
    density: float
    sigma: float
    tau: Optional[float] = None


@dataclass(frozen=True)
class StructuredRegression:
    region: str
    size: int
    m: Optional[int] = None
    layers: int = 4
    width: int = 4
    dag_density: float = 0.5


@dataclass(frozen=True)
class SimplexQuadratic:
    k: int
    condition: float = 10.0


FAMILIES = {"Lasso": Lasso, "SignalRecovery": SignalRecovery,
            "StructuredRegression": StructuredRegression, "SimplexQuadratic": SimplexQuadratic}


@dataclass(frozen=True)
class InstanceSpec:
    family: Lasso | SignalRecovery | StructuredRegression | SimplexQuadratic
    seed: int = 0

    def to_json(self) -> dict:
        return {"family": type(self.family).__name__, "params": asdict(self.family), "seed": self.seed}

    @classmethod
    def from_json(cls, data: dict) -> "InstanceSpec":
        return cls(FAMILIES[data["family"]](**data["params"]), int(data["seed"]))


@dataclass
class Instance:
    objective: QuadraticObjective
    region: Region
    start: Atom
    spec: InstanceSpec
    extras: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.objective, self.region, self.start))


def _conditioned_matrix(rng, k: int, condition: float) -> np.ndarray:
    q1, _ = np.linalg.qr(rng.standard_normal((k, k)))
    q2, _ = np.linalg.qr(rng.standard_normal((k, k)))
    s = np.sqrt(np.linspace(1.0, condition, k))
    return q1 @ np.diag(s) @ q2.T


def generate(spec: InstanceSpec) -> Instance:
    """Build a seeded, reproducible (objective, region, start atom) triple."""
    fam = spec.family
    rng = make_rng(spec.seed)
    if isinstance(fam, SimplexQuadratic):
        if fam.k < 2 or fam.condition < 1:
            raise ValueError("SimplexQuadratic needs k >= 2 and condition >= 1")
        A = _conditioned_matrix(rng, fam.k, fam.condition)
        x_star = np.full(fam.k, 1.0 / fam.k) + rng.standard_normal(fam.k) / math.sqrt(fam.k)
        # shift one coordinate below zero so the unconstrained minimizer is infeasible
        j = int(np.argmin(x_star))
        x_star[j] = min(x_star[j], -0.5)
        region = Simplex(fam.k)
        return Instance(QuadraticObjective(A, A @ x_star), region, region.start_atom(), spec,
                        {"unconstrained_minimizer": x_star})
    if isinstance(fam, Lasso):
        if min(fam.m, fam.n, fam.nnz) < 1 or fam.nnz > fam.n or not fam.scale > 0:
            raise ValueError("invalid Lasso dimensions")
        A = rng.standard_normal((fam.m, fam.n)) / math.sqrt(fam.m)
        x0 = np.zeros(fam.n)
        support = rng.choice(fam.n, fam.nnz, replace=False)
        x0[support] = rng.standard_normal(fam.nnz)
        # ground truth sits at twice the ball radius
        x0 *= 2.0 * fam.scale / np.abs(x0).sum()
        b = A @ x0 + 0.01 * rng.standard_normal(fam.m)
        region = L1Ball(fam.n, fam.scale)
        return Instance(QuadraticObjective(A, b), region, region.start_atom(), spec,
                        {"ground_truth": x0})
    if isinstance(fam, SignalRecovery):
        if min(fam.m, fam.n) < 1 or not 0 < fam.density <= 1 or fam.sigma < 0:
            raise ValueError("invalid SignalRecovery parameters")
        Phi = sp.random(fam.m, fam.n, density=fam.density, format="csr", random_state=rng,
                        data_rvs=rng.standard_normal)
        x0 = np.zeros(fam.n)
        s = max(1, int(round(fam.density * fam.n)))
        x0[rng.choice(fam.n, s, replace=False)] = rng.choice((-1.0, 1.0), s)
        y = Phi @ x0 + fam.sigma * rng.standard_normal(fam.m)
        tau = float(np.abs(x0).sum()) if fam.tau is None else float(fam.tau)
        region = L1Ball(fam.n, tau)
        return Instance(QuadraticObjective(Phi, y), region, region.start_atom(), spec,
                        {"ground_truth": x0})
    if isinstance(fam, StructuredRegression):
        region = _structured_region(fam, spec.seed)
        dim = region.ambient_dim
        m = dim if fam.m is None else fam.m
        if m < 1:
            raise ValueError("invalid number of rows")
        A = rng.standard_normal((m, dim)) / math.sqrt(m)
        # target point pushed outside the region along a random direction
        target = region.random_vertex(rng).coords + rng.standard_normal(dim)
        return Instance(QuadraticObjective(A, A @ target), region, region.start_atom(), spec,
                        {"target": target})
    raise ValueError(f"unknown family {fam!r}")


def _structured_region(fam: StructuredRegression, seed: int) -> Region:
    if fam.size < 1:
        raise ValueError("region size must be positive")
    if fam.region == "birkhoff":
        return Birkhoff(fam.size)
    if fam.region == "simplex":
        return Simplex(fam.size)
    if fam.region == "cube":
        return Cube(fam.size)
    if fam.region == "l1ball":
        return L1Ball(fam.size, 1.0)
    if fam.region == "dagpath":
        return layered_dag(fam.layers, fam.width, fam.dag_density, seed=seed)
    raise ValueError(f"unknown region {fam.region!r}")


def save_instance(instance: Instance, directory) -> None:
    """Write A as Matrix Market, b as plain text and a JSON sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    A = instance.objective.A
    scipy.io.mmwrite(str(directory / "A.mtx"), A if sp.issparse(A) else np.asarray(A),
                     precision=17)
    np.savetxt(directory / "b.txt", instance.objective.b, fmt="%.17g")
    meta = instance.spec.to_json()
    meta["region"] = repr(instance.region)
    meta["start"] = repr(instance.start.key)
    (directory / "instance.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")


def load_instance(directory) -> Instance:
    """Rebuild an instance from its sidecar; A and b are read back from disk."""
    directory = Path(directory)
    spec = InstanceSpec.from_json(json.loads((directory / "instance.json").read_text()))
    inst = generate(spec)
    A = scipy.io.mmread(str(directory / "A.mtx"))
    A = A.tocsr() if sp.issparse(A) else np.asarray(A)
    b = np.atleast_1d(np.loadtxt(directory / "b.txt"))
    inst.objective = QuadraticObjective(A, b)
    return inst
