"""Blended conditional gradients with lazified oracles and CG baselines."""

from .core import (ActiveSet, Atom, Backtracking, InvariantViolation, IterationRecord, SolverConfig,
                   StepKind, TernarySearch, Termination, iterate_of, local_extremes, prune)
from .objectives import InstanceSpec, QuadraticObjective, generate, restricted_smoothness
from .regions import Birkhoff, ConvexHull, Cube, DagPath, L1Ball, Simplex, layered_dag
from .solvers import RunResult, Variant, baseline, bcg, post_optimize, standalone_sigd

__all__ = [
    "ActiveSet", "Atom", "Backtracking", "InvariantViolation", "IterationRecord", "SolverConfig",
    "StepKind", "TernarySearch", "Termination", "iterate_of", "local_extremes", "prune",
    "InstanceSpec", "QuadraticObjective", "generate", "restricted_smoothness",
    "Birkhoff", "ConvexHull", "Cube", "DagPath", "L1Ball", "Simplex", "layered_dag",
    "RunResult", "Variant", "baseline", "bcg", "post_optimize", "standalone_sigd",
]
