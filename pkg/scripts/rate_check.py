"""Observed linear rate of BCG and stand-alone simplex descent against the predicted factor.

For strongly convex quadratics on the simplex the primal gap of stand-alone
simplex descent contracts at least by 1 - alpha / (4 L k) per iteration. The
script fits log2 of the primal gap and prints the observed and predicted
per-iteration factors.

    python3 scripts/rate_check.py --k 20 --seeds 5
"""

import argparse

import numpy as np

from blendcg.core import SolverConfig
from blendcg.diagnostics import (log_gap_fit, polish_on_simplex, projected_gradient_reference,
                                 sigd_rate)
from blendcg.linesearch import increment
from blendcg.objectives import InstanceSpec, SimplexQuadratic, generate
from blendcg.solvers import bcg, standalone_sigd


def observed_factor(obj, x_star, iterates, iters, f_star):
    h = np.array([increment(obj, x_star, x) for x in iterates])
    keep = h > 1e-15 * (1 + abs(f_star))
    if keep.sum() < 3:
        return float("nan"), float("nan")
    slope, r2 = log_gap_fit(np.asarray(iters)[keep], h[keep])
    return 2.0 ** slope, r2


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--condition", type=float, default=10.0)
    args = p.parse_args()
    print(f"{'seed':>4s} {'predicted':>10s} {'sigd':>8s} {'R2':>6s} {'bcg':>8s} {'R2':>6s}")
    for seed in range(args.seeds):
        inst = generate(InstanceSpec(SimplexQuadratic(args.k, args.condition), seed))
        obj, region, start = inst
        x_star, f_star = polish_on_simplex(obj, projected_gradient_reference(obj, region)[0])
        row = [f"{seed:4d}", f"{sigd_rate(obj.alpha, obj.L, args.k):10.6f}"]
        for solver in ("sigd", "bcg"):
            xs, its = [], []

            def keep(rec, aset, grad):
                xs.append(aset.x.copy())
                its.append(rec.iter)

            cfg = SolverConfig(eps=1e-10, max_iter=50_000)
            if solver == "sigd":
                standalone_sigd(obj, args.k, cfg, callback=keep)
            else:
                bcg(obj, region, start, cfg, callback=keep)
            q, r2 = observed_factor(obj, x_star, xs, its, f_star)
            row += [f"{q:8.4f}", f"{r2:6.3f}"]
        print(" ".join(row))


if __name__ == "__main__":
    main()
