"""Run BCG and the baselines on every instance family and print a comparison.

    python3 scripts/compare_solvers.py --out runs/compare --max-iter 2000
"""

import argparse
from pathlib import Path

from blendcg.bench import ExperimentSpec, family_from_args, run_experiment
from blendcg.core import SolverConfig
from blendcg.objectives import InstanceSpec

FAMILIES = {
    "simplex": dict(size=50),
    "lasso": dict(size=400, rows=200),
    "signal": dict(size=1000, rows=300),
    "birkhoff": dict(size=15),
    "dagpath": dict(layers=8, width=6),
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("runs/compare"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=2000)
    p.add_argument("--eps", type=float, default=1e-7)
    args = p.parse_args()
    config = SolverConfig(eps=args.eps, max_iter=args.max_iter, time_limit=60.0)
    print(f"{'family':10s} {'algo':6s} {'iters':>6s} {'f':>16s} {'|S|':>5s} {'lmo':>6s} {'time':>7s}")
    for name, kw in FAMILIES.items():
        family = family_from_args(name, **kw)
        algos = ["bcg", "lpcg", "pcg", "acg", "cg"] + (["sigd"] if name == "simplex" else [])
        spec = ExperimentSpec(InstanceSpec(family, args.seed), algos, config, args.out / name)
        for algo, res in run_experiment(spec).items():
            t = res.trace[-1].elapsed if res.trace else 0.0
            print(f"{name:10s} {algo:6s} {len(res.trace):6d} {res.f_value:16.10g} "
                  f"{len(res.final_set):5d} {res.counters.lmo_calls:6d} {t:7.2f}")


if __name__ == "__main__":
    main()
