"""Active set sizes on Birkhoff structured regression, with and without sparsification.

Prints per-seed sizes for pairwise FW and BCG (vanilla, drop promotion,
promotion plus post-optimization) and the relative change in f.

    python3 scripts/sparsity_table.py --size 20 --seeds 10 --max-iter 500
"""

import argparse

import numpy as np

from blendcg.bench import _table_row
from blendcg.core import SolverConfig
from blendcg.objectives import StructuredRegression


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--eps0", type=float, default=1e-3)
    args = p.parse_args()
    config = SolverConfig(eps=1e-8, max_iter=args.max_iter)
    family = StructuredRegression("birkhoff", args.size)
    rows = [_table_row((family, s, config, args.eps0)) for s in range(args.seeds)]
    print(f"{'seed':>4s} {'pcg':>5s} {'bcg':>5s} {'promote':>8s} {'+post':>6s} "
          f"{'df% promote':>12s} {'df% +post':>10s}")
    for r in rows:
        print(f"{r['seed']:4d} {r['pcg_size']:5d} {r['vanilla_size']:5d} {r['promote_size']:8d} "
              f"{r['promote_post_size']:6d} {r['promote_df_pct']:12.2e} {r['promote_post_df_pct']:10.2e}")
    med = {k: np.median([r[k] for r in rows])
           for k in ("pcg_size", "vanilla_size", "promote_size", "promote_post_size")}
    print("median", " ".join(f"{k}={v:g}" for k, v in med.items()))


if __name__ == "__main__":
    main()
