"""Exact O(n^3) linear assignment by shortest augmenting paths with potentials."""

import numpy as np


def solve_assignment(cost) -> np.ndarray:
    """Minimum-cost perfect matching on a square cost matrix.

    Returns ``perm`` with ``perm[i]`` the column matched to row ``i``. Rows are
    inserted one at a time and each insertion runs a Dijkstra-like search on
    reduced costs, vectorized over columns.
    """
    a = np.asarray(cost, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square cost matrix required, got shape {a.shape}")
    n = a.shape[0]
    if n == 0:
        return np.zeros(0, dtype=int)
    if not np.all(np.isfinite(a)):
        raise ValueError("cost matrix must be finite")
    # 1-based columns; column 0 is a virtual source
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    owner = np.zeros(n + 1, dtype=int)
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = owner[j0]
            free = ~used
            free[0] = False
            cur = a[i0 - 1] - u[i0] - v[1:]
            better = free[1:] & (cur < minv[1:])
            idx = np.nonzero(better)[0] + 1
            minv[idx] = cur[idx - 1]
            way[idx] = j0
            masked = np.where(free, minv, np.inf)
            j1 = int(np.argmin(masked))
            delta = masked[j1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[free] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    perm = np.empty(n, dtype=int)
    perm[owner[1:] - 1] = np.arange(n)
    return perm
