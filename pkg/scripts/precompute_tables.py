"""Precompute and cache gamma tables for the standard study points.

Usage: python scripts/precompute_tables.py [max_total_order]

Walks (d, mu/U, k, nu) jobs in increasing cost and stores each
displacement-resolved table in the cache (BHPERT_CACHE_DIR or the default).
Safe to interrupt and re-run: finished tables are cache hits.
"""
import sys
import time

from bhpert.chains import MottState, gamma_table

MAX_N = int(sys.argv[1]) if len(sys.argv) > 1 else 10

POINTS = [
    (2, MottState(g=1, mu_over_U=0.373)),
    (3, MottState(g=1, mu_over_U=0.393)),
]

jobs = []
for d, params in POINTS:
    for k in (1, 2, 3):
        for nu in range(0, MAX_N - 2 * k + 1):
            n = 2 * k + nu
            if 1 <= n <= MAX_N:
                jobs.append((n, d, params, k, nu))
jobs.sort()  # cheap orders first

for n, d, params, k, nu in jobs:
    t0 = time.time()
    table = gamma_table(k, nu, params, d)
    print(
        f"d={d} k={k} nu={nu} (n={n}) gamma={sum(table.values()):+.6e} "
        f"[{time.time() - t0:.1f}s]",
        flush=True,
    )
