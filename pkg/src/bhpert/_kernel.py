"""Subset-sum dynamic programming kernel for process-chain evaluation.

The sum over all orderings of a diagram's events, for every Kato term of the
order, is organized as a DP over event-count vectors: the intermediate state
(site occupations, hence energy denominator) depends only on *which* events
have been applied, not on their order.  This replaces the naive n! permutation
sum by a walk over at most prod(multiplicity+1) <= 2^n states.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def eval_diagram_terms(
    mult: np.ndarray,   # (ntypes,) multiplicities of the distinct events
    kind: np.ndarray,   # (ntypes,) 0 create, 1 annihilate, 2 hop
    sa: np.ndarray,     # (ntypes,) local site index (hop: source)
    sb: np.ndarray,     # (ntypes,) hop target site index (unused otherwise)
    nsites: int,
    g: int,
    mu: float,
    bcol: np.ndarray,   # (n-1, T) chain exponent applied after j events, per term
    weights: np.ndarray,  # (T,) term weights
) -> float:
    """Sum over orderings and terms at zero twist (amplitudes are real).

    Hop amplitudes carry the -1 of the -J/U tunneling coefficient; powers of
    J/U and |eta|^2 are tracked outside.  Orderings that annihilate an empty
    site contribute zero; a zero chain exponent demands the intermediate
    state be the Mott state and contributes a factor -1.
    """
    ntypes = mult.shape[0]
    T = weights.shape[0]
    n = 0
    for i in range(ntypes):
        n += mult[i]

    strides = np.empty(ntypes, np.int64)
    nstates = 1
    for i in range(ntypes):
        strides[i] = nstates
        nstates *= mult[i] + 1

    occ = np.empty((nstates, nsites), np.int64)
    level = np.empty(nstates, np.int64)
    ism = np.zeros(nstates, np.bool_)
    feas = np.ones(nstates, np.bool_)
    dpow = np.zeros((nstates, n), np.float64)
    amp = np.zeros((nstates, ntypes), np.float64)
    cnts = np.empty(ntypes, np.int64)
    e_g = 0.5 * g * (g - 1) - mu * g

    for s in range(nstates):
        rem = s
        lev = 0
        for q in range(nsites):
            occ[s, q] = g
        for i in range(ntypes):
            c = rem % (mult[i] + 1)
            rem //= mult[i] + 1
            lev += c
            if c == 0:
                continue
            if kind[i] == 0:
                occ[s, sa[i]] += c
            elif kind[i] == 1:
                occ[s, sa[i]] -= c
            else:
                occ[s, sa[i]] -= c
                occ[s, sb[i]] += c
        level[s] = lev
        allg = True
        ok = True
        de = 0.0
        for q in range(nsites):
            oq = occ[s, q]
            if oq < 0:
                ok = False
            if oq != g:
                allg = False
            de += (0.5 * oq * (oq - 1) - mu * oq) - e_g
        feas[s] = ok
        ism[s] = ok and allg
        if ok and not allg:
            # E_m - E_state < 0 strictly for g-1 < mu/U < g
            dpow[s, 0] = 1.0
            inv = -1.0 / de
            for b in range(1, n):
                dpow[s, b] = dpow[s, b - 1] * inv
        if not ok:
            continue
        for i in range(ntypes):
            if kind[i] == 0:
                amp[s, i] = np.sqrt(occ[s, sa[i]] + 1.0)
            elif kind[i] == 1:
                if occ[s, sa[i]] > 0:
                    amp[s, i] = np.sqrt(1.0 * occ[s, sa[i]])
            else:
                if occ[s, sa[i]] > 0:
                    amp[s, i] = -np.sqrt(occ[s, sa[i]] * (occ[s, sb[i]] + 1.0))

    G = np.zeros((nstates, T))
    row = np.empty(T, np.float64)
    reached = np.zeros(nstates, np.bool_)
    reached[0] = True
    for t in range(T):
        G[0, t] = 1.0

    # state indices are topologically sorted: applying an event adds a stride
    for s in range(nstates):
        if not reached[s] or not feas[s]:
            continue
        j = level[s]
        if j == n:
            continue
        if j > 0:
            if ism[s]:
                for t in range(T):
                    row[t] = -G[s, t] if bcol[j - 1, t] == 0 else 0.0
            else:
                for t in range(T):
                    b = bcol[j - 1, t]
                    row[t] = G[s, t] * dpow[s, b] if b > 0 else 0.0
        else:
            for t in range(T):
                row[t] = G[s, t]
        rem = s
        for i in range(ntypes):
            cnts[i] = rem % (mult[i] + 1)
            rem //= mult[i] + 1
        for i in range(ntypes):
            if cnts[i] < mult[i] and amp[s, i] != 0.0:
                s2 = s + strides[i]
                a = amp[s, i]
                for t in range(T):
                    G[s2, t] += row[t] * a
                reached[s2] = True

    total = 0.0
    for t in range(T):
        total += weights[t] * G[nstates - 1, t]
    return total
