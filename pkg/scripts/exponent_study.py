"""Critical-exponent study: densities, Dlog fits, extrapolations.

Usage: python scripts/exponent_study.py [nu_m ...]

For each (even) truncation order, locates the boundary from the same-order
a2 zero, builds condensate and superfluid density curves above it, and
extracts exponents from the logarithmic derivative. Requires the gamma
tables for k = 1..3 at the requested orders (see precompute_tables.py).
"""
import sys

import numpy as np

from bhpert.chains import MottState
from bhpert.lattice import TwistSpec
from bhpert.observables import (
    a2_zero,
    condensate_curve,
    dlog_exponent,
    extrapolate_exponents,
    landau_series,
    superfluid_curve,
)

ORDERS = [int(a) for a in sys.argv[1:]] or [4]
TWISTS = (0.001, 0.01)

for d, mu in ((2, 0.373), (3, 0.393)):
    params = MottState(g=1, mu_over_U=mu)
    beta_entries = {}
    zeta_entries = {th: {} for th in TWISTS}
    for nu_m in ORDERS:
        coeffs = landau_series(params, d, nu_m)
        jc = a2_zero(coeffs, search_max=0.2 if d == 2 else 0.1)
        grid = jc + np.linspace(2e-4, 0.06, 240)
        bc, window = dlog_exponent(condensate_curve(coeffs, grid, nu_m), jc)
        beta_entries[nu_m] = bc
        print(f"d={d} nu_m={nu_m}: J_c={jc:.6f} beta_c={bc:.4f} "
              f"window={window[0]:.4f}..{window[1]:.4f}")
        for th in TWISTS:
            tw = TwistSpec(theta_over_ell=th, direction=1)
            coeffs_tw = landau_series(params, d, nu_m, twist=tw)
            curve = superfluid_curve(coeffs_tw, coeffs, grid, nu_m, tw)
            z, _ = dlog_exponent(curve, jc)
            zeta_entries[th][nu_m] = z
            print(f"  zeta(theta/l={th}) = {z:.4f}")
    if len(beta_entries) >= 2:
        est = extrapolate_exponents(beta_entries)
        print(f"d={d} beta_c extrapolated: {est.extrapolated:.4f} "
              f"(beta = {est.extrapolated / 2:.4f})")
        zest = extrapolate_exponents(kind="zeta", twist_entries=zeta_entries)
        print(f"d={d} zeta extrapolated: {zest.extrapolated:.4f}")
