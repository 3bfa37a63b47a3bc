"""Phase-boundary study at the lobe tips: zeros, fits, and ratio test.

Usage: python scripts/boundary_study.py [d2_numax] [d3_numax]

Prints the per-order a2 zeros, the odd/even straight-line extrapolations
in inverse order, and the ratio-test estimate for both dimensions.
"""
import sys

from bhpert.chains import MottState, hopping_series
from bhpert.observables import boundary_estimate
from bhpert.series import from_hopping

nu2 = int(sys.argv[1]) if len(sys.argv) > 1 else 9
nu3 = int(sys.argv[2]) if len(sys.argv) > 2 else 7

for d, mu, nu_m in ((2, 0.373, nu2), (3, 0.393, nu3)):
    est = boundary_estimate(mu, nu_m, d)
    print(f"--- d={d}, mu/U={mu}, nu_m<={nu_m} ---")
    c2 = from_hopping(hopping_series(1, MottState(g=1, mu_over_U=mu), d, nu_m))
    print("c2 coefficients:", ["%.6e" % c for c in c2.coefficients])
    for n, z in sorted(est.zeros_by_order.items()):
        print(f"  a2 zero at nu_m={n}: {z:.6f}")
    if est.odd_fit:
        print(f"  odd extrapolation:  {est.odd_fit.intercept:.6f} "
              f"(R^2={est.odd_fit.r_squared:.5f})")
    if est.even_fit:
        print(f"  even extrapolation: {est.even_fit.intercept:.6f} "
              f"(R^2={est.even_fit.r_squared:.5f})")
    print(f"  ratio test: {est.ratio_estimate:.6f}")
