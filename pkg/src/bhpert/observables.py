"""Physics outputs: phase boundary, densities, and critical exponents.

Everything here is an orchestration over the cached hopping expansions: the
boundary comes from zeros of the quadratic Landau coefficient and from the
apparent radius of convergence of c2, densities from minimizing the sextic
effective potential, and exponents from logarithmic derivatives of the
density curves followed by linear extrapolation in inverse truncation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .chains import MottState, hopping_series
from .lattice import NO_TWIST, TwistSpec
from .series import (
    LandauApproximant,
    LandauCoefficients,
    TruncatedSeries,
    evaluate_landau,
    from_hopping,
    landau_from_sources,
)


class NoRootError(RuntimeError):
    """The truncated quadratic coefficient has no sign change in the bracket."""


class UnstablePotentialError(RuntimeError):
    """Sixth-order potential unbounded below (a6 <= 0); odd orders rejected."""


class InsufficientDataError(ValueError):
    pass


DEFAULT_SEARCH_MAX = {1: 0.4, 2: 0.2, 3: 0.1}


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float
    n_points: int


def _line_fit(x, y) -> LineFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise InsufficientDataError("need at least two points for a line")
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return LineFit(float(slope), float(intercept), r2, len(x))


@dataclass(frozen=True)
class BoundaryEstimate:
    mu_over_U: float
    zeros_by_order: dict[int, float]
    odd_fit: LineFit | None
    even_fit: LineFit | None
    ratio_estimate: float | None


@dataclass(frozen=True)
class DensityCurve:
    kind: str  # "condensate" or "superfluid"
    J_over_U: np.ndarray
    values: np.ndarray
    nu_m: int
    twist: TwistSpec = NO_TWIST

    def __post_init__(self):
        if self.kind not in ("condensate", "superfluid"):
            raise ValueError(f"unknown density kind {self.kind!r}")


@dataclass(frozen=True)
class ExponentEstimate:
    kind: str  # "beta_c" or "zeta"
    finite_order: dict[int, float]
    extrapolated: float
    twist_values: tuple[float, ...] = ()
    fit_window: tuple[float, float] | None = None
    per_twist_extrapolated: dict[float, float] = field(default_factory=dict)


def a2_zero(coeffs: LandauCoefficients, search_max: float) -> float:
    """Smallest positive root of the truncated quadratic coefficient.

    Sign-scan over the bracket followed by bracketed refinement to 1e-10.
    """
    a2 = coeffs.a2
    grid = np.linspace(0.0, search_max, 2001)
    vals = np.array([a2(x) for x in grid])
    sign = np.sign(vals)
    for i in range(1, len(grid)):
        if sign[i] == 0.0:
            return float(grid[i])
        if sign[i - 1] != 0.0 and sign[i] != sign[i - 1]:
            return float(brentq(a2, grid[i - 1], grid[i], xtol=1e-12, rtol=1e-12))
    raise NoRootError(
        f"quadratic coefficient has no sign change in (0, {search_max}]"
    )


def ratio_test(c2: TruncatedSeries, min_ratios: int = 3, tail: int = 6) -> float:
    """Radius-of-convergence estimate from coefficient ratios.

    Takes the trailing run of nonzero coefficients, forms |c_nu / c_{nu+1}|,
    and extrapolates the ratios linearly in 1/nu to nu -> infinity.  Only
    the last `tail` ratios enter the fit: low orders sit visibly off the
    asymptotic line and would bias the intercept.
    """
    coeffs = c2.coefficients
    # trailing consecutive nonzero run
    end = len(coeffs)
    start = end
    while start > 0 and coeffs[start - 1] != 0.0:
        start -= 1
    run = range(max(start, 1), end - 1)  # 1/nu fit needs nu >= 1
    nus, ratios = [], []
    for nu in run:
        if coeffs[nu + 1] == 0.0:
            continue
        nus.append(nu)
        ratios.append(abs(coeffs[nu] / coeffs[nu + 1]))
    if len(ratios) < min_ratios or end - start < 4:
        raise InsufficientDataError(
            "ratio test needs at least 4 consecutive nonzero coefficients"
        )
    nus, ratios = nus[-tail:], ratios[-tail:]
    if len(set(np.round(ratios, 14))) == 1:
        return float(ratios[0])  # exactly geometric
    fit = _line_fit([1.0 / nu for nu in nus], ratios)
    return fit.intercept


def boundary_zeros(
    c2: TruncatedSeries,
    orders: range | None = None,
    search_max: float = 0.2,
) -> dict[int, float]:
    """a2 zeros at each truncation order; missing roots become gaps."""
    if orders is None:
        orders = range(1, c2.max_order + 1)
    zeros: dict[int, float] = {}
    for nu_m in orders:
        if nu_m > c2.max_order:
            break
        trunc = c2.truncate(nu_m)
        try:
            zeros[nu_m] = a2_zero(
                landau_from_sources(trunc), search_max=search_max
            )
        except NoRootError:
            continue
    return zeros


def boundary_estimate(
    mu_over_U: float,
    nu_m: int,
    d: int,
    g: int = 1,
    search_max: float | None = None,
    min_fit_order: int = 2,
    workers: int | None = None,
    cache_dir: str | None = None,
) -> BoundaryEstimate:
    """Boundary numbers at one chemical potential: zeros, fits, ratio test."""
    if search_max is None:
        search_max = DEFAULT_SEARCH_MAX.get(d, 0.2)
    params = MottState(g=g, mu_over_U=mu_over_U)
    c2 = from_hopping(
        hopping_series(1, params, d, nu_m, workers=workers, cache_dir=cache_dir)
    )
    zeros = boundary_zeros(c2, range(min_fit_order, nu_m + 1), search_max)
    odd = {n: z for n, z in zeros.items() if n % 2 == 1}
    even = {n: z for n, z in zeros.items() if n % 2 == 0}
    odd_fit = (
        _line_fit([1.0 / n for n in odd], list(odd.values()))
        if len(odd) >= 2 else None
    )
    even_fit = (
        _line_fit([1.0 / n for n in even], list(even.values()))
        if len(even) >= 2 else None
    )
    try:
        ratio = ratio_test(c2)
    except InsufficientDataError:
        ratio = None
    return BoundaryEstimate(
        mu_over_U=mu_over_U,
        zeros_by_order=zeros,
        odd_fit=odd_fit,
        even_fit=even_fit,
        ratio_estimate=ratio,
    )


def mott_lobe(
    mu_grid,
    nu_m: int,
    d: int,
    g: int = 1,
    **kwargs,
) -> list[BoundaryEstimate]:
    """Boundary estimates across a chemical-potential grid.

    Per-point failures propagate as gaps (an estimate with empty fields),
    never as exceptions.
    """
    out = []
    for mu in mu_grid:
        try:
            out.append(boundary_estimate(float(mu), nu_m, d, g=g, **kwargs))
        except Exception:
            out.append(BoundaryEstimate(float(mu), {}, None, None, None))
    return out


def lobe_tip(estimates: list[BoundaryEstimate]) -> tuple[float, float]:
    """(mu/U, J/U) of the lobe tip, the maximum of the ratio-test boundary."""
    best = None
    for est in estimates:
        if est.ratio_estimate is None:
            continue
        if best is None or est.ratio_estimate > best.ratio_estimate:
            best = est
    if best is None:
        raise InsufficientDataError("no usable boundary estimates")
    return best.mu_over_U, best.ratio_estimate


def condensate_density(landau: LandauApproximant) -> float:
    """Order parameter squared at the sextic-potential minimum."""
    if landau.a6 is None or landau.a4 is None:
        raise UnstablePotentialError("need the quartic and sextic coefficients")
    if landau.a6 <= 0.0:
        if landau.a6 == 0.0 and landau.a4 > 0.0:
            # quartic limit of the sextic root formula
            return 0.0 if landau.a2 >= 0.0 else -landau.a2 / (2.0 * landau.a4)
        raise UnstablePotentialError(
            f"a6 = {landau.a6} <= 0: potential unbounded (odd truncation order?)"
        )
    return landau.minimizer()


def _minimum_value(landau: LandauApproximant) -> float:
    psi_sq = condensate_density(landau)
    return float(landau.potential(psi_sq))


def superfluid_density(
    landau_twisted: LandauApproximant,
    landau_untwisted: LandauApproximant,
    theta_over_ell: float,
    anomaly_tol: float = 1e-9,
) -> float:
    """Phase stiffness from the twist response of the potential minimum.

    rho_s = [Gamma(theta)|min - Gamma(0)|min] / ((J/U) (theta/ell)^2), per
    site, each potential minimized at its own order parameter.
    """
    if landau_twisted.J_over_U != landau_untwisted.J_over_U:
        raise ValueError("twisted and untwisted approximants at different J/U")
    J = landau_untwisted.J_over_U
    if J <= 0.0 or theta_over_ell == 0.0:
        raise ValueError("need J/U > 0 and a nonzero twist")
    num = _minimum_value(landau_twisted) - _minimum_value(landau_untwisted)
    rho = num / (J * theta_over_ell**2)
    if rho < -anomaly_tol:
        raise UnstablePotentialError(f"negative superfluid density {rho}")
    return max(rho, 0.0)


def landau_series(
    params: MottState,
    d: int,
    nu_m: int,
    twist: TwistSpec = NO_TWIST,
    workers: int | None = None,
    cache_dir: str | None = None,
) -> LandauCoefficients:
    """Landau coefficients a2, a4, a6 as J/U series at truncation nu_m.

    The quartic and sextic sources cost four and eight hopping orders
    respectively at the same total process order, so their series are
    shorter; all are clipped to nu_m.
    """
    def c(k):
        return from_hopping(
            hopping_series(
                k, params, d, nu_m, twist=twist,
                workers=workers, cache_dir=cache_dir,
            )
        )

    return landau_from_sources(c(1), c(2), c(3))


def condensate_curve(
    coeffs: LandauCoefficients,
    J_grid,
    nu_m: int,
) -> DensityCurve:
    vals = []
    for J in J_grid:
        vals.append(condensate_density(evaluate_landau(coeffs, float(J))))
    return DensityCurve(
        kind="condensate",
        J_over_U=np.asarray(J_grid, dtype=float),
        values=np.asarray(vals),
        nu_m=nu_m,
    )


def superfluid_curve(
    coeffs_twisted: LandauCoefficients,
    coeffs_untwisted: LandauCoefficients,
    J_grid,
    nu_m: int,
    twist: TwistSpec,
) -> DensityCurve:
    vals = []
    for J in J_grid:
        J = float(J)
        vals.append(
            superfluid_density(
                evaluate_landau(coeffs_twisted, J),
                evaluate_landau(coeffs_untwisted, J),
                twist.theta_over_ell,
            )
        )
    return DensityCurve(
        kind="superfluid",
        J_over_U=np.asarray(J_grid, dtype=float),
        values=np.asarray(vals),
        nu_m=nu_m,
        twist=twist,
    )


def _dlog_points(curve: DensityCurve, J_c: float):
    t = curve.J_over_U - J_c
    keep = (t > 0.0) & (curve.values > 0.0)
    t = t[keep]
    rho = curve.values[keep]
    if len(t) < 3:
        raise InsufficientDataError("too few positive points above the boundary")
    x = np.log(t)
    y = np.log(rho)
    # centered finite differences of log rho w.r.t. log t
    d = (y[2:] - y[:-2]) / (x[2:] - x[:-2])
    return t[1:-1], d


def default_dlog_window(
    t: np.ndarray,
    dlog: np.ndarray,
    residual_tol: float = 0.01,
    min_points: int = 10,
) -> tuple[float, float]:
    """Initial straight segment of the Dlog data, for the t -> 0 fit.

    Starting from the smallest available t, the window is grown point by
    point for as long as the data stay within residual_tol of their own
    best-fit line.  This captures the near-linear behavior adjacent to the
    transition while stopping before the strong downward curvature that
    sets in at larger t.  Finite-order approximants remain curved on every
    scale, so window choice is an analysis input; callers reproducing a
    specific published protocol should pass an explicit window instead.
    """
    n = len(t)
    if n < min_points:
        raise InsufficientDataError(
            f"need at least {min_points} Dlog points, have {n}"
        )
    end = min_points
    while end < n:
        seg_t, seg_d = t[: end + 1], dlog[: end + 1]
        coeffs = np.polyfit(seg_t, seg_d, 1)
        resid = np.max(np.abs(seg_d - np.polyval(coeffs, seg_t)))
        if resid > residual_tol:
            break
        end += 1
    return float(t[0]), float(t[end - 1])


def dlog_exponent(
    curve: DensityCurve,
    J_c: float,
    fit_window: tuple[float, float] | None = None,
) -> tuple[float, tuple[float, float]]:
    """Exponent from the logarithmic derivative, with the window used.

    The Dlog of rho = A t^e (1 + b t + ...) approaches e linearly in t, so
    the fitted-line intercept at t = 0 is the exponent estimate.
    """
    t, dvals = _dlog_points(curve, J_c)
    if fit_window is None:
        fit_window = default_dlog_window(t, dvals)
    lo, hi = fit_window
    mask = (t >= lo) & (t <= hi)
    if int(np.count_nonzero(mask)) < 2:
        raise InsufficientDataError("fit window contains fewer than two points")
    fit = _line_fit(t[mask], dvals[mask])
    return fit.intercept, (lo, hi)


def extrapolate_in_inverse_order(entries: dict[int, float]) -> float:
    """Linear extrapolation of finite-order values to infinite order."""
    if len(entries) < 2:
        raise InsufficientDataError("need at least two truncation orders")
    items = sorted(entries.items())
    if len(set(v for _, v in items)) == 1:
        return items[0][1]
    fit = _line_fit([1.0 / n for n, _ in items], [v for _, v in items])
    return fit.intercept


def extrapolate_exponents(
    entries: dict[int, float] | None = None,
    kind: str = "beta_c",
    twist_entries: dict[float, dict[int, float]] | None = None,
    fit_window: tuple[float, float] | None = None,
) -> ExponentEstimate:
    """Extrapolate finite-order exponent values to infinite order.

    For the condensate exponent, a single linear fit in 1/nu_m.  For the
    superfluid exponent, per-twist extrapolations first, then a linear
    extrapolation of those to zero twist.
    """
    if kind == "zeta":
        if not twist_entries:
            raise InsufficientDataError("zeta needs entries per twist value")
        per_twist = {
            th: extrapolate_in_inverse_order(vals)
            for th, vals in sorted(twist_entries.items())
        }
        thetas = list(per_twist)
        if len(thetas) == 1:
            final = per_twist[thetas[0]]
        else:
            fit = _line_fit(thetas, [per_twist[t] for t in thetas])
            final = fit.intercept
        merged: dict[int, float] = {}
        for vals in twist_entries.values():
            merged.update(vals)
        return ExponentEstimate(
            kind="zeta",
            finite_order=merged,
            extrapolated=final,
            twist_values=tuple(thetas),
            fit_window=fit_window,
            per_twist_extrapolated=per_twist,
        )
    if entries is None:
        raise InsufficientDataError("need finite-order entries")
    return ExponentEstimate(
        kind=kind,
        finite_order=dict(entries),
        extrapolated=extrapolate_in_inverse_order(entries),
        fit_window=fit_window,
    )
