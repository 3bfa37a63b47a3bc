import math

import numpy as np
import pytest

from bhpert.lattice import TwistSpec
from bhpert.observables import (
    BoundaryEstimate,
    DensityCurve,
    InsufficientDataError,
    NoRootError,
    UnstablePotentialError,
    a2_zero,
    boundary_zeros,
    condensate_density,
    dlog_exponent,
    extrapolate_exponents,
    lobe_tip,
    ratio_test,
    superfluid_density,
)
from bhpert.series import (
    LandauApproximant,
    LandauCoefficients,
    TruncatedSeries,
    landau_from_sources,
)


class TestA2Zero:
    def test_simple_linear_root(self):
        # a2 = -1/c2 with c2 = c0(1 + r x): zero of a2 where c2 diverges is
        # never reached; use an explicit a2 with a known root instead
        a2 = TruncatedSeries((-0.5, 10.0), 1)
        coeffs = LandauCoefficients(a2=a2)
        assert a2_zero(coeffs, 0.2) == pytest.approx(0.05, abs=1e-10)

    def test_no_root(self):
        coeffs = LandauCoefficients(a2=TruncatedSeries((1.0, 0.0), 1))
        with pytest.raises(NoRootError):
            a2_zero(coeffs, 0.2)

    def test_smallest_root_returned(self):
        # roots at 0.02 and 0.08
        poly = np.poly(np.array([0.02, 0.08]))[::-1]
        a2 = TruncatedSeries(tuple(poly), 2)
        coeffs = LandauCoefficients(a2=a2)
        assert a2_zero(coeffs, 0.2) == pytest.approx(0.02, abs=1e-9)


class TestRatioTest:
    def test_geometric(self):
        s = TruncatedSeries.from_iterable([2.0 * 3.0**n for n in range(8)], 7)
        assert ratio_test(s) == pytest.approx(1.0 / 3.0)

    def test_known_radius(self):
        s = TruncatedSeries.from_iterable(
            [(1.0 / 0.06) ** n for n in range(9)], 8
        )
        assert ratio_test(s) == pytest.approx(0.06, rel=1e-12)

    def test_insufficient(self):
        with pytest.raises(InsufficientDataError):
            ratio_test(TruncatedSeries((1.0, 2.0, 4.0), 2))


class TestDensities:
    def test_mott_phase_zero(self):
        la = LandauApproximant(0.05, a2=0.5, a4=1.0, a6=1.0)
        assert condensate_density(la) == 0.0

    def test_arithmetic(self):
        la = LandauApproximant(0.05, a2=-1.0, a4=1.0, a6=1.0)
        assert condensate_density(la) == pytest.approx(1.0 / 3.0)

    def test_unstable_rejected(self):
        la = LandauApproximant(0.05, a2=-1.0, a4=1.0, a6=-1.0)
        with pytest.raises(UnstablePotentialError):
            condensate_density(la)

    def test_quartic_limit(self):
        la = LandauApproximant(0.05, a2=-1.0, a4=2.0, a6=0.0)
        assert condensate_density(la) == pytest.approx(0.25)

    def test_superfluid_density_quadratic_twist_response(self):
        # construct twisted coefficients whose minimum shifts by an amount
        # proportional to theta^2: rho_s must be twist-independent
        J = 0.05

        def landau_at(theta):
            stiff = 0.8
            return LandauApproximant(
                J, a2=-1.0 + stiff * J * theta**2, a4=1.0, a6=1.0
            )

        vals = [
            superfluid_density(landau_at(th), landau_at(0.0), th)
            for th in (1e-3, 1e-4)
        ]
        assert vals[0] == pytest.approx(vals[1], rel=1e-4)

    def test_superfluid_density_mismatched_J_rejected(self):
        a = LandauApproximant(0.05, a2=-1.0, a4=1.0, a6=1.0)
        b = LandauApproximant(0.06, a2=-1.0, a4=1.0, a6=1.0)
        with pytest.raises(ValueError):
            superfluid_density(a, b, 0.001)


class TestDlog:
    def _curve(self, exponent, amplitude=3.0, jc=0.05):
        t = np.linspace(2e-4, 0.045, 300)
        return DensityCurve(
            "condensate", jc + t, amplitude * t**exponent, nu_m=4
        ), jc

    @pytest.mark.parametrize("e", [0.7, 1.0, 0.35])
    def test_synthetic_power_law(self, e):
        curve, jc = self._curve(e)
        got, _window = dlog_exponent(curve, jc)
        assert got == pytest.approx(e, abs=1e-6)

    def test_scale_invariance(self):
        c1, jc = self._curve(0.6, amplitude=1.0)
        c2, _ = self._curve(0.6, amplitude=123.0)
        e1, _ = dlog_exponent(c1, jc)
        e2, _ = dlog_exponent(c2, jc)
        assert e1 == pytest.approx(e2, abs=1e-12)

    def test_correction_to_scaling_intercept(self):
        # rho = t^e (1 + b t): Dlog = e + b t/(1+b t) -> intercept e
        jc = 0.05
        t = np.linspace(2e-4, 0.04, 400)
        curve = DensityCurve("condensate", jc + t, t**0.55 * (1 + 2.0 * t), nu_m=4)
        got, _ = dlog_exponent(curve, jc)
        # the line-fit intercept carries an O((b t)^2) bias from curvature
        assert got == pytest.approx(0.55, abs=1e-2)

    def test_explicit_window(self):
        curve, jc = self._curve(0.8)
        got, window = dlog_exponent(curve, jc, fit_window=(0.01, 0.03))
        assert window == (0.01, 0.03)
        assert got == pytest.approx(0.8, abs=1e-6)

    def test_nonpositive_rejected(self):
        jc = 0.05
        t = np.linspace(-0.01, 0.001, 30)
        curve = DensityCurve("condensate", jc + t, np.zeros_like(t), nu_m=4)
        with pytest.raises(InsufficientDataError):
            dlog_exponent(curve, jc)


class TestExtrapolation:
    def test_table_fixture_beta(self):
        est = extrapolate_exponents({4: 0.5715, 6: 0.6153})
        assert est.extrapolated == pytest.approx(0.7029, abs=1e-4)

    def test_table_fixture_zeta(self):
        est = extrapolate_exponents(
            kind="zeta",
            twist_entries={
                0.001: {4: 0.6446, 6: 0.6525},
                0.01: {4: 0.6463, 6: 0.6541},
            },
        )
        assert est.per_twist_extrapolated[0.001] == pytest.approx(0.6683, abs=1e-4)
        assert est.per_twist_extrapolated[0.01] == pytest.approx(0.6697, abs=1e-4)
        assert est.extrapolated == pytest.approx(0.6681, abs=1e-4)

    def test_constant_entries(self):
        est = extrapolate_exponents({4: 0.5, 6: 0.5, 8: 0.5})
        assert est.extrapolated == 0.5

    def test_two_point_line_is_exact(self):
        # analytic intercept of the line through (1/4, y4), (1/6, y6)
        y4, y6 = 0.52, 0.58
        est = extrapolate_exponents({4: y4, 6: y6})
        slope = (y4 - y6) / (1 / 4 - 1 / 6)
        assert est.extrapolated == pytest.approx(y6 - slope / 6, rel=1e-12)

    def test_single_point_rejected(self):
        with pytest.raises(InsufficientDataError):
            extrapolate_exponents({4: 0.5})


class TestBoundaryHelpers:
    def test_boundary_zeros_skips_rootless_orders(self):
        # positive constant c2 gives positive a2 = -1/c2 < 0 everywhere: no root
        c2 = TruncatedSeries.constant(2.0, 3)
        assert boundary_zeros(c2) == {}

    def test_lobe_tip(self):
        ests = [
            BoundaryEstimate(0.3, {}, None, None, 0.05),
            BoundaryEstimate(0.4, {}, None, None, 0.059),
            BoundaryEstimate(0.5, {}, None, None, 0.052),
        ]
        assert lobe_tip(ests) == (0.4, 0.059)

    def test_lobe_tip_needs_data(self):
        with pytest.raises(InsufficientDataError):
            lobe_tip([BoundaryEstimate(0.3, {}, None, None, None)])
