import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from bhpert.series import (
    LandauApproximant,
    TruncatedSeries,
    TruncationMismatchError,
    evaluate_landau,
    landau_from_sources,
)

finite = st.floats(
    min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False
)


def series_strategy(max_order=5, nonzero_constant=False):
    def build(coeffs):
        return TruncatedSeries.from_iterable(coeffs, max_order)

    base = st.lists(finite, min_size=max_order + 1, max_size=max_order + 1)
    if nonzero_constant:
        base = base.filter(lambda c: abs(c[0]) > 1e-3)
    return base.map(build)


class TestArithmetic:
    @given(series_strategy(), series_strategy(), series_strategy())
    def test_multiplication_associative(self, a, b, c):
        left = (a * b) * c
        right = a * (b * c)
        np.testing.assert_allclose(
            left.as_array(), right.as_array(), rtol=1e-9, atol=1e-6
        )

    @given(series_strategy(), series_strategy())
    def test_multiplication_commutative(self, a, b):
        np.testing.assert_allclose(
            (a * b).as_array(), (b * a).as_array(), rtol=1e-12, atol=1e-12
        )

    @given(series_strategy(), series_strategy())
    def test_addition_matches_pointwise(self, a, b):
        x = 0.03
        assert (a + b)(x) == pytest.approx(a(x) + b(x), rel=1e-9, abs=1e-9)

    def test_cauchy_product_truncates(self):
        a = TruncatedSeries((1.0, 1.0, 0.0), 2)
        b = TruncatedSeries((1.0, 0.0, 2.0), 2)
        assert (a * b).coefficients == (1.0, 1.0, 2.0)

    @given(series_strategy(nonzero_constant=True))
    def test_reciprocal_inverts(self, a):
        recip = a.reciprocal()
        prod = a * recip
        expect = np.zeros(a.max_order + 1)
        expect[0] = 1.0
        # Roundoff in the product scales with the coefficient magnitudes,
        # which blow up geometrically when |a_1/a_0| is large.
        scale = max(1.0, np.max(np.abs(a.as_array()))) * max(
            1.0, np.max(np.abs(recip.as_array()))
        )
        np.testing.assert_allclose(
            prod.as_array(), expect, atol=1e-12 * scale + 1e-12
        )

    def test_reciprocal_of_zero_constant_rejected(self):
        with pytest.raises(ZeroDivisionError):
            TruncatedSeries((0.0, 1.0), 1).reciprocal()

    def test_known_reciprocal(self):
        # 1/(1 - x) = 1 + x + x^2 + ...
        geo = TruncatedSeries((1.0, -1.0, 0.0, 0.0), 3).reciprocal()
        assert geo.coefficients == (1.0, 1.0, 1.0, 1.0)

    @given(series_strategy(nonzero_constant=True), st.integers(0, 4))
    def test_power_matches_repeated_product(self, a, e):
        by_power = a**e
        by_product = TruncatedSeries.constant(1.0, a.max_order)
        for _ in range(e):
            by_product = by_product * a
        np.testing.assert_allclose(
            by_power.as_array(), by_product.as_array(), rtol=1e-7, atol=1e-4
        )

    def test_order_mismatch_rejected(self):
        with pytest.raises(TruncationMismatchError):
            TruncatedSeries((1.0, 2.0), 1) * TruncatedSeries((1.0,), 0)

    def test_truncate_and_derivative(self):
        s = TruncatedSeries((1.0, 2.0, 3.0), 2)
        assert s.truncate(1).coefficients == (1.0, 2.0)
        assert s.derivative().coefficients == (2.0, 6.0)


class TestLandauInversion:
    def test_quadratic_inversion_symbolic(self):
        # c2 = c0 (1 + r x): a2 = -1/c2 = -(1 - r x + r^2 x^2 - ...)/c0
        c0, r = -6.0, 12.0
        c2 = TruncatedSeries.from_iterable([c0, c0 * r, 0.0, 0.0], 3)
        a2 = landau_from_sources(c2).a2
        expect = [-1.0 / c0 * (-r) ** n for n in range(4)]
        np.testing.assert_allclose(a2.as_array(), expect, rtol=1e-12)

    def test_quartic_weights(self):
        # constant series: a4 = c4 / c2^4 exactly
        c2 = TruncatedSeries.constant(-2.0, 2)
        c4 = TruncatedSeries.constant(5.0, 2)
        a4 = landau_from_sources(c2, c4).a4
        assert a4.coefficients[0] == pytest.approx(5.0 / 16.0)

    def test_sextic_weights(self):
        c2 = TruncatedSeries.constant(-2.0, 2)
        c4 = TruncatedSeries.constant(5.0, 2)
        c6 = TruncatedSeries.constant(7.0, 2)
        a6 = landau_from_sources(c2, c4, c6).a6
        expect = 7.0 / (-2.0) ** 6 - 4.0 * 25.0 / (-2.0) ** 7
        assert a6.coefficients[0] == pytest.approx(expect)

    def test_sextic_requires_quartic(self):
        c2 = TruncatedSeries.constant(-2.0, 2)
        with pytest.raises(ValueError):
            landau_from_sources(c2, None, TruncatedSeries.constant(1.0, 2))


class TestApproximant:
    def test_minimizer_quartic_limit(self):
        # a6 -> 0+ reproduces -a2/(2 a4)
        la6 = LandauApproximant(0.05, a2=-1.0, a4=2.0, a6=1e-9)
        la4 = LandauApproximant(0.05, a2=-1.0, a4=2.0)
        assert la6.minimizer() == pytest.approx(la4.minimizer(), rel=1e-6)
        assert la4.minimizer() == pytest.approx(0.25)

    def test_minimizer_zero_in_mott_phase(self):
        la = LandauApproximant(0.05, a2=0.5, a4=1.0, a6=1.0)
        assert la.minimizer() == 0.0

    def test_sextic_arithmetic(self):
        la = LandauApproximant(0.05, a2=-1.0, a4=1.0, a6=1.0)
        assert la.minimizer() == pytest.approx(1.0 / 3.0)

    def test_potential_zero_at_origin(self):
        la = LandauApproximant(0.05, a2=-1.0, a4=1.0, a6=1.0)
        assert la.potential(0.0) == 0.0

    def test_potential_negative_at_minimum_in_broken_phase(self):
        la = LandauApproximant(0.05, a2=-1.0, a4=1.0, a6=1.0)
        assert la.potential(la.minimizer()) < 0.0

    def test_evaluate_landau(self):
        from bhpert.series import LandauCoefficients

        a2 = TruncatedSeries((1.0, -2.0), 1)
        coeffs = LandauCoefficients(a2=a2)
        la = evaluate_landau(coeffs, 0.25)
        assert la.a2 == pytest.approx(0.5)
        assert la.a4 is None
