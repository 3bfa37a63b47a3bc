"""Truncated power series in the hopping ratio, and the Landau expansion.

The effective-potential coefficients a2, a4, a6 are rational functions of
the source-expansion coefficients c2, c4, c6.  Consistency with the order
of the underlying perturbation series requires re-expanding each rational
combination as a truncated series in J/U rather than evaluating it as a
ratio of truncated polynomials.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chains import HoppingSeries


class TruncationMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class TruncatedSeries:
    """Polynomial in x truncated at x**max_order, exact arithmetic on floats."""

    coefficients: tuple[float, ...]
    max_order: int

    def __post_init__(self):
        if len(self.coefficients) != self.max_order + 1:
            raise ValueError("coefficient count must be max_order + 1")

    @classmethod
    def from_iterable(cls, coeffs, max_order: int) -> "TruncatedSeries":
        c = list(coeffs)[: max_order + 1]
        c += [0.0] * (max_order + 1 - len(c))
        return cls(tuple(float(v) for v in c), max_order)

    @classmethod
    def constant(cls, value: float, max_order: int) -> "TruncatedSeries":
        return cls.from_iterable([value], max_order)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            c = list(self.coefficients)
            c[0] += other
            return TruncatedSeries(tuple(c), self.max_order)
        self._check(other)
        return TruncatedSeries(
            tuple(a + b for a, b in zip(self.coefficients, other.coefficients)),
            self.max_order,
        )

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries(tuple(-a for a in self.coefficients), self.max_order)

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            return self + (-other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return TruncatedSeries(
                tuple(a * other for a in self.coefficients), self.max_order
            )
        self._check(other)
        n = self.max_order
        a, b = self.coefficients, other.coefficients
        out = [0.0] * (n + 1)
        for i, ai in enumerate(a):
            if ai == 0.0:
                continue
            for j in range(n + 1 - i):
                out[i + j] += ai * b[j]
        return TruncatedSeries(tuple(out), n)

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if exponent < 0:
            return self.reciprocal() ** (-exponent)
        out = TruncatedSeries.constant(1.0, self.max_order)
        base = self
        e = exponent
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def reciprocal(self) -> "TruncatedSeries":
        """Series of 1/self; requires a nonzero constant term."""
        a = self.coefficients
        if a[0] == 0.0:
            raise ZeroDivisionError("reciprocal of a series with zero constant term")
        n = self.max_order
        out = [0.0] * (n + 1)
        out[0] = 1.0 / a[0]
        for k in range(1, n + 1):
            s = 0.0
            for j in range(1, k + 1):
                s += a[j] * out[k - j]
            out[k] = -s / a[0]
        return TruncatedSeries(tuple(out), n)

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return self * (1.0 / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __call__(self, x: float) -> float:
        # Horner evaluation
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def truncate(self, max_order: int) -> "TruncatedSeries":
        if max_order > self.max_order:
            raise TruncationMismatchError("cannot extend a truncated series")
        return TruncatedSeries(self.coefficients[: max_order + 1], max_order)

    def derivative(self) -> "TruncatedSeries":
        """Formal derivative; one order of information is lost."""
        if self.max_order == 0:
            return TruncatedSeries((0.0,), 0)
        c = tuple(
            i * self.coefficients[i] for i in range(1, self.max_order + 1)
        )
        return TruncatedSeries(c, self.max_order - 1)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coefficients)

    def _check(self, other):
        if self.max_order != other.max_order:
            raise TruncationMismatchError(
                f"order mismatch: {self.max_order} vs {other.max_order}"
            )


def from_hopping(series: HoppingSeries, max_order: int | None = None) -> TruncatedSeries:
    if max_order is None:
        max_order = series.max_order
    if max_order > series.max_order:
        raise TruncationMismatchError(
            "requested truncation exceeds the computed hopping order"
        )
    coeffs = [series.coefficients.get(nu, 0.0).real for nu in range(max_order + 1)]
    return TruncatedSeries(tuple(float(v) for v in coeffs), max_order)


@dataclass(frozen=True)
class LandauCoefficients:
    """Quadratic, quartic, and sextic Landau coefficients as J/U series.

    a2 may be carried to a higher truncation order than a4 and a6; the
    quartic and sextic sources cost two extra hopping orders per source
    pair, so the accessible orders differ.
    """

    a2: TruncatedSeries
    a4: TruncatedSeries | None = None
    a6: TruncatedSeries | None = None


def landau_from_sources(
    c2: TruncatedSeries,
    c4: TruncatedSeries | None = None,
    c6: TruncatedSeries | None = None,
) -> LandauCoefficients:
    """Invert the source expansion into effective-potential coefficients.

    a2 = -1/c2, a4 = c4/c2^4, a6 = c6/c2^6 - 4 c4^2/c2^7, each re-expanded
    as a truncated series in J/U.
    """
    a2 = -c2.reciprocal()
    a4 = None
    a6 = None
    if c4 is not None:
        n4 = c4.max_order
        c2t = c2.truncate(min(n4, c2.max_order))
        c4t = c4.truncate(c2t.max_order)
        a4 = c4t * (c2t.reciprocal() ** 4)
    if c6 is not None:
        if c4 is None:
            raise ValueError("the sextic coefficient requires the quartic source")
        n6 = min(c6.max_order, c4.max_order, c2.max_order)
        c2t = c2.truncate(n6)
        c4t = c4.truncate(n6)
        c6t = c6.truncate(n6)
        inv = c2t.reciprocal()
        a6 = c6t * inv**6 - 4.0 * (c4t * c4t) * inv**7
    return LandauCoefficients(a2=a2, a4=a4, a6=a6)


@dataclass(frozen=True)
class LandauApproximant:
    """Landau coefficients evaluated at a given hopping ratio."""

    J_over_U: float
    a2: float
    a4: float | None = None
    a6: float | None = None

    def potential(self, psi_sq: np.ndarray | float):
        """Effective potential relative to its value at zero order parameter."""
        x = np.asarray(psi_sq, dtype=float)
        out = self.a2 * x
        if self.a4 is not None:
            out = out + self.a4 * x**2
        if self.a6 is not None:
            out = out + self.a6 * x**3
        return out

    def minimizer(self) -> float:
        """Order-parameter magnitude squared at the potential minimum.

        Uses the sextic form when available (requires a6 > 0 for
        boundedness), otherwise the quartic form.
        """
        a2, a4, a6 = self.a2, self.a4, self.a6
        if a6 is not None and a6 > 0.0:
            if a4 is None:
                raise ValueError("sextic minimization requires a quartic term")
            disc = a4 * a4 - 3.0 * a2 * a6
            if disc <= 0.0:
                return 0.0
            root = (-a4 + np.sqrt(disc)) / (3.0 * a6)
            if root <= 0.0:
                return 0.0
            # minimum only if the potential there dips below zero
            val = self.potential(root)
            return float(root) if val < 0.0 else 0.0
        if a4 is None or a4 <= 0.0:
            raise ValueError("quartic minimization requires a4 > 0")
        if a2 >= 0.0:
            return 0.0
        return float(-a2 / (2.0 * a4))


def evaluate_landau(
    coeffs: LandauCoefficients, J_over_U: float
) -> LandauApproximant:
    return LandauApproximant(
        J_over_U=J_over_U,
        a2=coeffs.a2(J_over_U),
        a4=None if coeffs.a4 is None else coeffs.a4(J_over_U),
        a6=None if coeffs.a6 is None else coeffs.a6(J_over_U),
    )
