"""Exact values of the contour integrals I(r, E) at t = 0.

I(r, E) = 2^E / (2 pi i) \\oint u^r exp(2t/(u^2-1)) / ((u-1)^(K+E) (u+1)^E) du

Every evaluation needed downstream sets t = 0 after differentiating, and each
t-derivative only raises E by one, so an integral is named by the triple
(r, E, K) and its value is an exact rational.
"""
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Tuple

from logderiv.combinatorics import ExactRational
from logderiv.errors import InvalidArgumentError


@dataclass(frozen=True)
class IntegralSpec:
    """The integral I(r, E) inside a K x K determinant"""
    r: int
    E: int
    K: int

    def __post_init__(self):
        if self.E < 0:
            raise InvalidArgumentError(f"differentiation count E must be >= 0, got {self.E}")
        if self.K < 1:
            raise InvalidArgumentError(f"matrix size K must be >= 1, got {self.K}")

    @property
    def degree(self) -> int:
        return self.r - self.K - 2 * self.E


def degree(spec: IntegralSpec) -> int:
    """r - K - 2E: the integrand decays like u^degree at infinity"""
    return spec.degree


def _series_binomial(p: int, q: int) -> Fraction:
    """Coefficient of v^q in (1 + v)^p for any integer p"""
    value = Fraction(1)
    for i in range(q):
        value = value * (p - i) / (i + 1)
    return value


@lru_cache(maxsize=None)
def _value_at_infinity(r: int, E: int, K: int) -> int:
    # With w = 1/u the integrand is w^(-d) (1-w)^(-(K+E)) (1+w)^(-E) and the
    # sum of all finite residues is the coefficient of w^(d+1).
    d = r - K - 2 * E
    if d <= -2:
        return 0
    top = d + 1
    total = 0
    for p in range(top + 1):
        q = top - p
        lead = _series_binomial(K + E - 1 + p, p)  # [w^p] (1-w)^-(K+E)
        if E == 0:
            tail = 1 if q == 0 else 0
        else:
            tail = (-1) ** q * _series_binomial(E - 1 + q, q)  # [w^q] (1+w)^-E
        total += int(lead) * tail
    return (2 ** E) * total


def integral_value_t0(spec: IntegralSpec) -> ExactRational:
    """Exact I(r, E) at t = 0.

    The contour encloses every finite pole of the integrand. For r >= 0 those
    are u = 1 and u = -1 only; for r < 0 the pole at u = 0 is enclosed as well,
    which keeps both the binomial convention at E = 0 and the vanishing for
    degree <= -2 exact.
    """
    return Fraction(_value_at_infinity(spec.r, spec.E, spec.K))


def residue_sum_pm1(spec: IntegralSpec) -> ExactRational:
    """2^E times the residues at u = 1 and u = -1 only, by Taylor expansion about each pole"""
    r, E, K = spec.r, spec.E, spec.K
    M = K + E

    # u = 1 + v: [v^(M-1)] (1+v)^r (2+v)^(-E)
    at_one = Fraction(0)
    for p in range(M):
        q = M - 1 - p
        at_one += _series_binomial(r, p) * _series_binomial(-E, q) / Fraction(2) ** (E + q)

    # u = -1 + v: [v^(E-1)] (v-1)^r (v-2)^(-M)
    at_minus_one = Fraction(0)
    if E > 0:
        sign_r = -1 if r % 2 else 1
        for p in range(E):
            q = E - 1 - p
            left = sign_r * (-1) ** p * _series_binomial(r, p)
            right = _series_binomial(-M, q) * Fraction(-1, 2) ** q / Fraction(-2) ** M
            at_minus_one += left * right

    return Fraction(2) ** E * (at_one + at_minus_one)


def recursion_split(spec: IntegralSpec) -> Tuple[IntegralSpec, IntegralSpec]:
    """Specs (r-2, E-1) and (r-2, E) with I(r, E) = 2 I(r-2, E-1) + I(r-2, E).

    The identity holds as written with 2^E inside I: u^2 = (u^2 - 1) + 1 splits
    the integrand pointwise and 2 * 2^(E-1) = 2^E.
    """
    if spec.E < 1:
        raise InvalidArgumentError("recursion_split needs E >= 1")
    return (
        IntegralSpec(spec.r - 2, spec.E - 1, spec.K),
        IntegralSpec(spec.r - 2, spec.E, spec.K),
    )


def t_derivative(spec: IntegralSpec) -> IntegralSpec:
    """d/dt I(r, E) = I(r, E + 1)"""
    return IntegralSpec(spec.r, spec.E + 1, spec.K)
