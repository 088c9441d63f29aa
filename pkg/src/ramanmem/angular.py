"""Exact angular-momentum algebra.

Angular momenta are carried as doubled integers so half-integers stay
exact. Clebsch-Gordan and 6j values are computed from Racah sums in
rational arithmetic and returned as :class:`SqrtRational` (a signed
square root of a fraction), or as floats from the public wrappers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, sqrt


class AngularDomainError(ValueError):
    """Malformed or out-of-range angular momentum arguments."""


@dataclass(frozen=True, order=True)
class HalfInt:
    """Integer or half-integer stored as ``2j``."""

    twice_value: int

    @classmethod
    def of(cls, value) -> "HalfInt":
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, str):
            value = Fraction(value)
        twice = Fraction(value) * 2
        if twice.denominator != 1:
            raise AngularDomainError(f"{value!r} is not a multiple of 1/2")
        return cls(int(twice))

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __float__(self) -> float:
        return self.twice_value / 2

    def __str__(self) -> str:
        if self.is_integer:
            return str(self.twice_value // 2)
        return f"{self.twice_value}/2"

    def __repr__(self) -> str:
        if self.is_integer:
            return f"HalfInt({self.twice_value // 2})"
        return f"HalfInt({self.twice_value}/2)"


@dataclass(frozen=True)
class SqrtRational:
    """Exact number ``sign * sqrt(square)`` with ``square`` a nonnegative fraction."""

    sign: int
    square: Fraction

    @classmethod
    def from_parts(cls, root_of: Fraction, factor: Fraction) -> "SqrtRational":
        """Build ``factor * sqrt(root_of)``."""
        if factor == 0 or root_of == 0:
            return ZERO
        return cls(1 if factor > 0 else -1, Fraction(root_of) * factor * factor)

    def __mul__(self, other) -> "SqrtRational":
        if not isinstance(other, SqrtRational):
            other = SqrtRational.from_parts(Fraction(1), Fraction(other))
        if self.sign == 0 or other.sign == 0:
            return ZERO
        return SqrtRational(self.sign * other.sign, self.square * other.square)

    __rmul__ = __mul__

    def __neg__(self) -> "SqrtRational":
        return SqrtRational(-self.sign, self.square)

    def __float__(self) -> float:
        return self.sign * sqrt(self.square)

    def __bool__(self) -> bool:
        return self.sign != 0


ZERO = SqrtRational(0, Fraction(0))


def _twice(x) -> int:
    return HalfInt.of(x).twice_value


def _triangle(a2: int, b2: int, c2: int) -> bool:
    """Triangle rule on doubled values, including integer perimeter."""
    if (a2 + b2 + c2) % 2:
        return False
    return abs(a2 - b2) <= c2 <= a2 + b2


def _delta(a2: int, b2: int, c2: int) -> Fraction:
    """Triangle coefficient (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!."""
    return Fraction(
        factorial((a2 + b2 - c2) // 2)
        * factorial((a2 - b2 + c2) // 2)
        * factorial((-a2 + b2 + c2) // 2),
        factorial((a2 + b2 + c2) // 2 + 1),
    )


def _check_pair(j2: int, m2: int, name: str) -> None:
    if j2 < 0:
        raise AngularDomainError(f"{name}: negative angular momentum")
    if (j2 - m2) % 2:
        raise AngularDomainError(f"{name}: j and m have inconsistent parity")
    if abs(m2) > j2:
        raise AngularDomainError(f"{name}: |m| > j")


@lru_cache(maxsize=None)
def _cg_exact(j1: int, m1: int, j2: int, m2: int, J: int, M: int) -> SqrtRational:
    if m1 + m2 != M or not _triangle(j1, j2, J):
        return ZERO
    pref = (J + 1) * _delta(j1, j2, J)
    pref *= (
        factorial((j1 + m1) // 2) * factorial((j1 - m1) // 2)
        * factorial((j2 + m2) // 2) * factorial((j2 - m2) // 2)
        * factorial((J + M) // 2) * factorial((J - M) // 2)
    )
    total = Fraction(0)
    k = 0
    while True:
        args = (
            (j1 + j2 - J) // 2 - k,
            (j1 - m1) // 2 - k,
            (j2 + m2) // 2 - k,
            (J - j2 + m1) // 2 + k,
            (J - j1 - m2) // 2 + k,
        )
        if min(args[:3]) < 0:
            break
        if min(args[3:]) >= 0:
            den = factorial(k)
            for a in args:
                den *= factorial(a)
            total += Fraction((-1) ** k, den)
        k += 1
    return SqrtRational.from_parts(pref, total)


def clebsch_gordan_exact(j1, m1, j2, m2, J, M) -> SqrtRational:
    """Exact Condon-Shortley coefficient <j1 m1 j2 m2 | J M>."""
    a = [_twice(x) for x in (j1, m1, j2, m2, J, M)]
    _check_pair(a[0], a[1], "j1,m1")
    _check_pair(a[2], a[3], "j2,m2")
    _check_pair(a[4], a[5], "J,M")
    return _cg_exact(*a)


def clebsch_gordan(j1, m1, j2, m2, J, M) -> float:
    """Clebsch-Gordan coefficient <j1 m1 j2 m2 | J M> as a float.

    Arguments may be ints, fractions, ``"3/2"`` strings or :class:`HalfInt`.
    Returns 0 when ``m1 + m2 != M`` or the triangle rule fails.
    """
    return float(clebsch_gordan_exact(j1, m1, j2, m2, J, M))


@lru_cache(maxsize=None)
def _w6j_exact(a: int, b: int, c: int, d: int, e: int, f: int) -> SqrtRational:
    triads = ((a, b, c), (a, e, f), (d, b, f), (d, e, c))
    if not all(_triangle(*t) for t in triads):
        return ZERO
    pref = Fraction(1)
    for t in triads:
        pref *= _delta(*t)
    sums = [sum(t) // 2 for t in triads]
    pairs = [(a + b + d + e) // 2, (a + c + d + f) // 2, (b + c + e + f) // 2]
    total = Fraction(0)
    for k in range(max(sums), min(pairs) + 1):
        den = 1
        for s in sums:
            den *= factorial(k - s)
        for p in pairs:
            den *= factorial(p - k)
        total += Fraction((-1) ** k * factorial(k + 1), den)
    return SqrtRational.from_parts(pref, total)


def wigner6j_exact(j1, j2, j3, j4, j5, j6) -> SqrtRational:
    """Exact 6j symbol {j1 j2 j3; j4 j5 j6} by the Racah formula."""
    a = [_twice(x) for x in (j1, j2, j3, j4, j5, j6)]
    if min(a) < 0:
        raise AngularDomainError("negative angular momentum in 6j symbol")
    return _w6j_exact(*a)


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}; zero if any triad fails."""
    return float(wigner6j_exact(j1, j2, j3, j4, j5, j6))


@dataclass(frozen=True)
class CouplingCoefficients:
    """Alignment commutator coefficients for a ground level F0.

    Attributes
    ----------
    c1 : Fraction
        Weight of F_z in [T_xy, T_xieta].
    c3 : float
        Weight of T_30 in the same commutator (zero for F0 = 1).
    cbar13 : Fraction
        Combined weight entering the smoothed alignment commutator.
    """

    c1: Fraction
    c3: float
    cbar13: Fraction
    c3_exact: SqrtRational = ZERO


def alignment_coefficients(F0) -> CouplingCoefficients:
    """Return c1, c3 and cbar13 for ground angular momentum ``F0 >= 1``."""
    f2 = _twice(F0)
    if f2 < 2:
        raise AngularDomainError("alignment requires F0 >= 1")
    F = Fraction(f2, 2)
    c1 = Fraction(3) / (F * (F + 1) * (2 * F + 1))
    cbar13 = Fraction(15) / (F * (F + 1) * (2 * F + 1) * (2 * F + 3))
    c3 = SqrtRational.from_parts(
        (F - 1) * (F + 2) / (7 * F * (F + 1) * (2 * F - 1) * (2 * F + 1) * (2 * F + 3)),
        Fraction(-6),
    )
    return CouplingCoefficients(c1=c1, c3=float(c3), cbar13=cbar13, c3_exact=c3)


def tensor_commutator_exact(F0, K, Q, K2, Q2):
    """Expansion of [T_KQ, T_K2Q2] over T_K''Q'' with exact coefficients.

    Returns a list of ``(K'', Q'', SqrtRational)`` with nonzero coefficients,
    ordered by K''. Ranks are integers; ``F0`` may be half-integer.
    """
    f = _twice(F0)
    k1, q1, k2, q2 = (_twice(x) for x in (K, Q, K2, Q2))
    for k, q in ((k1, q1), (k2, q2)):
        if k % 2 or q % 2:
            raise AngularDomainError("tensor ranks and projections must be integers")
        if not 0 <= k <= 2 * f:
            raise AngularDomainError("rank outside 0..2F0")
        if abs(q) > k:
            raise AngularDomainError("|Q| > K")
    q3 = q1 + q2
    out = []
    for k3 in range(abs(k1 - k2), min(k1 + k2, 2 * f) + 1, 2):
        if abs(q3) > k3 or ((k1 + k2 + k3) // 2) % 2 == 0:
            continue
        six = _w6j_exact(k1, k2, k3, f, f, f)
        cg = _cg_exact(k1, q1, k2, q2, k3, q3)
        phase = -1 if ((2 * f + k3) // 2) % 2 else 1
        coef = SqrtRational.from_parts(Fraction((k1 + 1) * (k2 + 1)), Fraction(2 * phase)) * six * cg
        if coef:
            out.append((k3 // 2, q3 // 2, coef))
    return out


def tensor_commutator(F0, K, Q, K2, Q2) -> list[tuple[int, int, float]]:
    """Float version of :func:`tensor_commutator_exact`."""
    return [(k, q, float(c)) for k, q, c in tensor_commutator_exact(F0, K, Q, K2, Q2)]


def alignment_from_commutator(F0) -> tuple[float, float]:
    """Recover (c1, c3) from the T_22, T_2-2 commutator.

    Uses T_xy = (T_2-2 + T_22)/2 and T_xieta = (i/2)(T_2-2 - T_22), so
    [T_xy, T_xieta] = (i/2)[T_22, T_2-2], and F_z is proportional to T_10.
    """
    F = float(HalfInt.of(F0))
    terms = {k: c for k, q, c in tensor_commutator(F0, 2, 2, 2, -2)}
    a1 = terms.get(1, 0.0)
    a3 = terms.get(3, 0.0)
    c1 = 0.5 * a1 * sqrt(3.0 / (F * (F + 1) * (2 * F + 1)))
    return c1, 0.5 * a3
