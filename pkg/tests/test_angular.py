import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from ramanmem.angular import (AngularDomainError, HalfInt, SqrtRational, alignment_coefficients,
                              alignment_from_commutator, clebsch_gordan, clebsch_gordan_exact,
                              tensor_commutator, tensor_commutator_exact, wigner6j, wigner6j_exact)

HALF = [Fraction(k, 2) for k in range(0, 7)]  # 0 .. 3


def _js(a, b):
    return [abs(a - b) + k for k in range(int(a + b - abs(a - b)) + 1)]


def _ms(j):
    return [-j + k for k in range(int(2 * j) + 1)]


class TestHalfInt:
    def test_parsing(self):
        assert HalfInt.of("3/2").twice_value == 3
        assert HalfInt.of(2).is_integer
        assert float(HalfInt.of(Fraction(5, 2))) == 2.5
        assert str(HalfInt.of("3/2")) == "3/2"

    def test_rejects_third(self):
        with pytest.raises(AngularDomainError):
            HalfInt.of(Fraction(1, 3))


class TestClebschGordan:
    def test_hand_values(self):
        assert clebsch_gordan("1/2", "1/2", "1/2", "-1/2", 1, 0) == pytest.approx(1 / math.sqrt(2), abs=1e-15)
        assert clebsch_gordan(1, 1, 1, -1, 0, 0) == pytest.approx(1 / math.sqrt(3), abs=1e-15)
        assert clebsch_gordan(1, 0, 1, 0, 2, 0) == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
        assert clebsch_gordan(1, 0, 1, 0, 1, 0) == 0.0

    def test_exact_is_sqrt_rational(self):
        v = clebsch_gordan_exact(1, 1, 1, -1, 0, 0)
        assert v == SqrtRational(1, Fraction(1, 3))

    def test_selection_rules(self):
        assert clebsch_gordan(1, 1, 1, 1, 2, 1) == 0.0
        assert clebsch_gordan(1, 0, 1, 0, 3, 0) == 0.0

    def test_bad_projection(self):
        with pytest.raises(AngularDomainError):
            clebsch_gordan(1, 2, 1, 0, 2, 2)

    @pytest.mark.parametrize("j1,j2", [(a, b) for a in HALF for b in HALF])
    def test_orthogonality(self, j1, j2):
        Js = _js(j1, j2)
        for M in {m1 + m2 for m1 in _ms(j1) for m2 in _ms(j2)}:
            pairs = [(m1, M - m1) for m1 in _ms(j1) if abs(M - m1) <= j2]
            states = [(J, M) for J in Js if abs(M) <= J]
            C = np.array([[clebsch_gordan(j1, m1, j2, m2, J, M) for (J, _) in states] for m1, m2 in pairs])
            np.testing.assert_allclose(C.T @ C, np.eye(len(states)), atol=1e-12)
            np.testing.assert_allclose(C @ C.T, np.eye(len(pairs)), atol=1e-12)

    @pytest.mark.parametrize("j1,j2", [(Fraction(1), Fraction(3, 2)), (Fraction(2), Fraction(1)), (Fraction(5, 2), Fraction(3))])
    def test_exchange_symmetry(self, j1, j2):
        for J in [j for j in HALF if abs(j1 - j2) <= j <= j1 + j2 and (j1 + j2 - j).denominator == 1]:
            for m1, m2 in itertools.product(_ms(j1), _ms(j2)):
                if abs(m1 + m2) > J:
                    continue
                a = clebsch_gordan(j1, m1, j2, m2, J, m1 + m2)
                b = clebsch_gordan(j2, m2, j1, m1, J, m1 + m2)
                assert a == pytest.approx((-1) ** int(j1 + j2 - J) * b, abs=1e-12)
                c = clebsch_gordan(j1, -m1, j2, -m2, J, -m1 - m2)
                assert a == pytest.approx((-1) ** int(j1 + j2 - J) * c, abs=1e-12)


class TestWigner6j:
    def test_hand_values(self):
        assert wigner6j(1, 1, 1, 1, 1, 2) == pytest.approx(1 / 6, abs=1e-15)
        assert wigner6j("1/2", "1/2", 1, "1/2", "1/2", 0) == pytest.approx(0.5, abs=1e-15)
        assert wigner6j(1, 1, 0, 1, 1, 1) == pytest.approx(-1 / 3, abs=1e-15)
        assert wigner6j_exact(1, 1, 1, 1, 1, 2) == SqrtRational(1, Fraction(1, 36))

    def test_triangle_violation_is_zero(self):
        assert wigner6j(1, 1, 3, 1, 1, 1) == 0.0

    def test_symmetries(self):
        rng = np.random.default_rng(3)
        count = 0
        for _ in range(400):
            a, b, c, d, e, f = rng.choice(HALF, 6)
            v = wigner6j(a, b, c, d, e, f)
            if v == 0.0:
                continue
            count += 1
            assert wigner6j(b, a, c, e, d, f) == pytest.approx(v, abs=1e-12)
            assert wigner6j(c, a, b, f, d, e) == pytest.approx(v, abs=1e-12)
            assert wigner6j(d, e, c, a, b, f) == pytest.approx(v, abs=1e-12)
        assert count > 10

    @pytest.mark.parametrize("j1,j2,j4,j5", [(1, 1, 1, 1), (Fraction(3, 2), 1, Fraction(1, 2), 2), (2, 3, 2, 1), (3, 3, 3, 3)])
    def test_orthogonality(self, j1, j2, j4, j5):
        j1, j2, j4, j5 = map(Fraction, (j1, j2, j4, j5))
        j3s = sorted(set(_js(j1, j2)) & set(_js(j4, j5)))
        j6s = sorted(set(_js(j1, j5)) & set(_js(j4, j2)))
        for ja in j6s:
            for jb in j6s:
                s = sum((2 * j3 + 1) * (2 * ja + 1) * wigner6j(j1, j2, j3, j4, j5, ja)
                        * wigner6j(j1, j2, j3, j4, j5, jb) for j3 in j3s)
                assert s == pytest.approx(1.0 if ja == jb else 0.0, abs=1e-12)


class TestAlignment:
    def test_F0_one(self):
        a = alignment_coefficients(1)
        assert a.c1 == Fraction(1, 2) and a.cbar13 == Fraction(1, 2) and a.c3 == 0.0

    def test_F0_two(self):
        a = alignment_coefficients(2)
        assert a.c1 == Fraction(1, 10) and a.cbar13 == Fraction(1, 14)
        assert a.c3 == pytest.approx(-0.18070158058105026, abs=1e-12)

    def test_rejects_small_F0(self):
        with pytest.raises(AngularDomainError):
            alignment_coefficients("1/2")

    @pytest.mark.parametrize("F0", [1, "3/2", 2, "5/2", 3])
    def test_reconstructed_from_commutator(self, F0):
        a = alignment_coefficients(F0)
        c1, c3 = alignment_from_commutator(F0)
        assert c1 == pytest.approx(float(a.c1), abs=1e-12)
        assert c3 == pytest.approx(a.c3, abs=1e-12)

    def test_commutator_only_odd_rank(self):
        for K, Q, c in tensor_commutator(2, 2, 2, 2, -2):
            assert K % 2 == 1
        exact = tensor_commutator_exact(2, 2, 2, 2, -2)
        assert {k for k, _, _ in exact} <= {1, 3}
