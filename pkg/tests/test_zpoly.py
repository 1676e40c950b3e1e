from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latsym.zpoly import (
    CoeffPolynomial,
    I_table,
    contour_I,
    convolution_I,
    heat_q,
    heat_roots,
    multinomial_I,
    z_transform_I,
)

CS = [Fraction(1, 2), Fraction(1), Fraction(3), Fraction(2, 7)]


def p(c):
    return c / (c + 1)


def test_polynomial_ring_operations():
    a = CoeffPolynomial([1, 1])
    b = CoeffPolynomial([-1, 1])
    assert a * b == CoeffPolynomial([-1, 0, 1])
    assert (a - a).degree == -1 or (a - a).coeffs in ([], ())
    assert a**3 == CoeffPolynomial([1, 3, 3, 1])
    assert CoeffPolynomial([1, 2, 0, 0]).degree == 1
    assert a(Fraction(1, 2)) == Fraction(3, 2)
    with pytest.raises(ValueError):
        a ** -1


def test_q_has_the_expected_roots():
    for c in CS:
        q = heat_q(c)
        assert q.coeff(2) == 1 and q.coeff(1) == -2 * c / (c + 1) and q.coeff(0) == c / (c + 1)
        for z in heat_roots(c):
            assert abs(z) < 1
            assert abs(complex(float(q.coeff(0))) + float(q.coeff(1)) * z + z * z) < 1e-14
    with pytest.raises(ValueError):
        heat_q(0)


@pytest.mark.parametrize("c", CS)
def test_three_exact_oracles_agree(c):
    for n in range(0, 13):
        for N in range(-1, 2 * n + 4):
            v = z_transform_I(N, n, c)
            assert v == convolution_I(N, n, c) == multinomial_I(N, n, c)


@pytest.mark.parametrize("c", CS)
def test_degree_parity_and_monic_top(c):
    for n in range(0, 9):
        assert z_transform_I(0, n, c) == 0
        assert z_transform_I(2 * n + 2, n, c) == 0
        assert z_transform_I(2 * n + 1, n, c) == 1


@pytest.mark.parametrize("c", CS)
def test_closed_forms(c):
    for n in range(0, 11):
        assert z_transform_I(1, n, c) == p(c) ** n
        assert z_transform_I(2, n, c) == -2 * n * p(c) ** n
        if n >= 1:
            assert z_transform_I(-1, n - 1, c) == 0
            I3 = n * p(c) ** (n - 1) * ((2 * n - 1) * c + 1) / (c + 1)
            assert z_transform_I(3, n, c) == I3
            I4 = -Fraction(2, 3) * n * (n - 1) * p(c) ** (n - 1) * ((2 * n - 1) * c + 3) / (c + 1)
            assert z_transform_I(4, n, c) == I4


def test_worked_values():
    assert z_transform_I(1, 3, 1) == Fraction(1, 8)
    assert z_transform_I(2, 3, 1) == Fraction(-3, 4)
    assert z_transform_I(7, 3, 1) == 1
    assert z_transform_I(3, 2, 1) == 2


def test_sign_of_printed_third_integral_is_wrong():
    c, n = Fraction(1), 2
    printed = n * p(c) ** (n - 1) * ((2 * n - 1) * c - 1) / (c + 1)
    assert printed == 1 and z_transform_I(3, n, c) != printed


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10), st.integers(-2, 24), st.sampled_from(CS))
def test_contour_quadrature_agrees(n, N, c):
    assert abs(contour_I(N, n, c) - float(z_transform_I(N, n, c))) < 1e-9


@pytest.mark.parametrize("n", [12, 14, 16])
def test_contour_quadrature_is_relatively_accurate_for_large_n(n):
    # |I| grows past 1e6 here, so only relative agreement is meaningful in doubles
    c = Fraction(3)
    scale = max(abs(float(z_transform_I(N, n, c))) for N in range(1, 2 * n + 2))
    err = max(abs(contour_I(N, n, c) - float(z_transform_I(N, n, c))) for N in range(-2, 2 * n + 4))
    assert err <= 1e-13 * scale


def test_table_covers_the_nonzero_band():
    t = I_table(3, 1)
    assert set(t) == {(N, n) for n in range(4) for N in range(1, 2 * n + 2)}
