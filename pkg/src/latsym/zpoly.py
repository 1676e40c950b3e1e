"""Exact rational polynomials and the contour integrals of the self-similar heat solution.

The integral

    I(N, n) = (1 / 2 pi i) * contour_integral (z - z1)**n (z - z2)**n z**(-N) dz

over the unit circle is the residue at the origin, i.e. the coefficient of
``z**(N-1)`` in ``q(z)**n`` with ``q(z) = (z - z1)(z - z2)``.  For rational
``c`` both ``z1 + z2 = 2c/(c+1)`` and ``z1 z2 = c/(c+1)`` are rational, so the
whole computation stays in ``Fraction``.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable

import numpy as np

from .lattice import exact


class CoeffPolynomial:
    """Univariate polynomial with exact rational coefficients, ascending degree."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [exact(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def from_roots_symmetric(cls, s, p) -> "CoeffPolynomial":
        """Monic quadratic with root sum ``s`` and root product ``p``."""
        return cls([p, -exact(s), 1])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    def coeff(self, k: int) -> Fraction:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def __eq__(self, other):
        if not isinstance(other, CoeffPolynomial):
            other = CoeffPolynomial([other])
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"CoeffPolynomial({[str(c) for c in self.coeffs]})"

    def _lift(self, other) -> "CoeffPolynomial":
        return other if isinstance(other, CoeffPolynomial) else CoeffPolynomial([other])

    def __add__(self, other):
        other = self._lift(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return CoeffPolynomial(self.coeff(k) + other.coeff(k) for k in range(n))

    __radd__ = __add__

    def __neg__(self):
        return CoeffPolynomial(-c for c in self.coeffs)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        if not self.coeffs or not other.coeffs:
            return CoeffPolynomial()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return CoeffPolynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "CoeffPolynomial":
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        result, base = CoeffPolynomial([1]), self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def __call__(self, z):
        exact_arg = isinstance(z, (int, Fraction))
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * z + (c if exact_arg else float(c))
        return acc


def heat_q(c) -> CoeffPolynomial:
    """``q(z) = z**2 - 2c/(c+1) z + c/(c+1)``."""
    c = exact(c)
    if c <= 0:
        raise ValueError("c must be positive")
    return CoeffPolynomial.from_roots_symmetric(2 * c / (c + 1), c / (c + 1))


def heat_roots(c) -> tuple[complex, complex]:
    """``z1, z2 = (c +- i sqrt(c)) / (c + 1)``; both inside the unit circle for c > 0."""
    c = float(c)
    return complex(c, math.sqrt(c)) / (c + 1), complex(c, -math.sqrt(c)) / (c + 1)


@lru_cache(maxsize=256)
def _q_power(n: int, c: Fraction) -> CoeffPolynomial:
    return heat_q(c) ** n


def z_transform_I(N: int, n: int, c) -> Fraction:
    """Coefficient of ``z**(N-1)`` in ``q(z)**n``; zero outside ``1 <= N <= 2n+1``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if N <= 0 or N - 1 > 2 * n:
        return Fraction(0)
    return _q_power(n, exact(c)).coeff(N - 1)


def convolution_I(N: int, n: int, c) -> Fraction:
    """Same coefficient by ``n`` successive multiplications (independent of squaring)."""
    if N <= 0 or N - 1 > 2 * n:
        return Fraction(0)
    q = heat_q(c)
    acc = CoeffPolynomial([1])
    for _ in range(n):
        acc = acc * q
    return acc.coeff(N - 1)


def multinomial_I(N: int, n: int, c) -> Fraction:
    """Closed sum over ``z**(2i) (beta z)**j gamma**k`` with ``i + j + k = n``, ``2i + j = N - 1``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if N <= 0 or N - 1 > 2 * n:
        return Fraction(0)
    c = exact(c)
    beta, gamma = -2 * c / (c + 1), c / (c + 1)
    e = N - 1
    total = Fraction(0)
    for i in range(e // 2 + 1):
        j = e - 2 * i
        k = n - i - j
        if k < 0:
            continue
        mult = math.factorial(n) // (math.factorial(i) * math.factorial(j) * math.factorial(k))
        total += mult * beta**j * gamma**k
    return total


def contour_I(N: int, n: int, c, points: int | None = None) -> float:
    """Trapezoid rule for the contour integral on ``|z| = 1``.

    The integrand is a trigonometric polynomial, so the rule is exact (up to
    round-off) once ``points`` exceeds its frequency range.
    """
    z1, z2 = heat_roots(c)
    points = points or (2 * n + abs(N) + 16)
    theta = 2 * np.pi * np.arange(points) / points
    z = np.exp(1j * theta)
    integrand = ((z - z1) * (z - z2)) ** n * z ** (1 - N)
    return float(np.mean(integrand).real)


def I_table(n_max: int, c) -> dict[tuple[int, int], Fraction]:
    """All nonzero ``I(N, n)`` with ``0 <= n <= n_max``."""
    return {(N, n): z_transform_I(N, n, c) for n in range(n_max + 1) for N in range(1, 2 * n + 2)}

