"""Invariant solutions of the discrete heat equation.

Point reductions act on the scheme written with coordinate differences:
translations along ``z = x + a t`` lead to a three-point (or longer)
difference equation whose exponential solutions are fixed by an algebraic
root condition; dilations along ``z = x / sqrt(t)`` only produce a
difference-delay equation.

Evolutionary reductions act on the fixed uniform lattice: a translation flow
gives a product of two geometric sequences, and the dilation flow gives the
self-similar solution whose spatial differences ``v`` are the Laurent
coefficients of ``gamma_n (z - z1)^n (z - z2)^n / z^(2n+1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq

from .errors import ConstraintError, DomainError, RecurrenceViolation, WindowError
from .heat import HeatScheme, heat_equation, translation_constraint_equation
from .lattice import Field, LatticeGrid, Window, exact, max_abs, scalar, scheme_residual, shift
from .reduction import ReductionResult
from .zpoly import z_transform_I

# --------------------------------------------------------------------------
# helpers


def _is_exact(*values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def _integer_or_none(value, tol=1e-12):
    if isinstance(value, (int, Fraction)):
        value = Fraction(value)
        return int(value) if value.denominator == 1 else None
    r = round(value)
    return int(r) if abs(value - r) <= tol * max(1.0, abs(value)) else None


def _ln(value) -> float:
    return math.log(value) if isinstance(value, (int, float)) else float(mpmath.log(mpmath.mpf(value.numerator) / value.denominator))


# --------------------------------------------------------------------------
# point translations


def translation_root_polynomial(k: int, c) -> np.ndarray:
    """Coefficients (highest degree first) of ``v**k - 1 - c (v - 1)**2``."""
    if k < 1:
        raise ConstraintError("the root condition is polynomial only for k >= 1")
    deg = max(k, 2)
    p = np.zeros(deg + 1, dtype=float)
    p[deg - k] += 1.0
    p[deg] -= 1.0
    # - c (v^2 - 2v + 1)
    p[deg - 2] -= float(c)
    p[deg - 1] += 2.0 * float(c)
    p[deg] -= float(c)
    return np.trim_zeros(p, "f")


def translation_roots(k: int, c, tol: float = 1e-9) -> list[float]:
    """Real positive roots ``v = exp(alpha A)`` of the root condition, ascending."""
    roots = np.roots(translation_root_polynomial(k, c))
    real = sorted({round(r.real, 12) for r in roots if abs(r.imag) <= tol and r.real > tol})
    return [float(r) for r in real]


def transcendental_alpha_residual(alpha: float, a, c, A) -> float:
    """``exp(alpha a c A**2) - 1 - c (exp(2 alpha A) - 2 exp(alpha A) + 1)``."""
    ea = math.exp(alpha * A)
    return math.exp(alpha * a * c * A * A) - 1.0 - c * (ea - 1.0) ** 2


def scan_alpha_roots(a, c, A, lo: float = -20.0, hi: float = 20.0, samples: int = 4001) -> list[float]:
    """All nonzero real roots of the transcendental condition found by sign changes on a grid."""
    a, c, A = float(a), float(c), float(A)
    grid = np.linspace(lo, hi, samples)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.array([transcendental_alpha_residual(x, a, c, A) if abs(x * A) < 700 else np.nan for x in grid])
    roots = []
    for x0, x1, f0, f1 in zip(grid, grid[1:], vals, vals[1:]):
        if not (np.isfinite(f0) and np.isfinite(f1)):
            continue
        if f0 == 0.0:
            if abs(x0) > 1e-9:
                roots.append(float(x0))
            continue
        if f0 * f1 < 0:
            r = brentq(transcendental_alpha_residual, x0, x1, args=(a, c, A), xtol=1e-15, rtol=4 * np.finfo(float).eps)
            if abs(r) > 1e-9:
                roots.append(float(r))
    return roots


class PointTranslationSolution(NamedTuple):
    """``u = c1 exp(alpha z) + c2`` with ``z = A (m + k n) + z0``."""

    alpha: float
    A: float
    k: float
    c1: float
    c2: float
    z0: float = 0.0

    def z(self, m, n):
        return self.A * (m + self.k * n) + self.z0

    def __call__(self, m, n):
        return self.c1 * np.exp(self.alpha * self.z(np.asarray(m, float), np.asarray(n, float))) + self.c2


def translation_reduce_point(c, A=1, a=None, k=None, c1=1, c2=0, z0=0, bracket=None,
                             window: Sequence[int] = (-6, 7)) -> ReductionResult:
    """Reduce by ``P0_hat - a P1_hat``.

    Exactly one of ``a`` and ``k = A a c`` is given.  For integer ``k >= 1``
    the real positive roots of ``v**k - 1 = c (v - 1)**2`` are enumerated;
    ``v = 1`` is the constant-solution branch.  For ``k = 1`` the nontrivial
    root is ``(c + 1)/c`` and ``u(N) = c1 v**N + c2`` is checked against the
    reduced three-point equation over ``window`` (exactly, when the inputs
    are rational).  Non-integer ``k`` is not a lattice reduction; it is
    accepted only with an explicit ``bracket`` for the transcendental root.
    """
    if not c > 0:
        raise ConstraintError("c must be positive")
    if (a is None) == (k is None):
        raise ConstraintError("give exactly one of a and k = A a c")
    if k is None:
        k = A * a * c
    else:
        a = Fraction(k) / (exact(A) * exact(c)) if _is_exact(k, A, c) else k / (A * c)
    k_int = _integer_or_none(k)
    constraint = {"relation": "A*a*c = k", "A": A, "a": a, "c": c, "k": k, "integer": k_int is not None}
    lattice = {"z": "A*(m + A*a*c*n) + z0", "A": A, "z0": z0, "label": "N = m + k*n"}
    reduced = {
        "form": "u(z + a*c*A^2) - u(z) = c*(u(z + 2*A) - 2*u(z + A) + u(z))",
        "stencil": ["z", "z + A", "z + 2*A", "z + a*c*A^2"],
        "lattice_solution": lattice,
    }
    if k_int is None:
        if bracket is None:
            raise ConstraintError(
                f"A*a*c = {k} is not an integer, so the reduced equation is not a lattice equation; "
                "pass a bracket to solve the transcendental condition for alpha"
            )
        lo, hi = bracket
        alpha = brentq(transcendental_alpha_residual, lo, hi, args=(float(a), float(c), float(A)), xtol=1e-15)
        res = abs(transcendental_alpha_residual(alpha, float(a), float(c), float(A)))
        return ReductionResult(
            "translation P0_hat - a*P1_hat (point)", constraint, reduced,
            solution_closed_form="u = c1*exp(alpha*z) + c2 (difference-delay reduced equation)",
            residual_max=res, tolerance=1e-12,
            values={"alpha": alpha, "alpha_A": alpha * float(A), "mode": "transcendental"},
            notes=["non-integer k: the reduced equation relates u at non-lattice points (difference-delay)"],
        )
    if k_int < 1:
        raise ConstraintError(f"k = {k_int}: the root condition has only the constant branch for k < 1")
    roots = translation_roots(k_int, c)
    branches = [{"v": 1.0, "alpha_A": 0.0, "branch": "constant-solution"}]
    branches += [{"v": v, "alpha_A": math.log(v), "branch": "exponential"} for v in roots if abs(v - 1) > 1e-9]
    values = {"k": k_int, "roots": branches}
    if not any(b["branch"] == "exponential" for b in branches):
        return ReductionResult(
            "translation P0_hat - a*P1_hat (point)", constraint, reduced,
            solution_closed_form="u = c1 + c2 (constant-solution branch, alpha = 0)",
            residual_max=0, window=list(window), values=values,
            notes=[f"v = 1 is the only positive real root for k = {k_int}, c = {c}"],
        )
    if k_int == 1:
        v = (exact(c) + 1) / exact(c) if _is_exact(c) else (c + 1) / c
        values["v"] = v
        values["alpha_A"] = _ln(v)
        values["alpha"] = values["alpha_A"] / float(A)
        u = lambda N: c1 * v**N + c2
        res = max_abs(np.array([u(N + 1) - u(N) - c * (u(N + 2) - 2 * u(N + 1) + u(N)) for N in range(*window)], dtype=object))
        form = "u = c1*((c+1)/c)^N + c2, N = (z - z0)/A"
        return ReductionResult(
            "translation P0_hat - a*P1_hat (point)", constraint, reduced, form, res, list(window),
            0.0 if _is_exact(c, c1, c2) else 1e-12, values,
        )
    return ReductionResult(
        "translation P0_hat - a*P1_hat (point)", constraint, reduced,
        solution_closed_form="u = c1*v^N + c2 for each exponential root v",
        window=list(window), values=values,
    )


def point_translation_solution(a, sigma_x, sigma_t, c1=1.0, c2=0.0, bracket=None) -> PointTranslationSolution:
    """Point-symmetry translation solution on the uniform heat lattice (``A = sigma_x``).

    Picks the largest exponential root when ``k = a sigma_t / sigma_x`` is
    an integer and the first nonzero transcendental root otherwise; the
    constant branch (``alpha = 0``) is returned when nothing else exists.
    """
    A = float(sigma_x)
    c = float(sigma_t) / A**2
    k = float(a) * float(sigma_t) / A
    k_int = _integer_or_none(k)
    if k_int is not None and k_int >= 1:
        roots = [v for v in translation_roots(k_int, c) if abs(v - 1) > 1e-9]
        alpha = math.log(max(roots)) / A if roots else 0.0
    elif bracket is not None:
        alpha = brentq(transcendental_alpha_residual, *bracket, args=(float(a), c, A), xtol=1e-15)
    else:
        roots = scan_alpha_roots(a, c, A)
        alpha = roots[0] if roots else 0.0
    return PointTranslationSolution(alpha, A, k, float(c1), float(c2))


# --------------------------------------------------------------------------
# point dilations


def dilation_z(m, n, c, m0=0, n0=0):
    """Symmetry variable ``(m - m0) / sqrt(c (n - n0))``; needs ``n > n0``."""
    if n <= n0:
        raise DomainError(f"n = {n} <= n0 = {n0}: the dilation variable is undefined")
    return (m - m0) / math.sqrt(float(c) * (n - n0))


def dilation_reduce_point(c, m0=0, n0=0, m_range=(-5, 6), n_range=(1, 8)) -> ReductionResult:
    """Reduce by ``D_hat``: verify the lattice recurrences for ``z`` and describe the delay equation.

    The recurrences are checked exactly through ``z**2`` and the sign of
    ``z`` when ``c``, ``m0`` and ``n0`` are rational.
    """
    if min(n_range[0], n_range[1] - 1) <= n0:
        raise DomainError(f"window n in {tuple(n_range)} reaches n <= n0 = {n0}")
    exact_mode = _is_exact(c, m0, n0)
    cc = exact(c) if exact_mode else c
    worst = Fraction(0) if exact_mode else 0.0
    worst_float = 0.0
    for n in range(*n_range):
        for m in range(m_range[0] + 1, m_range[1] - 1):
            # z * sqrt(c (n - n0)) is linear in m, so the second difference vanishes identically
            w = [(mm - m0) for mm in (m - 1, m, m + 1)]
            worst = max(worst, abs(w[2] - 2 * w[1] + w[0]))
            # z_{m,n+1}^2 (1 + c (z - z_minus)^2) = z^2, with equal signs
            z2 = Fraction(m - m0) ** 2 / (cc * (n - n0)) if exact_mode else (m - m0) ** 2 / (c * (n - n0))
            z2_next = Fraction(m - m0) ** 2 / (cc * (n + 1 - n0)) if exact_mode else (m - m0) ** 2 / (c * (n + 1 - n0))
            dz2 = 1 / (cc * (n - n0))
            worst = max(worst, abs(z2_next * (1 + cc * dz2) - z2))
            zf = dilation_z(m, n, c, m0, n0)
            zf_next = dilation_z(m, n + 1, c, m0, n0)
            zf_minus = dilation_z(m - 1, n, c, m0, n0)
            worst_float = max(worst_float, abs(zf_next - zf / math.sqrt(1 + float(c) * (zf - zf_minus) ** 2)))
    reduced = {
        "form": "u(z*gamma_{n+1}/gamma_n) - u(z) = c*(u(z + 2*gamma_n) - 2*u(z + gamma_n) + u(z))",
        "gamma_n": "1/sqrt(c*(n - n0))",
        "kind": "difference-delay",
        "solver": None,
    }
    return ReductionResult(
        "dilation D_hat (point)",
        {"z": "(m - m0)/sqrt(c*(n - n0))", "c": c, "m0": m0, "n0": n0, "requires": "n > n0"},
        reduced,
        solution_closed_form=None,
        residual_max=worst,
        window=[m_range[0], m_range[1], n_range[0], n_range[1]],
        tolerance=0.0 if exact_mode else 1e-12,
        values={"float_recurrence_residual": worst_float},
        notes=["the delay equation is generated, not solved"],
    )


# --------------------------------------------------------------------------
# evolutionary translations


def translation_evolutionary_value(m, n, a, sigma_x, sigma_t, c1=1, c2=0):
    return c1 * (1 + a * a * sigma_t) ** n * (1 + a * sigma_x) ** m + c2


def translation_evolutionary_field(grid: LatticeGrid, a, c1=1, c2=0) -> Field:
    sx, st = grid.sigma_x, grid.sigma_t
    a, c1, c2 = (scalar(v, grid.mode) for v in (a, c1, c2))
    # elementwise: numpy's reflected power would demote a Fraction base to float
    cell = np.frompyfunc(lambda i, j: translation_evolutionary_value(int(i), int(j), a, sx, st, c1, c2), 2, 1)
    values = cell(*grid.window.index_arrays())
    return Field(grid, grid.window, values if grid.mode == "rational" else values.astype(float))


def translation_evolutionary_xt(x, t, a, sigma_x, sigma_t, c1=1.0, c2=0.0):
    """The same solution written in the coordinates; needs ``1 + a sigma_x > 0``."""
    if 1 + a * sigma_x <= 0:
        raise DomainError("1 + a*sigma_x <= 0: real powers in x are undefined")
    return c1 * (1 + a * sigma_x) ** (x / sigma_x) * (1 + a * a * sigma_t) ** (t / sigma_t) + c2


def translation_reduce_evolutionary(a, scheme: HeatScheme, c1=1, c2=0, m_range=(-4, 6), n_range=(0, 6)) -> ReductionResult:
    """Reduce by the flow ``Delta_t u - a Delta_x u`` and check the closed form.

    Residuals of the heat scheme and of the invariance constraint are
    evaluated jointly, exactly when every input is rational.
    """
    if 1 + a * scheme.sigma_x == 0:
        raise ConstraintError("1 + a*sigma_x = 0 collapses the solution to a constant")
    mode = "rational" if _is_exact(a, c1, c2) and scheme.is_exact else "double"
    grid = scheme.grid(m_range, n_range, mode=mode)
    u = translation_evolutionary_field(grid, a, c1, c2)
    r_heat = scheme_residual(heat_equation(scalar(scheme.c, mode)), grid, u).max_abs
    k = scalar(a, mode) * grid.sigma_t / grid.sigma_x
    r_inv = scheme_residual(translation_constraint_equation(scalar(a, mode), grid.sigma_x, grid.sigma_t), grid, u).max_abs
    scale = 1.0 if mode == "rational" else max(1.0, u.max_abs())
    return ReductionResult(
        "translation P0 - a*P1 (evolutionary)",
        {"form": "u[m,n+1] - u[m,n] = a*(sigma_t/sigma_x)*(u[m+1,n] - u[m,n])", "a": a, "k": k},
        {"form": "a*(u[m+1,n] - u[m,n]) = (u[m+2,n] - 2*u[m+1,n] + u[m,n])/sigma_x", "stencil": [0, 1, 2]},
        "u = c1*(1 + a^2*sigma_t)^n*(1 + a*sigma_x)^m + c2"
        " = c1*(1 + a*sigma_x)^(x/sigma_x)*(1 + a^2*sigma_t)^(t/sigma_t) + c2",
        max(r_heat, r_inv) / scale,
        [m_range[0], m_range[1], n_range[0], n_range[1]],
        0.0 if mode == "rational" else 1e-12,
        {"heat_residual": r_heat, "constraint_residual": r_inv, "mode": mode},
    )


def translation_limit_errors(a=1.0, x=1.0, t=1.0, sigmas=(0.1, 0.05, 0.025, 0.0125)) -> list[float]:
    """``|u(x, t) - exp(a x + a**2 t)|`` with ``sigma_x = s``, ``sigma_t = s**2``."""
    target = math.exp(a * x + a * a * t)
    return [abs(translation_evolutionary_xt(x, t, a, s, s * s) - target) for s in sigmas]


# --------------------------------------------------------------------------
# evolutionary dilations: the reduced equations


@dataclass(frozen=True)
class LinearRecurrence:
    """A linear equation in ``m`` (``n`` fixed): ``sum_k coeff_k(m) w[m + k] = 0``."""

    name: str
    offsets: tuple[int, ...]
    coefficients: Callable
    text: str

    def residual(self, w: Callable, m):
        return sum(cf * w(m + k) for k, cf in zip(self.offsets, self.coefficients(m)))

    def to_dict(self) -> dict:
        return {"name": self.name, "offsets": list(self.offsets), "form": self.text}


def build_dilation_reduced_equation(n: int, c) -> dict[str, LinearRecurrence]:
    """Four-point equation in ``u`` and three-point equation in ``v = Delta_x u``.

    The ``u`` form equals ``sigma_x`` times the ``v`` form evaluated on
    ``v = Delta_x u``, so the second is a first integral of the first.
    """
    a = 2 * c * (n + 1)

    def u_coeffs(m):
        return (-m * (c + 1), a + m * (3 * c + 1), -2 * a - 3 * m * c, a + m * c)

    def v_coeffs(m):
        return (m * (c + 1), -a - 2 * m * c, a + m * c)

    return {
        "u": LinearRecurrence(
            "dilation_reduced_u", (-1, 0, 1, 2), u_coeffs,
            "2c(n+1)[u(m+2) - 2u(m+1) + u(m)] + m[c(u(m+2) - u(m+1)) - 2c(u(m+1) - u(m)) + (c+1)(u(m) - u(m-1))] = 0",
        ),
        "v": LinearRecurrence(
            "dilation_reduced_v", (-1, 0, 1), v_coeffs,
            "2c(n+1)(v(m+1) - v(m)) + m[c v(m+1) - 2c v(m) + (c+1) v(m-1)] = 0",
        ),
    }


def dilation_constraint_residual(f: Field) -> Field:
    """``2t (u - u[0,-1])/sigma_t + x (u - u[-1,0])/sigma_x`` on a uniform lattice."""
    g = f.grid
    if not (g.is_uniform("x") and g.is_uniform("t")):
        raise WindowError("the self-similarity condition needs a uniform lattice")
    x, t = f.coords()
    xf, tf = Field(g, f.window, x), Field(g, f.window, t)
    return 2 * tf * (f - shift(f, 0, -1)) / g.sigma_t + xf * (f - shift(f, -1, 0)) / g.sigma_x


def dilation_index_residual(u: Field) -> Field:
    """``2n (u - u[0,-1]) + m (u - u[-1,0])`` using the lattice indices."""
    ii, jj = u.window.index_arrays()
    mf = Field(u.grid, u.window, ii.astype(object) if u.mode == "rational" else ii)
    nf = Field(u.grid, u.window, jj.astype(object) if u.mode == "rational" else jj)
    return 2 * nf * (u - shift(u, 0, -1)) + mf * (u - shift(u, -1, 0))


def dilation_v_residual(v: Field) -> Field:
    """``2n (v - v[0,-1]) + (m + 1) v - m v[-1,0]`` using the lattice indices."""
    ii, jj = v.window.index_arrays()
    conv = (lambda a: a.astype(object)) if v.mode == "rational" else (lambda a: a)
    mf = Field(v.grid, v.window, conv(ii))
    nf = Field(v.grid, v.window, conv(jj))
    return 2 * nf * (v - shift(v, 0, -1)) + (mf + 1) * v - mf * shift(v, -1, 0)


def reduced_limit_errors(u, ux, uxx, x=0.7, t=0.9, c=1.0, sigmas=(0.1, 0.05, 0.025, 0.0125)) -> list[float]:
    """Distance between the four-point reduced operator and ``2t u_xx + x u_x``.

    With ``x = sigma m``, ``t = c sigma**2 n`` the left side of the reduced
    ``u`` equation tends to the continuous dilation condition at first order.
    """
    target = 2 * t * uxx(x) + x * ux(x)
    errs = []
    for s in sigmas:
        m = x / s
        n = t / (c * s * s)
        eq = build_dilation_reduced_equation(n, c)["u"]
        val = eq.residual(lambda k: u(k * s), m)
        errs.append(abs(val - target))
    return errs


# --------------------------------------------------------------------------
# evolutionary dilations: gamma and the self-similar solution


def gamma_recurrence_residual(N: int, n: int, c, gamma_n, gamma_prev) -> Fraction:
    """``gamma_n[(N-1) I(N,n) - (N-2n-2) I(N-1,n)] - 2n gamma_{n-1} I(N-2,n-1)``."""
    return gamma_n * ((N - 1) * z_transform_I(N, n, c) - (N - 2 * n - 2) * z_transform_I(N - 1, n, c)) - (
        2 * n * gamma_prev * z_transform_I(N - 2, n - 1, c)
    )


def gamma_sequence(n: int, c, gamma0=1, check_N: Sequence[int] | None = None) -> Fraction:
    """``gamma_n = (c + 1)**n gamma0``, optionally verifying the recurrence for ``N`` in ``check_N``.

    A nonzero recurrence residual raises :class:`RecurrenceViolation`; it
    would mean the I oracle or this formula is wrong.
    """
    c, gamma0 = exact(c), exact(gamma0)
    g = (c + 1) ** n * gamma0
    if check_N is not None:
        if n < 1:
            raise ValueError("the recurrence links gamma_n to gamma_{n-1}; it needs n >= 1")
        g_prev = (c + 1) ** (n - 1) * gamma0
        for N in check_N:
            r = gamma_recurrence_residual(N, n, c, g, g_prev)
            if r != 0:
                raise RecurrenceViolation(f"gamma recurrence fails at N={N}, n={n}, c={c}: residual {r}")
    return g


def dilation_invariant_solution(m: int, n: int, c, gamma0=1) -> Fraction:
    """``v[m, n] = gamma0 (c + 1)**n I(m + 2n + 2, n)``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return gamma_sequence(n, c, gamma0) * z_transform_I(m + 2 * n + 2, n, c)


def dilation_invariant_field(m_range, n_range, c, gamma0=1, sigma_x=1) -> Field:
    """The self-similar ``v`` on the uniform lattice with ``x = sigma_x m``, ``t = c sigma_x**2 n``."""
    grid = LatticeGrid.heat(m_range, n_range, exact(sigma_x), exact(c), mode="rational")
    cell = np.frompyfunc(lambda i, j: dilation_invariant_solution(int(i), int(j), c, gamma0), 2, 1)
    return Field.from_function(grid, lambda i, j, x, t: cell(i, j))


def dilation_u_field(m_range, n_range, c, gamma0=1, sigma_x=1) -> Field:
    """``u[m, n] = sigma_x * sum_{j < m} v[j, n]``: the self-similar heat solution itself.

    ``v[j, n]`` vanishes for ``j < -2n - 1``, so the sum is finite.
    """
    sx = exact(sigma_x)
    grid = LatticeGrid.heat(m_range, n_range, sx, exact(c), mode="rational")

    def cell(i, j):
        i, j = int(i), int(j)
        return sx * sum((dilation_invariant_solution(k, j, c, gamma0) for k in range(-2 * j - 1, i)), Fraction(0))

    return Field.from_function(grid, lambda i, j, x, t: np.frompyfunc(cell, 2, 1)(i, j))


def _support(n: int) -> range:
    return range(-2 * n - 1, 0)


class LimitReport(NamedTuple):
    sigmas: list
    errors: list
    orders: list

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.errors, self.errors[1:]))


def _orders(errors, ratio=2.0):
    out = []
    for a, b in zip(errors, errors[1:]):
        out.append(math.log(a / b, ratio) if a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b) else float("nan"))
    return out


def self_similar_limit_pointwise(c=1, gamma0=1, t=1.0, xs=(-1.5, -0.5, 0.5, 1.5), levels=(1, 2, 3, 4)) -> LimitReport:
    """Pointwise comparison of ``sqrt(4 pi) v / sigma_x`` with ``gamma0/sqrt(t) exp(-x**2/4t)``.

    Refinement ``sigma_x = 2**-level``, ``sigma_t = c sigma_x**2``; ``x`` and
    ``t`` are snapped to the nearest lattice node.
    """
    c = exact(c)
    sigmas, errors = [], []
    for lev in levels:
        s = Fraction(1, 2**lev)
        n = round(t / float(c * s * s))
        tt = float(c * s * s * n)
        worst = 0.0
        for x in xs:
            m = round(x / float(s))
            v = dilation_invariant_solution(m, n, c, gamma0)
            approx = mpmath.sqrt(4 * mpmath.pi) * mpmath.mpf(v.numerator) / v.denominator / float(s)
            exact_v = float(gamma0) / math.sqrt(tt) * math.exp(-(float(s) * m) ** 2 / (4 * tt))
            worst = max(worst, float(abs(approx - exact_v)))
        sigmas.append(float(s))
        errors.append(worst)
    return LimitReport(sigmas, errors, _orders(errors))


def pointwise_limit_residual(c=1, gamma0=1, t=1.0, xs=(-1.5, -0.5, 0.5, 1.5), levels=(1, 2, 3, 4)) -> LimitReport:
    """Residual of ``2t v_x + x v = 0`` on the rescaled discrete ``v`` (backward difference in x)."""
    c = exact(c)
    sigmas, errors = [], []
    for lev in levels:
        s = Fraction(1, 2**lev)
        n = round(t / float(c * s * s))
        tt = c * s * s * n
        worst = mpmath.mpf(0)
        for x in xs:
            m = round(x / float(s))
            v0 = dilation_invariant_solution(m, n, c, gamma0)
            vm = dilation_invariant_solution(m - 1, n, c, gamma0)
            r = (2 * tt * (v0 - vm) / s + s * m * v0) / s  # rescaled by 1/sigma_x like v itself
            worst = max(worst, abs(mpmath.mpf(r.numerator) / r.denominator) * mpmath.sqrt(4 * mpmath.pi))
        sigmas.append(float(s))
        errors.append(float(worst))
    return LimitReport(sigmas, errors, _orders(errors))


def _characteristic(n: int, c, gamma0, s, omega) -> tuple[mpmath.mpc, mpmath.mpc]:
    """``sum_m v e^{i omega s m}`` and its omega-derivative, in high precision."""
    total = mpmath.mpc(0)
    deriv = mpmath.mpc(0)
    for m in _support(n):
        v = dilation_invariant_solution(m, n, c, gamma0)
        vm = mpmath.mpf(v.numerator) / v.denominator
        ph = mpmath.expj(omega * s * m)
        total += vm * ph
        deriv += vm * 1j * s * m * ph
    return total, deriv


def self_similar_limit_fourier(c=1, gamma0=1, t=1.0, omegas=(0.5, 1.0, 1.5), levels=(1, 2, 3, 4)) -> tuple[LimitReport, LimitReport]:
    """Weak form of the continuous limit, through the characteristic function.

    Returns two reports: the distance ``|V(omega) - gamma0 exp(-omega**2 t)|``
    and the transformed residual ``|V'(omega) + 2 t omega V(omega)|`` of
    ``2t v_x + x v = 0``.  Sums are carried out with enough digits to
    absorb the cancellation among the alternating coefficients.
    """
    c = exact(c)
    sig, e_val, e_res = [], [], []
    for lev in levels:
        s = Fraction(1, 2**lev)
        n = round(t / float(c * s * s))
        tt = float(c * s * s * n)
        digits = int(n * math.log10(1 + 4 * float(c))) + 30
        with mpmath.workdps(digits):
            sf = mpmath.mpf(s.numerator) / s.denominator
            worst_v = worst_r = mpmath.mpf(0)
            for w in omegas:
                V, dV = _characteristic(n, c, gamma0, sf, w)
                worst_v = max(worst_v, abs(V - float(gamma0) * mpmath.exp(-w * w * tt)))
                worst_r = max(worst_r, abs(dV + 2 * tt * w * V))
        sig.append(float(s))
        e_val.append(float(worst_v))
        e_res.append(float(worst_r))
    return LimitReport(sig, e_val, _orders(e_val)), LimitReport(sig, e_res, _orders(e_res))


def dilation_reduce_evolutionary(c, gamma0=1, n: int = 3, m: int = 0, m_range=(-20, 21), n_range=(1, 11)) -> ReductionResult:
    """Self-similar reduction: ``v`` at ``(m, n)`` plus exact checks of both reduced equations."""
    c, gamma0 = exact(c), exact(gamma0)
    value = dilation_invariant_solution(m, n, c, gamma0)
    v = dilation_invariant_field((m_range[0] - 1, m_range[1] + 1), (n_range[0] - 1, n_range[1]), c, gamma0)
    worst = Fraction(0)
    for nn in range(*n_range):
        eq = build_dilation_reduced_equation(nn, c)["v"]
        for mm in range(*m_range):
            worst = max(worst, abs(eq.residual(lambda k: v[k, nn], mm)))
    inv = dilation_v_residual(v)
    inv_max = max((abs(x) for x in inv.values.ravel()), default=Fraction(0))
    worst = max(worst, inv_max)
    eqs = build_dilation_reduced_equation(n, c)
    return ReductionResult(
        "dilation D - (1 - T_x^-1/2) W (evolutionary)",
        {"form": "2t(u[m,n] - u[m,n-1])/sigma_t + x(u[m,n] - u[m-1,n])/sigma_x = 0",
         "v_form": "2n(v[m,n] - v[m,n-1]) + (m+1)v[m,n] - m v[m-1,n] = 0"},
        {"u": eqs["u"].to_dict(), "v": eqs["v"].to_dict(), "substitution": "v[m,n] = (u[m+1,n] - u[m,n])/sigma_x"},
        "v[m,n] = gamma0*(c+1)^n * I(m+2n+2, n), I(N,n) = [z^(N-1)] (z^2 - 2c/(c+1) z + c/(c+1))^n",
        worst,
        [m_range[0], m_range[1], n_range[0], n_range[1]],
        0.0,
        {"m": m, "n": n, "c": c, "gamma0": gamma0, "gamma_n": gamma_sequence(n, c, gamma0),
         "I": z_transform_I(m + 2 * n + 2, n, c), "v": value},
    )
