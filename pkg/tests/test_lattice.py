from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latsym.errors import NonUniformGridError, WindowError
from latsym.heat import heat_equation
from latsym.lattice import (
    Field,
    LatticeGrid,
    Window,
    apply_stencil,
    discrete_derivative,
    exact,
    exp_diff,
    scheme_residual,
    shift,
    stencil_window,
)
from latsym.toda import dttl_residual, translational_solution


def linear_field(mode="double", sx=1, st=1):
    g = LatticeGrid.uniform((-3, 8), (0, 5), sx, st, mode=mode)
    return Field.from_function(g, lambda i, j, x, t: i + 0 * j)


def test_exact_conversions():
    assert exact("3/4") == Fraction(3, 4)
    assert exact(0.5) == Fraction(1, 2)
    assert exact(np.int64(7)) == 7
    with pytest.raises(TypeError):
        exact(object())


def test_window_bookkeeping():
    w = Window(0, 10, 0, 5)
    assert w.shape == (10, 5)
    assert stencil_window(w, [(0, 0), (2, 0), (0, 1)]) == Window(0, 8, 0, 4)
    assert Window(3, 3, 0, 1).empty
    assert w.covers(Window(2, 4, 1, 3)) and not w.covers(Window(-1, 4, 1, 3))


def test_uniform_grid_satisfies_lattice_equations():
    g = LatticeGrid.heat((0, 6), (0, 4), Fraction(1, 2), Fraction(3), x0=Fraction(1, 3), t0=-1, mode="rational")
    assert g.is_uniform("x") and g.is_uniform("t")
    assert g.closed_form_error() == 0
    x, t = g.x, g.t
    assert np.all(x[2:] - 2 * x[1:-1] + x[:-2] == 0)
    assert np.all(t[:, 1:] - t[:, :-1] == 3 * (x[1:2, :1] - x[0:1, :1]) ** 2)


def test_non_uniform_grid_rejected_by_derivatives():
    base = LatticeGrid.uniform((0, 5), (0, 3), 1.0, 1.0)
    x = base.x.copy()
    x[3] += 0.1
    g = LatticeGrid(base.window, x, base.t, 1.0, 1.0)
    f = Field.constant(g, 1.0)
    assert not g.is_uniform("x")
    with pytest.raises(NonUniformGridError):
        discrete_derivative(f, "x")


def test_field_access_outside_window_raises():
    f = linear_field()
    assert f[2, 1] == 2
    with pytest.raises(WindowError):
        f[100, 0]
    with pytest.raises(ValueError):
        f.values[0, 0] = 5.0  # read-only storage


def test_shift_examples():
    f = linear_field("rational")
    assert np.all(shift(f, 0, 0).values == f.values)
    s = shift(f, 1, 0)
    assert s.window == Window(-3, 7, 0, 5)
    assert all(s[i, 0] == i + 1 for i in range(-3, 7))
    with pytest.raises(WindowError):
        shift(f, 50, 0)


def test_shift_of_evolutionary_translation_solution_doubles():
    g = LatticeGrid.uniform((0, 6), (0, 4), 1, 1, mode="rational")
    f = Field.from_function(g, lambda m, n, x, t: 2**m * 2**n)
    s = shift(f, 1, 0)
    assert np.all(s.values == 2 * f.restrict(s.window).values)


@settings(max_examples=25, deadline=None)
@given(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2))
def test_shift_composition(a, b, c, d):
    g = LatticeGrid.uniform((0, 9), (0, 9), 1.0, 1.0)
    rng = np.random.default_rng(0)
    f = Field(g, g.window, rng.standard_normal((9, 9)))
    lhs = shift(shift(f, a, b), c, d)
    rhs = shift(f, a + c, b + d)
    common = lhs.window.intersect(rhs.window)
    assert np.array_equal(lhs.restrict(common).values, rhs.restrict(common).values)


@pytest.mark.parametrize("kind", ["forward", "backward", "symmetric", "second_forward"])
@pytest.mark.parametrize("axis", ["x", "t"])
def test_derivative_of_constant_is_zero(kind, axis):
    g = LatticeGrid.uniform((0, 6), (0, 6), Fraction(1, 3), Fraction(2), mode="rational")
    assert discrete_derivative(Field.constant(g, 7), axis, kind).max_abs() == 0


def test_derivative_examples():
    g = LatticeGrid.uniform((0, 8), (0, 3), Fraction(1, 4), 1, mode="rational")
    fx = Field.from_function(g, lambda i, j, x, t: x)
    assert np.all(discrete_derivative(fx, "x").values == 1)
    g1 = LatticeGrid.uniform((0, 8), (0, 3), 1, 1, mode="rational")
    sq = Field.from_function(g1, lambda i, j, x, t: i * i)
    assert np.all(discrete_derivative(sq, "x", "second_forward").values == 2)


def test_symmetric_is_mean_of_one_sided():
    g = LatticeGrid.uniform((0, 10), (0, 4), 0.3, 0.2)
    f = Field.from_function(g, lambda i, j, x, t: np.sin(x) * np.exp(t))
    fw, bw, sy = (discrete_derivative(f, "x", k) for k in ("forward", "backward", "symmetric"))
    diff = sy - (fw + bw) * 0.5
    assert diff.max_abs() < 1e-14


def test_forward_derivative_commutes_with_shift():
    g = LatticeGrid.uniform((0, 10), (0, 6), 0.5, 0.25)
    rng = np.random.default_rng(1)
    f = Field(g, g.window, rng.standard_normal((10, 6)))
    a = discrete_derivative(shift(f, 1, 1), "t")
    b = shift(discrete_derivative(f, "t"), 1, 1)
    common = a.window.intersect(b.window)
    assert np.allclose(a.restrict(common).values, b.restrict(common).values, atol=1e-14)


def test_heat_residual_examples():
    g = LatticeGrid.uniform((0, 8), (0, 5), 1, 1, mode="rational")
    lin = Field.from_function(g, lambda m, n, x, t: m + 0 * n)
    assert scheme_residual(heat_equation(1), g, lin).max_abs == 0
    a = Fraction(3, 2)
    power = np.frompyfunc(lambda p, q: (1 + a * a) ** q * (1 + a) ** p, 2, 1)
    sol = Field.from_function(g, lambda m, n, x, t: power(m, n))
    assert scheme_residual(heat_equation(1), g, sol).max_abs == 0


def test_heat_residual_is_linear():
    g = LatticeGrid.uniform((0, 12), (0, 6), 0.5, 0.1)
    rng = np.random.default_rng(2)
    f, h = (Field(g, g.window, rng.standard_normal((12, 6))) for _ in range(2))
    eq = heat_equation(0.4)
    lhs = scheme_residual(eq, g, f * 2.5 + h * -1.5).field
    rhs = scheme_residual(eq, g, f).field * 2.5 + scheme_residual(eq, g, h).field * -1.5
    assert (lhs - rhs).max_abs() < 1e-12


def test_dttl_residual_on_translational_family_and_negative_control():
    g = LatticeGrid.toda((-5, 6), (-5, 6), 1, 1, mode="rational")
    assert dttl_residual(translational_solution(g, 1, 2, 3, 4), 1).max_abs == 0
    sq = Field.from_function(g, lambda n, m, x, t: n * n + 0 * m)
    assert dttl_residual(sq, 1).max_abs > 0


def test_exp_diff_is_exact_on_equal_arguments():
    p = np.array([Fraction(1, 3), Fraction(2)], dtype=object)
    out = exp_diff(p, p)
    assert all(v == 0 and isinstance(v, Fraction) for v in out)


def test_apply_stencil_rejects_oversized_stencil():
    f = linear_field()
    with pytest.raises(WindowError):
        apply_stencil(f, {(20, 0): 1})


def test_field_arithmetic_uses_common_window():
    f = linear_field()
    s = shift(f, 1, 0)
    d = s - f
    assert d.window == s.window
    assert np.all(d.values == 1)
