import math
from fractions import Fraction

import numpy as np
import pytest

from latsym.heat import (
    HEAT_CHARACTERISTICS,
    HeatScheme,
    HeatSolutionSampler,
    heat_characteristic,
    heat_equation,
    heat_lattice_equations,
    heat_point_equation,
    heat_point_fields,
    heat_point_system,
)
from latsym.lattice import Field, LatticeGrid
from latsym.symmetry import (
    EvolutionaryCharacteristic,
    PointVectorField,
    SymmetryReport,
    flow_step,
    measure_commutation,
    point_to_characteristic,
    prolong_point_field,
    verify_evolutionary_symmetry,
    verify_point_symmetry,
)

SCHEME = HeatScheme(0.8, 0.8 * 0.8 * 0.3)
C = SCHEME.c


@pytest.fixture(scope="module")
def sampler():
    return HeatSolutionSampler(SCHEME, seed=3)


def lattice_eq(name):
    return next(e for e in heat_lattice_equations(C) if e.name == name)


def test_translation_prolongs_to_zero_on_x_second_difference():
    act = prolong_point_field(PointVectorField("dx", xi_x=lambda x, t, u: 0 * u + 1), lattice_eq("x_second_difference"))
    xs, ts, us = [0.1, 0.5, 0.9], [0.0] * 3, [1.0, -2.0, 0.3]
    assert act(xs, ts, us) == pytest.approx(0.0, abs=1e-15)


def test_dilation_prolongs_to_twice_the_time_step_relation():
    eq = lattice_eq("t_step")
    D = heat_point_fields()["D_hat"]
    xs, ts, us = [0.3, 0.3, 0.7], [0.2, 0.9, 0.2], [1.0, 2.0, 3.0]
    assert prolong_point_field(D, eq)(xs, ts, us) == pytest.approx(2 * eq.residual(xs, ts, us), abs=1e-14)


def test_scaling_prolongs_to_the_linear_equation_itself():
    eq = heat_point_equation()
    W = heat_point_fields()["W_hat"]
    xs, ts, us = [0.0, 0.0, 0.5, 1.0], [0.0, 0.1, 0.0, 0.0], [1.0, 1.7, -0.4, 2.2]
    assert prolong_point_field(W, eq)(xs, ts, us) == pytest.approx(eq.residual(xs, ts, us), rel=1e-13)


@pytest.mark.parametrize("name", ["P0_hat", "P1_hat", "D_hat", "W_hat", "S_hat"])
def test_heat_point_fields_pass(name, sampler):
    rep = verify_point_symmetry(heat_point_fields()[name], heat_point_system(C), sampler, 1e-8, 50)
    assert rep.verdict == "pass", rep.to_dict()
    assert rep.samples_tested == 50


@pytest.mark.parametrize("name", sorted(HEAT_CHARACTERISTICS))
def test_heat_characteristics_pass(name, sampler):
    rep = verify_evolutionary_symmetry(heat_characteristic(name), heat_equation(C), sampler, 1e-8, 50)
    assert rep.verdict == "pass", rep.to_dict()


def test_x_squared_point_field_fails(sampler):
    X = PointVectorField.from_expressions("0;0;x^2")
    rep = verify_point_symmetry(X, heat_point_system(C), sampler, 1e-8, 20)
    assert rep.verdict == "fail"
    assert rep.per_equation["heat_point"] == pytest.approx(2.0, rel=1e-6)


@pytest.mark.parametrize("src", ["u^2", "x^2"])
def test_nonsymmetric_characteristics_fail(src, sampler):
    rep = verify_evolutionary_symmetry(EvolutionaryCharacteristic.from_expression(src), heat_equation(C), sampler, 1e-8, 20)
    assert rep.verdict == "fail"


def test_point_report_scales_linearly():
    X = PointVectorField.from_expressions("0;0;x^2")
    sampler = HeatSolutionSampler(SCHEME, seed=5)
    system = heat_point_system(C)
    r1 = verify_point_symmetry(X, system, sampler, 1e-8, 10).max_abs_residual
    r3 = verify_point_symmetry(X.scaled(3.0), system, sampler, 1e-8, 10).max_abs_residual
    assert r3 / r1 == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("name", ["P0_hat", "P1_hat", "D_hat", "W_hat", "S_hat"])
def test_point_and_evolutionary_verdicts_agree(name, sampler):
    X = heat_point_fields()[name]
    point = verify_point_symmetry(X, heat_point_system(C), sampler, 1e-8, 20)
    evo = verify_evolutionary_symmetry(point_to_characteristic(X), heat_equation(C), sampler, 1e-8, 20)
    assert point.verdict == evo.verdict == "pass"


def test_verdicts_agree_on_negative_control(sampler):
    X = PointVectorField.from_expressions("0;0;x^2")
    point = verify_point_symmetry(X, heat_point_system(C), sampler, 1e-8, 20)
    evo = verify_evolutionary_symmetry(point_to_characteristic(X), heat_equation(C), sampler, 1e-8, 20)
    assert point.verdict == evo.verdict == "fail"


def test_report_verdict_rules():
    assert SymmetryReport("q", 1e-8, 5e-9, 3, {}, [1e-9, 5e-9, 0]).verdict == "pass"
    assert SymmetryReport("q", 1e-8, 1.0, 10, {}, [1.0] + [0.0] * 9).verdict == "fail"
    assert SymmetryReport("q", 1e-8, 2e-8, 10, {}, [2e-8] + [0.0] * 9).verdict == "inconclusive"


def exact_field():
    g = LatticeGrid.heat((0, 8), (0, 4), 1, Fraction(1, 2), mode="rational")
    return Field.from_function(g, lambda i, j, x, t: Fraction(1, 3) * i * i + j)


def test_flow_step_zero_and_scaling():
    f = exact_field()
    zero = EvolutionaryCharacteristic.from_expression("0*u")
    assert np.all(flow_step(zero, f, Fraction(1, 10)).values == f.values)
    W = heat_characteristic("W")
    out = flow_step(W, f, Fraction(1, 10))
    assert np.all(out.values == f.values * Fraction(11, 10))


def test_linear_flow_commutes_exactly_with_heat_step():
    scheme = HeatScheme(1, Fraction(1, 4))
    rng = np.random.default_rng(0)
    row = rng.standard_normal(40)

    def step(r):
        return r[:-2] + scheme.c * (r[2:] - 2 * r[1:-1] + r[:-2])

    def flow(r, e):
        return r[:-1] + e * (r[1:] - r[:-1])

    def dist(p, q):
        k = min(len(p), len(q))
        return np.max(np.abs(p[:k] - q[:k]))

    res = measure_commutation(step, flow, np.asarray(row), 1e-2, dist, levels=4, floor=1e-13)
    assert res.order == math.inf
