"""Acceptance checks, one test per criterion.

Each test prints a single ``CRITERION k: PASS|FAIL ...`` line to the
terminal (capture is bypassed) and then asserts.  Clauses that the
reference formulas cannot meet are evaluated as stated and left failing.
"""
import math
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from latsym.heat import (
    HEAT_CHARACTERISTICS,
    HeatScheme,
    HeatSolutionSampler,
    heat_characteristic,
    heat_equation,
    heat_point_fields,
    heat_point_system,
)
from latsym.heat_reductions import (
    dilation_reduce_evolutionary,
    gamma_recurrence_residual,
    gamma_sequence,
    point_translation_solution,
    pointwise_limit_residual,
    self_similar_limit_fourier,
    self_similar_limit_pointwise,
    translation_evolutionary_value,
    translation_limit_errors,
    translation_reduce_evolutionary,
    translation_reduce_point,
)
from latsym.lattice import LatticeGrid
from latsym.symmetry import EvolutionaryCharacteristic, measure_commutation, verify_evolutionary_symmetry, verify_point_symmetry
from latsym.toda import (
    AbState,
    DttlSolutionSampler,
    determine_AB_from_dttl,
    dttl_ab_step,
    dttl_point_fields,
    dttl_residual,
    dttl_system,
    homogeneous_seed,
    isospectral_euler,
    isospectral_first_integrals,
    isospectral_flow_rhs,
    nonisospectral_a,
    nonisospectral_b,
    nonisospectral_b_printed,
    second_order_homogeneous_residual,
    second_order_residual,
    stationary_isospectral_orbit,
    translational_solution,
)
from latsym.zpoly import contour_I, z_transform_I

F = Fraction
TOL = 1e-8


def report(capsys, k, ok, clauses):
    failed = [name for name, good, _ in clauses if not good]
    detail = "; ".join(f"{name}={'ok' if good else 'FAIL'} ({info})" for name, good, info in clauses)
    with capsys.disabled():
        print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} :: {detail}", flush=True)
    assert ok, f"criterion {k} failing clauses: {failed}"


# 1. symmetry suites ---------------------------------------------------------

BROKEN_B = (
    "2*t*(u[1,-1] - u[0,-1])/(x[1,-1] - x[0,-1]) + x*u[-1,0]"
    " - (1/2)*(x - x[-1,0])*u[-1,0]"
)


def test_criterion_1_symmetry_suites(capsys):
    scheme = HeatScheme(0.8, 0.8 * 0.8 * 0.3)
    sampler = HeatSolutionSampler(scheme, seed=0)
    clauses = []
    reps = [verify_evolutionary_symmetry(heat_characteristic(n), heat_equation(scheme.c), sampler, TOL, 50) for n in HEAT_CHARACTERISTICS]
    worst = max(r.max_abs_residual for r in reps)
    clauses.append(("heat operators", all(r.passed for r in reps) and all(r.samples_tested >= 50 for r in reps), f"max {worst:.2e}"))
    reps = [verify_point_symmetry(X, heat_point_system(scheme.c), sampler, TOL, 50) for X in heat_point_fields().values()]
    clauses.append(("heat point fields", all(r.passed for r in reps), f"max {max(r.max_abs_residual for r in reps):.2e}"))
    dsampler = DttlSolutionSampler(1.0, seed=0)
    reps = [verify_point_symmetry(X, dttl_system(1.0), dsampler, TOL, 50) for X in dttl_point_fields().values()]
    clauses.append(("dttl point fields", all(r.passed for r in reps), f"max {max(r.max_abs_residual for r in reps):.2e}"))
    broken = verify_evolutionary_symmetry(EvolutionaryCharacteristic.from_expression(BROKEN_B, "B_broken"),
                                          heat_equation(scheme.c), sampler, TOL, 50)
    clauses.append(("broken B fails", broken.verdict == "fail", f"verdict {broken.verdict}, max {broken.max_abs_residual:.2e}"))
    report(capsys, 1, all(c[1] for c in clauses), clauses)


# 2. point translation reduction --------------------------------------------

def test_criterion_2_point_translation(capsys):
    clauses = []
    for c in (F(1, 2), F(1), F(2)):
        r = translation_reduce_point(c, k=1)
        err = abs(r.values["alpha_A"] - math.log((c + 1) / c))
        clauses.append((f"alpha_A c={c}", err <= 1e-12, f"err {err:.1e}"))
        v = r.values["v"]
        exact = isinstance(v, Fraction) and v == (c + 1) / c and r.residual_max == 0
        clauses.append((f"v^z exact c={c}", exact, f"residual {r.residual_max}"))
    report(capsys, 2, all(c[1] for c in clauses), clauses)


# 3. evolutionary translation reduction -------------------------------------

TRIPLES = [(1, 1, 1), (2, 1, 1), (1, F(1, 2), F(1, 4))]


def test_criterion_3_evolutionary_translation(capsys):
    clauses = []
    for a, sx, st in TRIPLES:
        r = translation_reduce_evolutionary(a, HeatScheme(sx, st))
        zero = r.values["mode"] == "rational" and r.values["heat_residual"] == 0 and r.values["constraint_residual"] == 0
        clauses.append((f"residuals {(a, str(sx), str(st))}", zero, f"heat {r.values['heat_residual']}, flow {r.values['constraint_residual']}"))
    for a, sx, st in TRIPLES:
        point = point_translation_solution(a, sx, st)(1, 1)
        evo = float(translation_evolutionary_value(1, 1, a, sx, st))
        clauses.append((f"divergence {(a, str(sx), str(st))}", abs(point - evo) > 1e-12, f"point {point:.6g} vs evolutionary {evo:.6g}"))
    errs = translation_limit_errors()
    orders = [math.log2(x / y) for x, y in zip(errs, errs[1:])]
    clauses.append(("continuous limit", all(y < x for x, y in zip(errs, errs[1:])) and min(orders) >= 0.9,
                    f"orders {[round(o, 3) for o in orders]}"))
    report(capsys, 3, all(c[1] for c in clauses), clauses)


# 4. Z-transform oracle -------------------------------------------------------

def printed_closed_forms(n, c):
    p = c / (c + 1)
    forms = {"I1": (1, n, p**n), "I0": (0, n, F(0)), "I2": (2, n, -2 * n * p**n)}
    if n >= 1:
        forms["I-1"] = (-1, n - 1, F(0))
        forms["I3"] = (3, n, n * p ** (n - 1) * ((2 * n - 1) * c - 1) / (c + 1))
    return forms


def test_criterion_4_z_transform_oracle(capsys):
    mismatches = {}
    for c in (F(1, 2), F(1), F(3)):
        for n in range(0, 11):
            for name, (N, nn, want) in printed_closed_forms(n, c).items():
                if z_transform_I(N, nn, c) != want:
                    mismatches.setdefault(name, []).append((n, str(c)))
    clauses = [(name, name not in mismatches, f"{len(mismatches.get(name, []))} mismatches")
               for name in ("I1", "I0", "I-1", "I2", "I3")]
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(30):
        n = int(rng.integers(0, 11))
        N = int(rng.integers(-2, 2 * n + 4))
        c = [F(1, 2), F(1), F(3)][int(rng.integers(0, 3))]
        worst = max(worst, abs(contour_I(N, n, c) - float(z_transform_I(N, n, c))))
    clauses.append(("contour quadrature", worst <= 1e-9, f"max dev {worst:.1e}"))
    report(capsys, 4, all(c[1] for c in clauses), clauses)


# 5. gamma recurrence ---------------------------------------------------------

def test_criterion_5_gamma_recurrence(capsys):
    worst, checked = F(0), 0
    for c in (F(1, 2), F(1), F(3)):
        for n in range(1, 9):
            g, g_prev = gamma_sequence(n, c), gamma_sequence(n - 1, c)
            for N in range(1, 2 * n + 3):
                worst = max(worst, abs(gamma_recurrence_residual(N, n, c, g, g_prev)))
                checked += 1
    clauses = [("recurrence", worst == 0, f"{checked} cases, max residual {worst}")]
    report(capsys, 5, worst == 0, clauses)


# 6. self-similar solution ----------------------------------------------------

def test_criterion_6_self_similar_solution(capsys):
    clauses = []
    for c in (F(1), F(1, 2), F(3)):
        r = dilation_reduce_evolutionary(c, m_range=(-20, 21), n_range=(1, 11))
        clauses.append((f"reduced+invariance c={c}", r.residual_max == 0, f"residual {r.residual_max}"))
    lim = self_similar_limit_pointwise()
    clauses.append(("pointwise limit decreasing", lim.decreasing, f"errors {[f'{e:.1e}' for e in lim.errors]}"))
    res = pointwise_limit_residual()
    good = all(o >= 1 for o in res.orders) and res.decreasing
    clauses.append(("limit residual order>=1", good, f"errors {[f'{e:.1e}' for e in res.errors]}"))
    val, wres = self_similar_limit_fourier()
    with capsys.disabled():
        print(f"\n  (supplementary weak-form limit: value orders {[round(o, 2) for o in val.orders]}, "
              f"residual orders {[round(o, 2) for o in wres.orders]})", flush=True)
    report(capsys, 6, all(c[1] for c in clauses), clauses)


# 7. DTTL translational family ------------------------------------------------

def test_criterion_7_dttl_translational_family(capsys):
    rng = np.random.default_rng(7)
    grid = LatticeGrid.toda((-11, 12), (-10, 13), 1, 1, mode="rational")
    worst = F(0)
    for _ in range(20):
        A, B, C, D = (F(int(rng.integers(-20, 21)), int(rng.integers(1, 10))) for _ in range(4))
        alpha = F(int(rng.integers(1, 20)) * int(rng.choice([-1, 1])), int(rng.integers(1, 10)))
        worst = max(worst, dttl_residual(translational_solution(grid, A, B, C, D), alpha).max_abs)
    report(capsys, 7, worst == 0, [("family", worst == 0, f"max residual {worst} over 20 draws")])


# 8. isospectral reduction ----------------------------------------------------

def test_criterion_8_isospectral(capsys):
    clauses = []
    vac = AbState.vacuum(lo=-3, size=7, exact_mode=True)
    da, db = isospectral_flow_rhs(vac, range(-5, 6))
    fixed = all(v == 0 for v in da.values()) and all(v == 0 for v in db.values())
    clauses.append(("vacuum fixed", fixed and isospectral_euler(vac, F(1, 10)).support() is None, "rhs 0"))
    fi = isospectral_first_integrals(vac)
    orbit = stationary_isospectral_orbit(F(3), F(1, 2), F(1), F(1, 4), 0, 8)
    fo = isospectral_first_integrals(orbit, range(1, 7), check_elliptic=False)
    clauses.append(("integrals drift 0", fi.max_drift == 0 and fo.max_drift == 0, f"vacuum {fi.max_drift}, orbit {fo.max_drift}"))
    clauses.append(("elliptic form on vacuum", fi.elliptic_residual == 0, f"residual {fi.elliptic_residual}"))
    rng = np.random.default_rng(0)
    orders = []
    for _ in range(10):
        s = AbState(0, 0, list(1 + 0.1 * rng.uniform(-1, 1, 5)), list(0.1 * rng.uniform(-1, 1, 5)))
        orders.append(measure_commutation(lambda z: dttl_ab_step(z, 1.0), isospectral_euler, s, 1e-3,
                                          lambda p, q: p.distance(q), levels=5).order)
    clauses.append(("commutator order>=1.9", min(orders) >= 1.9, f"min order {min(orders):.3f}"))
    report(capsys, 8, all(c[1] for c in clauses), clauses)


# 9. nonisospectral chain -----------------------------------------------------

def _flow_residuals(a, b, n, m):
    ra = a(n) * ((2 * n + 2 * m + 3) * b(n + 1) - (2 * n + 2 * m - 1) * b(n))
    rb = b(n) ** 2 - 4 + 2 * ((n + m + 1) * a(n) - (n + m - 1) * a(n - 1))
    return abs(ra), abs(rb)


def test_criterion_9_nonisospectral_chain(capsys):
    clauses = []
    hom = max(abs(second_order_homogeneous_residual(lambda k: homogeneous_seed(k, m), n, m))
              for m in range(0, 11) for n in range(1 if m else 2, 31))
    clauses.append(("homogeneous seed", hom == 0, f"residual {hom}"))
    worst_printed = worst_corrected = F(0)
    for A in (F(0), F(2, 3), F(-1)):
        for B in (F(0), F(1), F(2), F(1, 3), F(4)):
            for m in range(0, 11):
                a = lambda k, m=m, A=A, B=B: nonisospectral_a(k, m, A, B)
                bp = lambda k, m=m, B=B: nonisospectral_b_printed(k, m, B)
                start = 1 if m else 2
                for n in range(start, 31):
                    second = abs(second_order_residual(a, n, m))
                    worst_printed = max(worst_printed, second, *(_flow_residuals(a, bp, n, m)))
                    if B in (F(0), F(1), F(4)):  # rational square roots keep the corrected form exact
                        bc = lambda k, m=m, B=B: nonisospectral_b(k, m, B)
                        worst_corrected = max(worst_corrected, second, *(_flow_residuals(a, bc, n, m)))
    clauses.append(("printed family exact", worst_printed == 0, f"max residual {float(worst_printed):.3g}"))
    with capsys.disabled():
        print(f"\n  (corrected b = 4 sqrt(B)/((2k-1)(2k+1)) on square B: max residual {worst_corrected})", flush=True)
    ones = all(nonisospectral_a(n, m, m * (m + 1), 0) == 1 and nonisospectral_b(n, m, 0) == 0
               for m in range(1, 8) for n in range(1, 12))
    det = determine_AB_from_dttl(lambda m: m * (m + 1), lambda m: 0, (1, 6), (1, 8))
    clauses.append(("selected constants give vacuum", ones and det["residual_max"] == 0, f"lattice residual {det['residual_max']}"))
    bumped = determine_AB_from_dttl(lambda m: m * (m + 1) + 1, lambda m: 0, (1, 3), (1, 5))
    other = determine_AB_from_dttl(lambda m: 0, lambda m: 1, (2, 3), (1, 6))
    clauses.append(("perturbed constants fail", bumped["residual_max"] > 1e-6 and other["residual_max"] > 1e-6,
                    f"{bumped['residual_max']:.3g}, {other['residual_max']:.3g}"))
    report(capsys, 9, all(c[1] for c in clauses), clauses)


# 10. determinism -------------------------------------------------------------

RUNS = [
    ["verify", "--scheme", "heat", "--symmetry", "B", "--mode", "evolutionary", "--seed", "3"],
    ["verify", "--scheme", "dttl", "--symmetry", "isospectral", "--seed", "5"],
    ["reduce", "--scheme", "heat", "--symmetry", "dilation", "--mode", "evolutionary", "--c", "1", "--n", "3"],
    ["oracle", "I", "--N", "5", "--n", "4", "--c", "1/3", "--contour"],
]


def test_criterion_10_determinism(capsys):
    clauses = []
    for argv in RUNS:
        outs = [subprocess.run([sys.executable, "-m", "latsym.cli", *argv], capture_output=True).stdout for _ in range(2)]
        clauses.append((argv[0] + " " + argv[2 if argv[0] != "oracle" else 1], outs[0] == outs[1] and len(outs[0]) > 0,
                        f"{len(outs[0])} bytes"))
    report(capsys, 10, all(c[1] for c in clauses), clauses)
