"""Reductions of the discrete-time Toda lattice.

Run with ``python3 demos/toda_reductions.py``.
"""
from fractions import Fraction as F

import numpy as np

from latsym.lattice import LatticeGrid
from latsym.symmetry import measure_commutation
from latsym.toda import (
    AbState,
    dttl_ab_step,
    dttl_residual,
    isospectral_euler,
    isospectral_first_integrals,
    nonisospectral_a,
    nonisospectral_b,
    stationary_isospectral_orbit,
    translational_solution,
)

grid = LatticeGrid.toda((-5, 6), (-5, 6), 1, 1, mode="rational")
u = translational_solution(grid, F(2), F(-1, 3), F(5), F(1, 7))
print("translational family, alpha = 3/2: residual", dttl_residual(u, F(3, 2)).max_abs)

rng = np.random.default_rng(1)
s = AbState(0, 0, list(1 + 0.1 * rng.uniform(-1, 1, 5)), list(0.1 * rng.uniform(-1, 1, 5)))
r = measure_commutation(lambda z: dttl_ab_step(z, 1.0), isospectral_euler, s, 1e-3,
                        lambda p, q: p.distance(q), levels=5)
print(f"isospectral flow vs time step: commutator order {r.order:.3f}")

orbit = stationary_isospectral_orbit(F(3), F(1, 2), F(1), F(1, 4), 0, 8)
fi = isospectral_first_integrals(orbit, range(1, 7), check_elliptic=False)
print("stationary orbit: first-integral drift", fi.max_drift)

m, A, B = 2, F(1), F(1)
print(f"\nnonisospectral stationary family, m={m}, A={A}, B={B}")
for n in range(1, 6):
    print(f"  n={n}: a={nonisospectral_a(n, m, A, B)}, b={nonisospectral_b(n, m, B)}")
