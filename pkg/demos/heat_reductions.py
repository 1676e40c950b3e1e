"""Translation and dilation reductions of the discrete heat equation.

Run with ``python3 demos/heat_reductions.py``.
"""
from fractions import Fraction as F

from latsym.heat import HeatScheme
from latsym.heat_reductions import (
    dilation_reduce_evolutionary,
    point_translation_solution,
    translation_evolutionary_value,
    translation_limit_errors,
    translation_reduce_evolutionary,
    translation_reduce_point,
)

print("point translation reduction, k = 1")
for c in (F(1, 2), F(1), F(2)):
    r = translation_reduce_point(c, k=1)
    print(f"  c={c}: v={r.values['v']}, alpha_A={r.values['alpha_A']:.12f}, residual {r.residual_max}")

print("\nevolutionary translation reduction")
for a, sx, st in [(1, 1, 1), (2, 1, 1), (1, F(1, 2), F(1, 4))]:
    r = translation_reduce_evolutionary(a, HeatScheme(sx, st))
    point = point_translation_solution(a, sx, st)(1, 1)
    evo = translation_evolutionary_value(1, 1, a, sx, st)
    print(f"  a={a}, sx={sx}, st={st}: heat residual {r.values['heat_residual']},"
          f" u(1,1) point {point:.6g} vs evolutionary {float(evo):.6g}")

errs = translation_limit_errors()
print("\ncontinuous-limit errors under refinement:", [f"{e:.2e}" for e in errs])

print("\nself-similar (dilation) reduction, c = 1")
r = dilation_reduce_evolutionary(F(1), m_range=(-6, 7), n_range=(1, 4))
print(f"  exact residual over the window: {r.residual_max}")
