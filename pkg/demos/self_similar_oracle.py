"""Moments I_{N,n} of the self-similar kernel computed three ways.

Coefficient extraction and the Z-transform derivative are exact; the
contour integral is a double-precision cross-check.

Run with ``python3 demos/self_similar_oracle.py``.
"""
from fractions import Fraction as F

from latsym.zpoly import I_table, contour_I, z_transform_I

c = F(1, 3)
print(f"c = {c}")
print(" n  N   exact            contour           deviation")
for n in range(0, 5):
    for N in range(-1, 4):
        exact = z_transform_I(N, n, c)
        approx = contour_I(N, n, c)
        print(f"{n:2d} {N:2d}   {str(exact):15s}  {approx: .12e}  {abs(approx - float(exact)):.1e}")

print("\nnonzero moments for n <= 3:")
for (N, n), value in sorted(I_table(3, c).items(), key=lambda kv: kv[0][::-1]):
    print(f"  I({N}, {n}) = {value}")
