"""The discrete heat equation on its lattice, its symmetries and a solution sampler.

Scheme (forward in time, forward second difference in space)::

    u[m, n+1] - u[m, n] = c (u[m+2, n] - 2 u[m+1, n] + u[m, n]),   c = sigma_t / sigma_x**2

In point form the same relation is written with the lattice spacings
replaced by coordinate differences, and the lattice itself is a set of
four further equations in ``x`` and ``t``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import NonUniformGridError, WindowError
from .lattice import Field, LatticeGrid, SchemeEquation, Window, apply_stencil, scalar, shift
from .symmetry import EvolutionaryCharacteristic, PointVectorField, Sample

_P = ((0, 0), (0, 1), (1, 0), (2, 0))


@dataclass(frozen=True)
class HeatScheme:
    """Spacings of the uniform heat lattice; ``c = sigma_t / sigma_x**2``."""

    sigma_x: float = 1.0
    sigma_t: float = 1.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_t > 0):
            raise ValueError("spacings must be positive")

    @classmethod
    def from_c(cls, c, sigma_x=1) -> "HeatScheme":
        return cls(sigma_x, c * sigma_x * sigma_x)

    @property
    def c(self):
        if self.is_exact:
            return Fraction(self.sigma_t) / Fraction(self.sigma_x) ** 2
        return self.sigma_t / (self.sigma_x * self.sigma_x)

    @property
    def is_exact(self) -> bool:
        return isinstance(self.sigma_x, (int, Fraction)) and isinstance(self.sigma_t, (int, Fraction))

    def grid(self, m_range, n_range, x0=0, t0=0, mode=None) -> LatticeGrid:
        mode = mode or ("rational" if self.is_exact else "double")
        return LatticeGrid.uniform(m_range, n_range, self.sigma_x, self.sigma_t, x0, t0, mode)

    def equation(self) -> SchemeEquation:
        return heat_equation(self.c)


# --------------------------------------------------------------------------
# scheme equations


def heat_equation(c) -> SchemeEquation:
    """Forward scheme on a uniform lattice; reads only ``u``."""

    def residual(xs, ts, us):
        return us[1] - us[0] - c * (us[3] - 2 * us[2] + us[0])

    def partials(xs, ts, us):
        z = 0 * us[0]
        return [z] * 4, [z] * 4, [z - 1 - c, z + 1, z + 2 * c, z - c]

    return SchemeEquation("heat", _P, residual, partials)


def heat_point_equation() -> SchemeEquation:
    """Heat equation with spacings written as coordinate differences."""

    def residual(xs, ts, us):
        dt = ts[1] - ts[0]
        dx = xs[2] - xs[0]
        return (us[1] - us[0]) / dt - (us[3] - 2 * us[2] + us[0]) / dx**2

    def partials(xs, ts, us):
        dt = ts[1] - ts[0]
        dx = xs[2] - xs[0]
        du_t = us[1] - us[0]
        s2 = us[3] - 2 * us[2] + us[0]
        z = 0 * dt
        d_x = [-2 * s2 / dx**3, z, 2 * s2 / dx**3, z]
        d_t = [du_t / dt**2, -du_t / dt**2, z, z]
        d_u = [-1 / dt - 1 / dx**2, 1 / dt + z, 2 / dx**2 + z, -1 / dx**2 + z]
        return d_x, d_t, d_u

    return SchemeEquation("heat_point", _P, residual, partials)


def heat_lattice_equations(c) -> list[SchemeEquation]:
    """The four relations defining the heat lattice (uniform x, layered t)."""

    def zeros(n, like):
        return [0 * like] * n

    def x_second(xs, ts, us):
        return xs[2] - 2 * xs[1] + xs[0]

    def x_second_p(xs, ts, us):
        z = 0 * xs[0]
        return [z + 1, z - 2, z + 1], zeros(3, xs[0]), zeros(3, xs[0])

    def x_const(xs, ts, us):
        return xs[1] - xs[0]

    def x_const_p(xs, ts, us):
        z = 0 * xs[0]
        return [z - 1, z + 1], zeros(2, z), zeros(2, z)

    def t_const(xs, ts, us):
        return ts[1] - ts[0]

    def t_const_p(xs, ts, us):
        z = 0 * ts[0]
        return zeros(2, z), [z - 1, z + 1], zeros(2, z)

    def t_step(xs, ts, us):
        return ts[1] - ts[0] - c * (xs[2] - xs[0]) ** 2

    def t_step_p(xs, ts, us):
        z = 0 * ts[0]
        dx = xs[2] - xs[0]
        return [2 * c * dx + z, z, -2 * c * dx + z], [z - 1, z + 1, z], zeros(3, z)

    return [
        SchemeEquation("x_second_difference", ((0, 0), (1, 0), (2, 0)), x_second, x_second_p),
        SchemeEquation("x_time_independent", ((0, 0), (0, 1)), x_const, x_const_p),
        SchemeEquation("t_space_independent", ((0, 0), (1, 0)), t_const, t_const_p),
        SchemeEquation("t_step", ((0, 0), (0, 1), (1, 0)), t_step, t_step_p),
    ]


def heat_point_system(c) -> list[SchemeEquation]:
    return [heat_point_equation(), *heat_lattice_equations(c)]


def translation_constraint_equation(a, sigma_x, sigma_t) -> SchemeEquation:
    """Invariance under the translation flow ``Delta_t u - a Delta_x u``."""
    k = a * sigma_t / sigma_x

    def residual(xs, ts, us):
        return us[1] - us[0] - k * (us[2] - us[0])

    return SchemeEquation("translation_invariance", ((0, 0), (0, 1), (1, 0)), residual)


def translation_reduced_equation(a, sigma_x) -> SchemeEquation:
    """Three-point equation in m left after eliminating the time step."""

    def residual(xs, ts, us):
        return a * (us[1] - us[0]) - (us[2] - 2 * us[1] + us[0]) / sigma_x

    return SchemeEquation("translation_reduced", ((0, 0), (1, 0), (2, 0)), residual)


# --------------------------------------------------------------------------
# evolution


def heat_evolve(initial_row, steps: int, scheme: HeatScheme, width: int | None = None,
                m_start: int = 0, n_start: int = 0, x0=0, t0=0, mode: str | None = None) -> Field:
    """March the forward scheme ``steps`` times from ``initial_row``.

    Each step consumes two cells at the right end, so the output window has
    ``width <= len(initial_row) - 2*steps`` columns and ``steps + 1`` rows.
    """
    row = list(initial_row.row(initial_row.window.j_lo) if isinstance(initial_row, Field) else initial_row)
    if mode is None:
        exact = all(isinstance(v, (int, Fraction)) for v in row) and scheme.is_exact
        mode = "rational" if exact else "double"
    avail = len(row) - 2 * steps
    width = avail if width is None else width
    if steps < 0 or width < 1 or width > avail:
        raise WindowError(f"row of length {len(row)} is too short for {steps} steps at width {width}")
    c = scalar(scheme.c, mode)
    cur = np.array([scalar(v, mode) for v in row], dtype=object if mode == "rational" else float)
    rows = [cur[:width]]
    for _ in range(steps):
        cur = cur[:-2] + c * (cur[2:] - 2 * cur[1:-1] + cur[:-2])
        rows.append(cur[:width])
    grid = scheme.grid((m_start, m_start + width), (n_start, n_start + steps + 1), x0, t0, mode)
    return Field(grid, grid.window, np.stack(rows, axis=1))


class HeatSolutionSampler:
    """Exact heat solutions on randomly offset lattices.

    Each sample draws ``x0``, ``t0`` uniformly in [-1, 1] and a standard
    normal initial row, then marches the scheme.  Seeded and reproducible.
    """

    def __init__(self, scheme: HeatScheme | None = None, seed: int = 0, width: int = 14, steps: int = 6):
        self.scheme = scheme or HeatScheme(0.8, 0.8 * 0.8 * 0.3)
        self.seed = seed
        self.width = width
        self.steps = steps

    def samples(self, count: int) -> Iterator[Sample]:
        rng = np.random.default_rng(self.seed)
        for _ in range(count):
            x0, t0 = rng.uniform(-1, 1, size=2)
            row = rng.standard_normal(self.width + 2 * self.steps)
            u = heat_evolve(row, self.steps, self.scheme, width=self.width, x0=x0, t0=t0, mode="double")
            yield Sample(u.grid, u, {"x0": x0, "t0": t0, "c": self.scheme.c})


# --------------------------------------------------------------------------
# symmetry generators

# Characteristics of the six-dimensional algebra, written so that every
# spacing is read off the lattice coordinates.
HEAT_CHARACTERISTICS = {
    "P0": "(u[0,1] - u)/(t[0,1] - t)",
    "P1": "(u[1,0] - u)/(x[1,0] - x)",
    "W": "u",
    "B": "2*t*(u[1,-1] - u[0,-1])/(x[1,-1] - x[0,-1]) + x*u[-1,0] + (1/2)*(x - x[-1,0])*u[-1,0]",
    "D": "2*t*(u - u[0,-1])/(t - t[0,-1]) + x*(u - u[-1,0])/(x - x[-1,0]) + u - (1/2)*u[-1,0]",
    "K": (
        "t^2*(u[0,-1] - u[0,-2])/(t[0,-1] - t[0,-2])"
        " + t*x*(u[0,-1] - u[-1,-1])/(x[0,-1] - x[-1,-1])"
        " + (1/4)*x^2*u[-2,0]"
        " + t*(u[0,-2] - (1/2)*u[-1,-1])"
        " - (1/16)*(x - x[-1,0])^2*u[-2,0]"
    ),
}


def heat_characteristic(name: str) -> EvolutionaryCharacteristic:
    return EvolutionaryCharacteristic.from_expression(HEAT_CHARACTERISTICS[name], name)


def heat_point_fields() -> dict[str, PointVectorField]:
    """Point symmetries of the heat scheme together with its lattice.

    ``S_hat`` uses the particular solution ``S = x**2 + 2 t``, which solves
    the point-form scheme on every admissible lattice.
    """
    one = lambda x, t, u: 0 * u + 1
    return {
        "P0_hat": PointVectorField("P0_hat", xi_t=one),
        "P1_hat": PointVectorField("P1_hat", xi_x=one),
        "D_hat": PointVectorField("D_hat", xi_x=lambda x, t, u: x + 0 * u, xi_t=lambda x, t, u: 2 * t + 0 * u),
        "W_hat": PointVectorField("W_hat", phi=lambda x, t, u: u),
        "S_hat": PointVectorField("S_hat", phi=lambda x, t, u: x * x + 2 * t + 0 * u),
    }


def _coordinates(f: Field) -> tuple[Field, Field]:
    x, t = f.coords()
    return Field(f.grid, f.window, x), Field(f.grid, f.window, t)


def apply_linear_symmetry(name: str, f: Field) -> Field:
    """Apply one of P0, P1, W, B, D, K to ``f`` by explicit shift algebra."""
    g = f.grid
    if not (g.is_uniform("x") and g.is_uniform("t")):
        raise NonUniformGridError("linear heat symmetries need a uniform lattice")
    sx, st = g.sigma_x, g.sigma_t
    half, quarter, sixteenth = (scalar(Fraction(1, k), g.mode) for k in (2, 4, 16))
    x, t = _coordinates(f)
    if name == "W":
        return f
    if name == "P0":
        return apply_stencil(f, {(0, 1): 1, (0, 0): -1}) / st
    if name == "P1":
        return apply_stencil(f, {(1, 0): 1, (0, 0): -1}) / sx
    if name == "B":
        back_x = shift(f, -1, 0)
        return 2 * t * apply_stencil(f, {(1, -1): 1, (0, -1): -1}) / sx + x * back_x + half * sx * back_x
    if name == "D":
        return (
            2 * t * apply_stencil(f, {(0, 0): 1, (0, -1): -1}) / st
            + x * apply_stencil(f, {(0, 0): 1, (-1, 0): -1}) / sx
            + apply_stencil(f, {(0, 0): 1, (-1, 0): -half})
        )
    if name == "K":
        back2 = shift(f, -2, 0)
        return (
            t * t * apply_stencil(f, {(0, -1): 1, (0, -2): -1}) / st
            + t * x * apply_stencil(f, {(0, -1): 1, (-1, -1): -1}) / sx
            + quarter * x * x * back2
            + t * apply_stencil(f, {(0, -2): 1, (-1, -1): -half})
            - sixteenth * sx * sx * back2
        )
    raise ValueError(f"unknown heat symmetry {name!r}; expected one of P0, P1, W, B, D, K")
