"""Lattice grids, fields on index windows, shifts and discrete derivatives.

Every object here is indexed by a pair ``(i, j)`` where ``i`` is the
spatial label and ``j`` the temporal one.  For the heat equation these are
``(m, n)``; for the Toda lattice the roles of the letters swap and the pair
reads ``(n, m)``, but storage is always (space, time).

Two arithmetic modes are supported: ``"double"`` (float64 arrays) and
``"rational"`` (object arrays of :class:`fractions.Fraction`).  The mode is a
property of the grid and every field built on it inherits it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .errors import NonUniformGridError, WindowError

MODES = ("double", "rational")


# --------------------------------------------------------------------------
# arithmetic helpers


def exact(value: Any) -> Fraction:
    """Convert ``value`` to a Fraction without rounding.

    Strings of the form ``"p/q"`` are parsed; floats are converted to their
    exact binary value.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    raise TypeError(f"cannot convert {value!r} to an exact rational")


def as_mode(values: Any, mode: str) -> np.ndarray:
    """Return ``values`` as an array in the requested arithmetic mode."""
    if mode not in MODES:
        raise ValueError(f"unknown arithmetic mode {mode!r}")
    arr = np.asarray(values, dtype=object if mode == "rational" else None)
    if mode == "double":
        return np.asarray(arr, dtype=float)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = exact(v)
    return out


def scalar(value: Any, mode: str) -> Any:
    return exact(value) if mode == "rational" else float(value)


def format_number(value: Any) -> str | float:
    """Serialisable form of a scalar: ``"p/q"`` strings for rationals."""
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return float(value)


def parse_number(value: Any, mode: str) -> Any:
    if mode == "rational":
        return exact(value)
    if isinstance(value, str):
        return float(Fraction(value))
    return float(value)


def max_abs(values: np.ndarray) -> float:
    """Max-norm of an array in either mode, returned as a float (0.0 if empty)."""
    if values.size == 0:
        return 0.0
    if values.dtype == object:
        return float(max(abs(v) for v in values.flat))
    return float(np.max(np.abs(values)))


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.flags.writeable = False
    return arr


# --------------------------------------------------------------------------
# index windows


class Window(NamedTuple):
    """Half-open index box ``[i_lo, i_hi) x [j_lo, j_hi)``."""

    i_lo: int
    i_hi: int
    j_lo: int
    j_hi: int

    @property
    def shape(self) -> tuple[int, int]:
        return (max(self.i_hi - self.i_lo, 0), max(self.j_hi - self.j_lo, 0))

    @property
    def empty(self) -> bool:
        return self.i_hi <= self.i_lo or self.j_hi <= self.j_lo

    def contains(self, i: int, j: int) -> bool:
        return self.i_lo <= i < self.i_hi and self.j_lo <= j < self.j_hi

    def covers(self, other: "Window") -> bool:
        return other.empty or (
            self.i_lo <= other.i_lo
            and other.i_hi <= self.i_hi
            and self.j_lo <= other.j_lo
            and other.j_hi <= self.j_hi
        )

    def intersect(self, other: "Window") -> "Window":
        return Window(
            max(self.i_lo, other.i_lo),
            min(self.i_hi, other.i_hi),
            max(self.j_lo, other.j_lo),
            min(self.j_hi, other.j_hi),
        )

    def translate(self, di: int, dj: int) -> "Window":
        return Window(self.i_lo + di, self.i_hi + di, self.j_lo + dj, self.j_hi + dj)

    def slices(self, inner: "Window") -> tuple[slice, slice]:
        """Array slices selecting ``inner`` from an array laid out on ``self``."""
        return (
            slice(inner.i_lo - self.i_lo, inner.i_hi - self.i_lo),
            slice(inner.j_lo - self.j_lo, inner.j_hi - self.j_lo),
        )

    def index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(
            np.arange(self.i_lo, self.i_hi), np.arange(self.j_lo, self.j_hi), indexing="ij"
        )


def stencil_window(window: Window, offsets: Sequence[tuple[int, int]]) -> Window:
    """Points ``p`` of ``window`` such that ``p + o`` lies in ``window`` for every offset."""
    out = window
    for di, dj in offsets:
        out = out.intersect(window.translate(-di, -dj))
    return out


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True, eq=False)
class LatticeGrid:
    """Finite rectangular window of lattice nodes with coordinates ``x``, ``t``.

    ``sigma_x`` and ``sigma_t`` are the nominal spacings; they are exact for
    the uniform constructors and only used by operators that require a
    uniform axis.
    """

    window: Window
    x: np.ndarray
    t: np.ndarray
    sigma_x: Any
    sigma_t: Any
    mode: str = "double"
    x0: Any = 0
    t0: Any = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown arithmetic mode {self.mode!r}")
        if self.window.empty:
            raise WindowError("grid window is empty")
        for name in ("x", "t"):
            arr = as_mode(getattr(self, name), self.mode)
            if arr.shape != self.window.shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {self.window.shape}")
            object.__setattr__(self, name, _readonly(arr))
        for name in ("sigma_x", "sigma_t", "x0", "t0"):
            object.__setattr__(self, name, scalar(getattr(self, name), self.mode))
        if not (self.sigma_x > 0 and self.sigma_t > 0):
            raise ValueError("lattice spacings must be positive")

    # constructors ---------------------------------------------------------

    @classmethod
    def uniform(cls, i_range, j_range, sigma_x, sigma_t, x0=0, t0=0, mode="double"):
        """Orthogonal uniform lattice ``x = sigma_x i + x0``, ``t = sigma_t j + t0``."""
        window = Window(int(i_range[0]), int(i_range[1]), int(j_range[0]), int(j_range[1]))
        sx, st = scalar(sigma_x, mode), scalar(sigma_t, mode)
        x0, t0 = scalar(x0, mode), scalar(t0, mode)
        ii, jj = window.index_arrays()
        if mode == "rational":
            ii, jj = ii.astype(object), jj.astype(object)
        x = ii * sx + x0
        t = jj * st + t0
        return cls(window, x, t, sx, st, mode, x0, t0)

    @classmethod
    def heat(cls, m_range, n_range, sigma_x, c, x0=0, t0=0, mode="double"):
        """Heat lattice: ``x = sigma_x m + x0``, ``t = c sigma_x**2 n + t0``."""
        sx, c = scalar(sigma_x, mode), scalar(c, mode)
        return cls.uniform(m_range, n_range, sx, c * sx * sx, x0, t0, mode)

    @classmethod
    def toda(cls, n_range, m_range, sigma_x, sigma_t, mode="double"):
        """Toda lattice ``x = sigma_x n``, ``t = sigma_t m`` (spatial label ``n`` first)."""
        return cls.uniform(n_range, m_range, sigma_x, sigma_t, 0, 0, mode)

    # geometry -------------------------------------------------------------

    @property
    def i_range(self) -> tuple[int, int]:
        return (self.window.i_lo, self.window.i_hi)

    @property
    def j_range(self) -> tuple[int, int]:
        return (self.window.j_lo, self.window.j_hi)

    @property
    def shape(self) -> tuple[int, int]:
        return self.window.shape

    def spacing(self, axis: str):
        if axis == "x":
            return self.sigma_x
        if axis == "t":
            return self.sigma_t
        raise ValueError(f"axis must be 'x' or 't', got {axis!r}")

    def _close(self, a, b) -> bool:
        if self.mode == "rational":
            return bool(np.all(a == b))
        scale = max(1.0, max_abs(np.asarray(b, dtype=float)))
        return bool(np.all(np.abs(np.asarray(a, dtype=float) - b) <= 1e-12 * scale))

    def is_uniform(self, axis: str) -> bool:
        """True if coordinates advance by the nominal spacing along ``axis``.

        Uniform along ``x`` means ``x`` steps by ``sigma_x`` in ``i`` and
        ``t`` is constant in ``i``; along ``t`` the roles are exchanged.
        """
        if axis == "x":
            dx, dt = np.diff(self.x, axis=0), np.diff(self.t, axis=0)
            step = self.sigma_x
        elif axis == "t":
            dx, dt = np.diff(self.t, axis=1), np.diff(self.x, axis=1)
            step = self.sigma_t
        else:
            raise ValueError(f"axis must be 'x' or 't', got {axis!r}")
        return self._close(dx, np.full(dx.shape, step, dtype=dx.dtype)) and self._close(
            dt, np.zeros(dt.shape, dtype=dt.dtype)
        )

    def closed_form_error(self) -> float:
        """Max deviation of stored coordinates from the uniform closed form."""
        ii, jj = self.window.index_arrays()
        if self.mode == "rational":
            ii, jj = ii.astype(object), jj.astype(object)
        return max(
            max_abs(self.x - (ii * self.sigma_x + self.x0)),
            max_abs(self.t - (jj * self.sigma_t + self.t0)),
        )

    def with_mode(self, mode: str) -> "LatticeGrid":
        return LatticeGrid(
            self.window, as_mode(self.x, mode), as_mode(self.t, mode),
            self.sigma_x, self.sigma_t, mode, self.x0, self.t0,
        )


# --------------------------------------------------------------------------
# fields


@dataclass(frozen=True, eq=False)
class Field:
    """Values on a sub-window of a grid.  Immutable; out-of-window access raises."""

    grid: LatticeGrid
    window: Window
    values: np.ndarray

    def __post_init__(self):
        window = Window(*map(int, self.window))
        if window.empty:
            raise WindowError("field window is empty")
        if not self.grid.window.covers(window):
            raise WindowError(f"field window {window} exceeds grid window {self.grid.window}")
        arr = as_mode(self.values, self.grid.mode)
        if arr.shape != window.shape:
            raise ValueError(f"values have shape {arr.shape}, expected {window.shape}")
        object.__setattr__(self, "window", window)
        object.__setattr__(self, "values", _readonly(arr))

    @property
    def mode(self) -> str:
        return self.grid.mode

    @classmethod
    def from_function(cls, grid: LatticeGrid, fn: Callable, window: Window | None = None):
        """Evaluate ``fn(i, j, x, t)`` on index/coordinate arrays of the window."""
        window = grid.window if window is None else Window(*window)
        ii, jj = window.index_arrays()
        if grid.mode == "rational":
            ii, jj = ii.astype(object), jj.astype(object)
        sl = grid.window.slices(window)
        vals = fn(ii, jj, grid.x[sl], grid.t[sl])
        vals = np.broadcast_to(np.asarray(vals, dtype=object if grid.mode == "rational" else None), window.shape)
        return cls(grid, window, vals)

    @classmethod
    def constant(cls, grid: LatticeGrid, value, window: Window | None = None):
        window = grid.window if window is None else Window(*window)
        v = scalar(value, grid.mode)
        arr = np.empty(window.shape, dtype=object if grid.mode == "rational" else float)
        arr[...] = v
        return cls(grid, window, arr)

    def __getitem__(self, index: tuple[int, int]):
        i, j = index
        if not self.window.contains(i, j):
            raise WindowError(f"index {(i, j)} outside field window {tuple(self.window)}")
        return self.values[i - self.window.i_lo, j - self.window.j_lo]

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        sl = self.grid.window.slices(self.window)
        return self.grid.x[sl], self.grid.t[sl]

    @property
    def x(self) -> np.ndarray:
        return self.coords()[0]

    @property
    def t(self) -> np.ndarray:
        return self.coords()[1]

    def restrict(self, window: Window) -> "Field":
        window = Window(*window)
        if not self.window.covers(window) or window.empty:
            raise WindowError(f"cannot restrict {tuple(self.window)} to {tuple(window)}")
        return Field(self.grid, window, self.values[self.window.slices(window)])

    def row(self, j: int) -> np.ndarray:
        """Values along the spatial index at time label ``j``."""
        if not self.window.j_lo <= j < self.window.j_hi:
            raise WindowError(f"time label {j} outside field window")
        return self.values[:, j - self.window.j_lo]

    def max_abs(self) -> float:
        return max_abs(self.values)

    def to_float(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    # arithmetic on the common window --------------------------------------

    def _binary(self, other, op):
        if isinstance(other, Field):
            if other.grid is not self.grid:
                raise ValueError("fields live on different grids")
            common = self.window.intersect(other.window)
            if common.empty:
                raise WindowError("fields have no common window")
            a = self.values[self.window.slices(common)]
            b = other.values[other.window.slices(common)]
            return Field(self.grid, common, op(a, b))
        return Field(self.grid, self.window, op(self.values, other))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binary(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binary(other, lambda a, b: a / b)

    def __neg__(self):
        return Field(self.grid, self.window, -self.values)

    def __repr__(self):
        return f"Field(window={tuple(self.window)}, mode={self.mode!r})"


# --------------------------------------------------------------------------
# shift and stencil operators


def shift(f: Field, di: int, dj: int) -> Field:
    """``result(i, j) = f(i + di, j + dj)`` on the points of f's window where it is defined."""
    out = f.window.intersect(f.window.translate(-di, -dj))
    if out.empty:
        raise WindowError(f"shift by {(di, dj)} leaves no valid points in {tuple(f.window)}")
    src = out.translate(di, dj)
    return Field(f.grid, out, f.values[f.window.slices(src)])


def apply_stencil(f: Field, coeffs: dict[tuple[int, int], Any]) -> Field:
    """Linear combination ``sum_k c_k T^{o_k} f`` on the shrunken window."""
    out = stencil_window(f.window, list(coeffs))
    if out.empty:
        raise WindowError(f"stencil {sorted(coeffs)} does not fit window {tuple(f.window)}")
    acc = None
    for (di, dj), c in coeffs.items():
        term = f.values[f.window.slices(out.translate(di, dj))] * c
        acc = term if acc is None else acc + term
    return Field(f.grid, out, acc)


_DERIVATIVES = {
    "forward": ({(1, 0): 1, (0, 0): -1}, 1),
    "backward": ({(0, 0): 1, (-1, 0): -1}, 1),
    "symmetric": ({(1, 0): 1, (-1, 0): -1}, 1),
    "second_forward": ({(2, 0): 1, (1, 0): -2, (0, 0): 1}, 2),
}


def discrete_derivative(f: Field, axis: str, kind: str = "forward") -> Field:
    """Forward, backward, symmetric or second-forward difference along ``axis``.

    Requires the grid to be uniform along the axis; the spacing is the grid's
    nominal ``sigma``.
    """
    if kind not in _DERIVATIVES:
        raise ValueError(f"unknown derivative kind {kind!r}")
    if not f.grid.is_uniform(axis):
        raise NonUniformGridError(f"grid is not uniform along {axis}")
    stencil, order = _DERIVATIVES[kind]
    sigma = f.grid.spacing(axis)
    denom = sigma**order * (2 if kind == "symmetric" else 1)
    if axis == "t":
        stencil = {(dj, di): c for (di, dj), c in stencil.items()}
    return apply_stencil(f, stencil) / denom


# --------------------------------------------------------------------------
# scheme equations


@dataclass(frozen=True)
class SchemeEquation:
    """One relation among (x, t, u) values at a finite set of stencil offsets.

    ``residual(xs, ts, us)`` receives three sequences aligned with
    ``offsets``; entries may be scalars or equally shaped arrays.  An optional
    ``partials(xs, ts, us)`` returns ``(dE/dx_k, dE/dt_k, dE/du_k)`` as three
    sequences aligned the same way; when absent, prolongations fall back to
    central differences.
    """

    name: str
    offsets: tuple[tuple[int, int], ...]
    residual: Callable
    partials: Callable | None = None

    def valid_window(self, window: Window) -> Window:
        return stencil_window(window, self.offsets)

    def __call__(self, xs, ts, us):
        return self.residual(xs, ts, us)


def gather(f: Field, offsets: Sequence[tuple[int, int]], window: Window | None = None):
    """Values of x, t and u at each offset, as arrays over ``window``.

    ``window`` defaults to the stencil's valid window inside ``f``.
    """
    if window is None:
        window = stencil_window(f.window, offsets)
    if window.empty:
        raise WindowError(f"stencil {list(offsets)} exits field window {tuple(f.window)}")
    gwin = f.grid.window
    xs, ts, us = [], [], []
    for di, dj in offsets:
        src = window.translate(di, dj)
        if not f.window.covers(src):
            raise WindowError(f"offset {(di, dj)} exits field window")
        gsl = gwin.slices(src)
        xs.append(f.grid.x[gsl])
        ts.append(f.grid.t[gsl])
        us.append(f.values[f.window.slices(src)])
    return window, xs, ts, us


class Residual(NamedTuple):
    field: Field
    max_abs: float


def scheme_residual(s: SchemeEquation, grid: LatticeGrid, f: Field) -> Residual:
    """Residual of ``s`` at every point of f's window where the stencil fits."""
    if f.grid is not grid:
        raise ValueError("field is not defined on the given grid")
    window, xs, ts, us = gather(f, s.offsets)
    vals = s.residual(xs, ts, us)
    vals = np.broadcast_to(np.asarray(vals, dtype=object if grid.mode == "rational" else None), window.shape)
    out = Field(grid, window, vals)
    return Residual(out, out.max_abs())


# --------------------------------------------------------------------------
# exact-aware elementary functions


def _exp_diff_scalar(p, q):
    if p == q:
        return Fraction(0) if isinstance(p, Fraction) else 0.0
    return math.exp(p) - math.exp(q)


_exp_diff_obj = np.frompyfunc(_exp_diff_scalar, 2, 1)


def exp_diff(p, q):
    """``exp(p) - exp(q)``, exactly zero whenever ``p == q`` in rational mode."""
    p_arr, q_arr = np.asarray(p), np.asarray(q)
    if p_arr.dtype == object or q_arr.dtype == object:
        return _exp_diff_obj(p_arr, q_arr)
    return np.exp(p_arr) - np.exp(q_arr)
