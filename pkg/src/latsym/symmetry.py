"""Point vector fields, evolutionary characteristics and their verification.

A point field ``xi_x d/dx + xi_t d/dt + phi d/du`` acts on a difference
scheme through its prolongation: every stencil point gets its own copy of
the field, evaluated at that point's ``(x, t, u)``.  An evolutionary field
``Q d/du`` has a characteristic that may read several lattice points; its
prolongation applies the total shifts of ``Q`` to the shifted ``u`` entries.

Verification is numeric and constructive: samplers build exact solution
windows, and the prolonged action must vanish on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple, Protocol, Sequence

import numpy as np

from . import expr as _expr
from .errors import WindowError
from .lattice import Field, LatticeGrid, SchemeEquation, Window, gather, stencil_window

DEFAULT_TOL = 1e-8


class Sample(NamedTuple):
    grid: LatticeGrid
    u: Field
    params: dict


class SolutionSampler(Protocol):
    """Anything that yields exact solution windows of a fixed system."""

    seed: int

    def samples(self, count: int) -> Iterator[Sample]: ...


# --------------------------------------------------------------------------
# fields


def _zero(x, t, u):
    return 0 * u


@dataclass(frozen=True)
class PointVectorField:
    """``xi_x(x,t,u) d/dx + xi_t(x,t,u) d/dt + phi(x,t,u) d/du``."""

    name: str
    xi_x: Callable = _zero
    xi_t: Callable = _zero
    phi: Callable = _zero

    def xi(self, x, t, u):
        return self.xi_x(x, t, u), self.xi_t(x, t, u)

    def scaled(self, lam: float) -> "PointVectorField":
        return PointVectorField(
            f"{lam}*{self.name}",
            lambda x, t, u: lam * self.xi_x(x, t, u),
            lambda x, t, u: lam * self.xi_t(x, t, u),
            lambda x, t, u: lam * self.phi(x, t, u),
        )

    @classmethod
    def from_expressions(cls, source: str, name: str | None = None, params=None) -> "PointVectorField":
        """Build from ``"xi_x ; xi_t ; phi"``; shifts are rejected (locality)."""
        exprs = _expr.parse_many(source)
        if len(exprs) != 3:
            raise _expr.ParseError(
                f"a point field needs 3 coefficients 'xi_x ; xi_t ; phi', got {len(exprs)}",
                (0, len(source)), source,
            )
        for e in exprs:
            if not e.is_local:
                raise _expr.ParseError("point-field coefficients may not read shifted values", (0, len(source)), source)
        fns = [e.bind([(0, 0)], params) for e in exprs]

        def wrap(fn):
            return lambda x, t, u: fn([x], [t], [u]) + 0 * u

        return cls(name or source, *(wrap(f) for f in fns))


@dataclass(frozen=True)
class EvolutionaryCharacteristic:
    """Characteristic ``Q`` reading (x, t, u) at the offsets in ``stencil``."""

    name: str
    q: Callable
    stencil: tuple[tuple[int, int], ...]

    @classmethod
    def from_expression(cls, source: str, name: str | None = None, params=None) -> "EvolutionaryCharacteristic":
        e = _expr.parse(source)
        stencil = tuple(sorted(e.stencil | {(0, 0)}))
        return cls(name or source, e.bind(stencil, params), stencil)

    def field(self, f: Field) -> Field:
        """Evaluate Q at every point of f's window where its stencil fits."""
        window, xs, ts, us = gather(f, self.stencil)
        vals = self.q(xs, ts, us)
        vals = np.broadcast_to(np.asarray(vals, dtype=object if f.mode == "rational" else None), window.shape)
        return Field(f.grid, window, vals)


def point_to_characteristic(X: PointVectorField) -> EvolutionaryCharacteristic:
    """Discrete analogue of ``Q = phi - xi_x u_x - xi_t u_t`` with backward differences."""

    def q(xs, ts, us):
        # stencil order: (-1,0), (0,-1), (0,0)
        x, t, u = xs[2], ts[2], us[2]
        ux = (u - us[0]) / (x - xs[0])
        ut = (u - us[1]) / (t - ts[1])
        return X.phi(x, t, u) - X.xi_x(x, t, u) * ux - X.xi_t(x, t, u) * ut

    return EvolutionaryCharacteristic(f"Q[{X.name}]", q, ((-1, 0), (0, -1), (0, 0)))


# --------------------------------------------------------------------------
# prolongation


def numeric_partials(E: Callable, xs, ts, us):
    """Central-difference partials of ``E`` in every stencil argument.

    Step ``h = 1e-6 * max(1, |value|)`` per entry.
    """
    xs = [np.asarray(v, dtype=float) for v in xs]
    ts = [np.asarray(v, dtype=float) for v in ts]
    us = [np.asarray(v, dtype=float) for v in us]
    args = [xs, ts, us]
    out = ([], [], [])
    for which in range(3):
        for k in range(len(xs)):
            v = args[which][k]
            h = 1e-6 * np.maximum(1.0, np.abs(v))
            plus = [list(a) for a in args]
            minus = [list(a) for a in args]
            plus[which][k] = v + h
            minus[which][k] = v - h
            out[which].append((np.asarray(E(*plus)) - np.asarray(E(*minus))) / (2 * h))
    return out


def scheme_partials(s: SchemeEquation, xs, ts, us):
    if s.partials is not None:
        return s.partials(xs, ts, us)
    return numeric_partials(s.residual, xs, ts, us)


def prolong_point_field(X: PointVectorField, s: SchemeEquation) -> Callable:
    """Return ``action(xs, ts, us)`` of the prolonged field on ``s``.

    Each stencil point contributes ``xi_x dE/dx_k + xi_t dE/dt_k + phi dE/du_k``
    with the coefficients evaluated at that point's own values.
    """

    def action(xs, ts, us):
        dx, dt, du = scheme_partials(s, xs, ts, us)
        total = 0.0
        for k in range(len(s.offsets)):
            x, t, u = xs[k], ts[k], us[k]
            total = total + X.xi_x(x, t, u) * dx[k] + X.xi_t(x, t, u) * dt[k] + X.phi(x, t, u) * du[k]
        return total

    return action


# --------------------------------------------------------------------------
# reports


@dataclass
class SymmetryReport:
    name: str
    tolerance: float
    max_abs_residual: float
    samples_tested: int
    per_equation: dict
    sample_residuals: list = field(default_factory=list)
    seed: int | None = None

    @property
    def verdict(self) -> str:
        if self.max_abs_residual <= self.tolerance:
            return "pass"
        loud = sum(r > 100 * self.tolerance for r in self.sample_residuals)
        if self.sample_residuals and loud >= 0.1 * len(self.sample_residuals):
            return "fail"
        return "inconclusive"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "verdict": self.verdict,
            "tolerance": self.tolerance,
            "max_abs_residual": self.max_abs_residual,
            "samples_tested": self.samples_tested,
            "per_equation": dict(self.per_equation),
            "seed": self.seed,
        }


def _amax(v) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.max(np.abs(v))) if v.size else 0.0


def verify_point_symmetry(
    X: PointVectorField,
    system: Sequence[SchemeEquation],
    sampler: SolutionSampler,
    tol: float = DEFAULT_TOL,
    n_samples: int = 50,
) -> SymmetryReport:
    """Evaluate the prolonged action of ``X`` on every equation over sampled solutions."""
    per_eq = {s.name: 0.0 for s in system}
    per_sample = []
    actions = [(s, prolong_point_field(X, s)) for s in system]
    for sample in sampler.samples(n_samples):
        u = sample.u if sample.u.mode == "double" else _to_double(sample.u)
        worst = 0.0
        for s, act in actions:
            _, xs, ts, us = gather(u, s.offsets)
            r = _amax(act(xs, ts, us))
            per_eq[s.name] = max(per_eq[s.name], r)
            worst = max(worst, r)
        per_sample.append(worst)
    return SymmetryReport(X.name, tol, max(per_sample, default=0.0), len(per_sample), per_eq, per_sample, sampler.seed)


def evolutionary_action(Q: EvolutionaryCharacteristic, s: SchemeEquation, u: Field) -> Field:
    """``sum_k (T^{o_k} Q) dE/du_k`` at points where both Q and E's stencil fit."""
    qf = Q.field(u)
    window = stencil_window(qf.window, s.offsets)
    if window.empty:
        raise WindowError(f"stencil of {Q.name} leaves no room for {s.name} in {tuple(u.window)}")
    _, xs, ts, us = gather(u, s.offsets, window)
    _, _, _, qs = gather(qf, s.offsets, window)
    _, _, du = scheme_partials(s, xs, ts, us)
    total = 0
    for k in range(len(s.offsets)):
        total = total + qs[k] * du[k]
    return Field(u.grid, window, np.broadcast_to(total, window.shape))


def verify_evolutionary_symmetry(
    Q: EvolutionaryCharacteristic,
    s: SchemeEquation,
    sampler: SolutionSampler,
    tol: float = DEFAULT_TOL,
    n_samples: int = 50,
) -> SymmetryReport:
    per_sample = []
    for sample in sampler.samples(n_samples):
        u = sample.u if sample.u.mode == "double" else _to_double(sample.u)
        per_sample.append(evolutionary_action(Q, s, u).max_abs())
    worst = max(per_sample, default=0.0)
    return SymmetryReport(Q.name, tol, worst, len(per_sample), {s.name: worst}, per_sample, sampler.seed)


def _to_double(f: Field) -> Field:
    g = f.grid.with_mode("double")
    return Field(g, f.window, f.to_float())


# --------------------------------------------------------------------------
# flows


def flow_step(Q: EvolutionaryCharacteristic, f: Field, dlam) -> Field:
    """Explicit Euler step ``u <- u + dlam * Q`` on Q's valid window; x, t are untouched."""
    qf = Q.field(f)
    return f.restrict(qf.window) + qf * dlam


class CommutationResult(NamedTuple):
    eps: list
    defects: list
    orders: list
    floor: float

    @property
    def exact(self) -> bool:
        """All defects sit at round-off level: the two maps commute outright."""
        return all(d <= self.floor for d in self.defects)

    @property
    def order(self) -> float:
        if self.exact:
            return math.inf
        return min(self.orders) if self.orders else float("nan")


def measure_commutation(step, flow, state, eps0: float, distance, levels: int = 4, floor: float = 0.0) -> CommutationResult:
    """Defect ``|step(flow(s, e)) - flow(step(s), e)|`` under successive halving of ``e``.

    The observed order is ``log2(d(e)/d(e/2))``; a commuting pair of maps
    leaves only a defect below ``floor`` and is reported with infinite order.
    """
    eps = [eps0 / 2**k for k in range(levels)]
    stepped = step(state)
    defects = [float(distance(step(flow(state, e)), flow(stepped, e))) for e in eps]
    orders = []
    for a, b in zip(defects, defects[1:]):
        if a <= floor and b <= floor:
            orders.append(math.inf)
        elif b <= 0:
            orders.append(math.inf)
        else:
            orders.append(math.log2(a / b))
    return CommutationResult(eps, defects, orders, floor)


def observed_orders(errors: Sequence[float], ratio: float = 2.0) -> list[float]:
    """Convergence orders between successive refinements by ``ratio``."""
    return [math.log(a / b, ratio) for a, b in zip(errors, errors[1:])]
