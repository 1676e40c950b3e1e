"""Structured results of symmetry reductions, shared by the heat and Toda modules."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from .lattice import Window, format_number


def jsonable(value: Any) -> Any:
    """Recursively convert numbers (exact ones to ``"p/q"``) and containers for JSON."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)) and not isinstance(value, Window):
        return [jsonable(v) for v in value]
    if isinstance(value, Window):
        return list(value)
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, str)) or value is None:
        return value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return format_number(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if np.isfinite(v) else repr(v)
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    return str(value)


@dataclass
class ReductionResult:
    """Outcome of one reduction.

    ``reduced_equation`` describes the lower-dimensional equation (its
    stencil and coefficients as text); ``solution_closed_form`` is ``None``
    when the reduction only generates an equation (difference-delay or
    dilation-delay cases).  ``residual_max`` is the largest residual of the
    attached solution over ``window`` and must not exceed ``tolerance``.
    """

    symmetry: str
    constraint: dict
    reduced_equation: dict
    solution_closed_form: str | None = None
    residual_max: Any = None
    window: Any = None
    tolerance: float = 0.0
    values: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        if self.residual_max is None:
            return True
        return float(self.residual_max) <= self.tolerance

    def to_dict(self) -> dict:
        return jsonable(
            {
                "symmetry": self.symmetry,
                "constraint": self.constraint,
                "reduced_equation": self.reduced_equation,
                "solution_closed_form": self.solution_closed_form,
                "residual_max": self.residual_max,
                "window": self.window,
                "tolerance": self.tolerance,
                "values": self.values,
                "notes": self.notes,
            }
        )
