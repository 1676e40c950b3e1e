"""CSV and JSON serialisation of grids and fields.

CSV rows carry ``i, j, x, t, u`` (headers ``m, n, x, t, u``).  The JSON
container is ``{"grid": ..., "values": ..., "arithmetic_mode": ...}``;
rationals are written as ``"p/q"`` strings so files round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .lattice import Field, LatticeGrid, Window, format_number, parse_number

CSV_COLUMNS = ("m", "n", "x", "t", "u")


def _cell(v):
    v = format_number(v)
    return v if isinstance(v, str) else repr(v)


def write_field_csv(f: Field, path) -> None:
    xs, ts = f.coords()
    rows = []
    for (a, b), u in np.ndenumerate(f.values):
        rows.append((f.window.i_lo + a, f.window.j_lo + b, _cell(xs[a, b]), _cell(ts[a, b]), _cell(u)))
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(rows)


def read_field_csv(path, mode: str | None = None) -> Field:
    """Rebuild a field (and a grid spanning exactly its window) from CSV.

    The mode is inferred from the presence of ``p/q`` cells unless given.
    Spacings are taken from the first coordinate steps along each axis.
    """
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    if mode is None:
        mode = "rational" if any("/" in r["u"] or "/" in r["x"] for r in rows) else "double"
    ii = [int(r["m"]) for r in rows]
    jj = [int(r["n"]) for r in rows]
    window = Window(min(ii), max(ii) + 1, min(jj), max(jj) + 1)
    shape = window.shape
    if len(rows) != shape[0] * shape[1]:
        raise ValueError(f"{path}: rows do not fill a rectangular window")
    dtype = object if mode == "rational" else float
    x, t, u = (np.empty(shape, dtype=dtype) for _ in range(3))
    for r, i, j in zip(rows, ii, jj):
        a, b = i - window.i_lo, j - window.j_lo
        x[a, b] = parse_number(r["x"], mode)
        t[a, b] = parse_number(r["t"], mode)
        u[a, b] = parse_number(r["u"], mode)
    sx = x[1, 0] - x[0, 0] if shape[0] > 1 else 1
    st = t[0, 1] - t[0, 0] if shape[1] > 1 else 1
    grid = LatticeGrid(window, x, t, sx, st, mode, x[0, 0] - sx * window.i_lo, t[0, 0] - st * window.j_lo)
    return Field(grid, window, u)


def _nested(arr: np.ndarray):
    return [[format_number(v) for v in row] for row in arr]


def grid_to_dict(g: LatticeGrid) -> dict:
    return {
        "window": list(g.window),
        "sigma_x": format_number(g.sigma_x),
        "sigma_t": format_number(g.sigma_t),
        "x0": format_number(g.x0),
        "t0": format_number(g.t0),
        "x": _nested(g.x),
        "t": _nested(g.t),
    }


def grid_from_dict(d: dict, mode: str) -> LatticeGrid:
    conv = np.vectorize(lambda v: parse_number(v, mode), otypes=[object if mode == "rational" else float])
    return LatticeGrid(
        Window(*d["window"]),
        conv(np.array(d["x"], dtype=object)),
        conv(np.array(d["t"], dtype=object)),
        parse_number(d["sigma_x"], mode),
        parse_number(d["sigma_t"], mode),
        mode,
        parse_number(d.get("x0", 0), mode),
        parse_number(d.get("t0", 0), mode),
    )


def field_to_dict(f: Field) -> dict:
    return {
        "grid": grid_to_dict(f.grid),
        "values": {"window": list(f.window), "data": _nested(f.values)},
        "arithmetic_mode": f.mode,
    }


def field_from_dict(d: dict) -> Field:
    mode = d["arithmetic_mode"]
    grid = grid_from_dict(d["grid"], mode)
    conv = np.vectorize(lambda v: parse_number(v, mode), otypes=[object if mode == "rational" else float])
    vals = conv(np.array(d["values"]["data"], dtype=object))
    return Field(grid, Window(*d["values"]["window"]), vals)


def write_field_json(f: Field, path) -> None:
    with atomic_write(path) as fh:
        json.dump(field_to_dict(f), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_field_json(path) -> Field:
    with open(path) as fh:
        return field_from_dict(json.load(fh))


class atomic_write:
    """Context manager writing text to a temp file renamed into place on success."""

    def __init__(self, path):
        self.path = Path(path)

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, self.tmp = tempfile.mkstemp(dir=self.path.parent, prefix=f".{self.path.name}.")
        self.fh = os.fdopen(fd, "w", newline="")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            os.unlink(self.tmp)
        return False
