"""Command-line entry point ``latsym``.

Every command writes one JSON document (sorted keys) holding the effective
configuration and the result, to stdout or atomically to ``--output``.
Exit status: 0 pass, 2 fail, 1 usage error.

Configuration precedence is flags, then the ``--config`` file, then the
``LATSYM_MODE`` environment variable (mode only), then built-in defaults.
The config file is plain ``key = value`` text; ``#`` starts a comment and
keys use the long flag names with ``_`` or ``-``.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Any

import numpy as np

from . import __version__
from .errors import LatsymError
from .expr import ParseError
from .reduction import jsonable

EXIT_PASS, EXIT_USAGE, EXIT_FAIL = 0, 1, 2
HEAT_SIGMA_X = "4/5"  # default heat spacing when only c is given


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = ""
    target: str = ""
    scheme: str = "heat"
    symmetry: str = ""
    kind: str = "evolutionary"
    mode: str = "double"
    seed: int = 0
    samples: int = 50
    tol: float = 1e-8
    c: str = "3/10"
    alpha: str = "1"
    a: str = ""
    k: str = ""
    A: str = ""
    B: str = ""
    beta: str = "1"
    sigma_x: str = ""
    sigma_t: str = ""
    gamma0: str = "1"
    N: int = 1
    n: int = 3
    m: int = 0
    m0: int = 0
    n0: int = 0
    steps: int = 4
    width: int = 12
    eps: float = 1e-3
    levels: int = 5
    contour: bool = False
    input: str = ""
    output: str = ""
    format: str = "json"


_FIELDS = {f.name: f for f in fields(RunConfig)}
_INT = {name for name, f in _FIELDS.items() if f.type == "int"}
_FLOAT = {name for name, f in _FIELDS.items() if f.type == "float"}
_BOOL = {name for name, f in _FIELDS.items() if f.type == "bool"}


def read_config_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key not in _FIELDS or key in ("command", "target"):
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = value.strip("\"'")
    return out


def _coerce(key: str, value: Any) -> Any:
    try:
        if key in _INT:
            return int(value)
        if key in _FLOAT:
            return float(value)
        if key in _BOOL:
            return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes", "on")
    except ValueError:
        raise UsageError(f"bad value {value!r} for {key}") from None
    return str(value)


def build_config(args: argparse.Namespace) -> RunConfig:
    merged: dict[str, Any] = {}
    env_mode = os.environ.get("LATSYM_MODE")
    if env_mode:
        merged["mode"] = env_mode
    if args.config:
        merged.update(read_config_file(args.config))
    for key, value in vars(args).items():
        if key in _FIELDS and value is not None and not (key in _BOOL and value is False):
            merged[key] = value
    cfg = RunConfig(**{k: _coerce(k, v) for k, v in merged.items()})
    if cfg.mode not in ("double", "rational"):
        raise UsageError(f"mode must be 'double' or 'rational', got {cfg.mode!r}")
    if cfg.format not in ("json", "csv"):
        raise UsageError(f"format must be 'json' or 'csv', got {cfg.format!r}")
    return cfg


def num(text: str, mode: str):
    """Parse ``3``, ``1/2`` or ``0.25``: a Fraction in rational mode, a float otherwise."""
    if text == "":
        raise UsageError("missing numeric parameter")
    try:
        value = Fraction(text)
    except ValueError:
        raise UsageError(f"not a number: {text!r}") from None
    if mode == "rational":
        return value.numerator if value.denominator == 1 else value
    return float(value)


def exact_num(text: str):
    return num(text, "rational")


# --------------------------------------------------------------------------
# verify


def _heat_scheme(cfg: RunConfig, exact: bool = False):
    from .heat import HeatScheme

    mode = "rational" if exact else "double"
    sx = num(cfg.sigma_x or HEAT_SIGMA_X, mode)
    st = num(cfg.sigma_t, mode) if cfg.sigma_t else num(cfg.c, mode) * sx * sx
    return HeatScheme(sx, st)


def _commutation(cfg: RunConfig, flow_name: str) -> dict:
    from .symmetry import measure_commutation
    from .toda import AbState, dttl_ab_step, isospectral_euler, nonisospectral_euler

    alpha = num(cfg.alpha, "double")
    rng = np.random.default_rng(cfg.seed)
    flow = {"isospectral": isospectral_euler, "nonisospectral": nonisospectral_euler}[flow_name]
    worst, runs = math.inf, []
    for _ in range(max(1, min(cfg.samples, 10))):
        size = 5
        state = AbState(cfg.m, 0, list(1 + 0.1 * rng.uniform(-1, 1, size)), list(0.1 * rng.uniform(-1, 1, size)))
        res = measure_commutation(lambda s: dttl_ab_step(s, alpha), flow, state, cfg.eps, lambda p, q: p.distance(q), cfg.levels)
        order = res.order
        runs.append({"defects": res.defects, "orders": res.orders, "order": order})
        worst = min(worst, order)
    verdict = "pass" if worst >= 1.9 else "fail"
    return {"name": flow_name, "verdict": verdict, "threshold_order": 1.9, "min_order": worst, "runs": runs,
            "criterion": "Euler flow step and lattice step commute to second order in eps"}


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    from .symmetry import EvolutionaryCharacteristic, PointVectorField, verify_evolutionary_symmetry, verify_point_symmetry

    name = cfg.symmetry or cfg.target
    if not name:
        raise UsageError("verify needs --symmetry")
    if cfg.scheme == "heat":
        from .heat import HEAT_CHARACTERISTICS, HeatSolutionSampler, heat_equation, heat_point_fields, heat_point_system

        scheme = _heat_scheme(cfg)
        sampler = HeatSolutionSampler(scheme, seed=cfg.seed)
        if cfg.kind == "evolutionary":
            src = HEAT_CHARACTERISTICS.get(name, name)
            Q = EvolutionaryCharacteristic.from_expression(src, name)
            rep = verify_evolutionary_symmetry(Q, heat_equation(scheme.c), sampler, cfg.tol, cfg.samples)
        else:
            X = heat_point_fields().get(name) or PointVectorField.from_expressions(name)
            rep = verify_point_symmetry(X, heat_point_system(scheme.c), sampler, cfg.tol, cfg.samples)
        out = rep.to_dict()
    elif cfg.scheme == "dttl":
        from .toda import DttlSolutionSampler, dttl_equation, dttl_point_fields, dttl_system

        if name in ("isospectral", "nonisospectral"):
            out = _commutation(cfg, name)
        else:
            alpha = num(cfg.alpha, "double")
            sampler = DttlSolutionSampler(alpha, seed=cfg.seed)
            if cfg.kind == "evolutionary":
                Q = EvolutionaryCharacteristic.from_expression(name, name)
                rep = verify_evolutionary_symmetry(Q, dttl_equation(alpha), sampler, cfg.tol, cfg.samples)
            else:
                X = dttl_point_fields().get(name) or PointVectorField.from_expressions(name)
                rep = verify_point_symmetry(X, dttl_system(alpha), sampler, cfg.tol, cfg.samples)
            out = rep.to_dict()
    else:
        raise UsageError(f"unknown scheme {cfg.scheme!r}")
    return out, EXIT_PASS if out["verdict"] == "pass" else EXIT_FAIL


# --------------------------------------------------------------------------
# reduce


def cmd_reduce(cfg: RunConfig) -> tuple[dict, int]:
    mode = cfg.mode
    sym = cfg.symmetry or cfg.target
    if cfg.scheme == "heat":
        from . import heat_reductions as hr

        if sym == "translation" and cfg.kind == "point":
            c = num(cfg.c, mode)
            if cfg.k:
                res = hr.translation_reduce_point(c, k=num(cfg.k, mode))
            else:
                res = hr.translation_reduce_point(c, a=num(cfg.a or "1", mode))
        elif sym == "translation":
            res = hr.translation_reduce_evolutionary(num(cfg.a or "1", mode), _heat_scheme(cfg, mode == "rational"))
        elif sym == "dilation" and cfg.kind == "point":
            res = hr.dilation_reduce_point(num(cfg.c, mode), cfg.m0, cfg.n0)
        elif sym == "dilation":
            res = hr.dilation_reduce_evolutionary(exact_num(cfg.c), exact_num(cfg.gamma0), cfg.n, cfg.m)
        else:
            raise UsageError(f"unknown heat reduction {sym!r} (translation, dilation)")
    elif cfg.scheme == "dttl":
        from . import toda

        sx = num(cfg.sigma_x or "1", mode)
        st = num(cfg.sigma_t or "1", mode)
        if sym == "translation":
            res = toda.translation_reduce_dttl(num(cfg.a or "1", mode), sx, st, k=int(cfg.k) if cfg.k else None,
                                               alpha=num(cfg.alpha, mode))
        elif sym == "dilation":
            res = toda.dilation_reduce_dttl(num(cfg.beta, mode), sx, st, cfg.n, cfg.m)
        elif sym == "isospectral":
            res = _isospectral_reduction(cfg)
        elif sym == "nonisospectral":
            if cfg.A or cfg.B:
                res = _nonisospectral_custom(cfg)
            else:
                res = toda.nonisospectral_reduction()
        else:
            raise UsageError(f"unknown DTTL reduction {sym!r} (translation, dilation, isospectral, nonisospectral)")
    else:
        raise UsageError(f"unknown scheme {cfg.scheme!r}")
    return res.to_dict() | {"ok": res.ok}, EXIT_PASS if res.ok else EXIT_FAIL


def _isospectral_reduction(cfg: RunConfig):
    from .reduction import ReductionResult
    from .toda import AbState, isospectral_first_integrals

    state = _load_ab_state(cfg) if cfg.input else AbState.vacuum(cfg.m, 0, 4, exact_mode=True)
    fi = isospectral_first_integrals(state)
    return ReductionResult(
        "isospectral flow (DTTL a/b form)",
        {"stationarity": "a_eps = b_eps = 0"},
        {"first_integrals": ["a[n-1] + a[n] + b[n]^2 = A(m)", "a[n](b[n+1] + b[n]) = B(m)"],
         "eliminated": "a[n](sqrt(A - a[n] - a[n+1]) + sqrt(A - a[n-1] - a[n])) = B"},
        None,
        max(fi.max_drift, fi.elliptic_residual or 0.0),
        [state.lo - 2, state.hi + 2],
        0.0 if state.exact else 1e-12,
        {"A": fi.A_m, "B": fi.B_m, "drift": fi.max_drift, "elliptic_residual": fi.elliptic_residual,
         "branch_consistent": fi.branch_consistent},
    )


def _nonisospectral_custom(cfg: RunConfig):
    from .reduction import ReductionResult
    from .toda import determine_AB_from_dttl, solve_nonisospectral_stationary

    A, B = exact_num(cfg.A or "0"), exact_num(cfg.B or "0")
    m = cfg.m or 1
    sol = solve_nonisospectral_stationary(A, B, m, (1, 8))
    det = determine_AB_from_dttl(lambda mm: A, lambda mm: B, (m, m + 1), (1, 6))
    stationary = max(abs(float(sol[k])) for k in ("second_order_residual", "a_flow_residual", "b_flow_residual"))
    return ReductionResult(
        "nonisospectral flow (DTTL a/b form)",
        {"A(m)": A, "B(m)": B, "m": m},
        {"a": "[A + B/(2k+1)^2 + n(n+2m+1)] / (k(k+1))", "b": "4 sqrt(B) / ((2k-1)(2k+1))"},
        None,
        det["residual_max"],
        [1, 6, m, m + 1],
        0.0,
        {"stationary_residual": stationary, "a": sol["a"], "b": sol["b"], "verdict": det["verdict"]},
    )


# --------------------------------------------------------------------------
# evolve


def _load_ab_state(cfg: RunConfig):
    from .toda import AbState

    with open(cfg.input) as fh:
        return AbState.from_dict(json.load(fh))


def cmd_evolve(cfg: RunConfig) -> tuple[dict, int]:
    if cfg.scheme == "heat":
        from .heat import heat_evolve
        from .io import field_to_dict, read_field_json

        scheme = _heat_scheme(cfg, cfg.mode == "rational")
        if cfg.input:
            f0 = read_field_json(cfg.input)
            row = [f0[i, f0.window.j_lo] for i in range(f0.window.i_lo, f0.window.i_hi)]
        else:
            rng = np.random.default_rng(cfg.seed)
            row = rng.integers(-5, 6, cfg.width + 2 * cfg.steps).tolist()
            if cfg.mode == "double":
                row = [float(v) for v in row]
            else:
                row = [Fraction(v) for v in row]
        u = heat_evolve(row, cfg.steps, scheme, mode=cfg.mode)
        return {"field": field_to_dict(u), "_field": u}, EXIT_PASS
    if cfg.scheme == "dttl":
        from .toda import AbState, dttl_ab_step

        alpha = num(cfg.alpha, "double")
        if cfg.input:
            state = _load_ab_state(cfg)
        else:
            rng = np.random.default_rng(cfg.seed)
            state = AbState(cfg.m, 0, list(1 + 0.1 * rng.uniform(-1, 1, 5)), list(0.1 * rng.uniform(-1, 1, 5)))
        states = [state]
        for _ in range(cfg.steps):
            states.append(dttl_ab_step(states[-1], alpha))
        return {"states": [s.to_dict() for s in states]}, EXIT_PASS
    raise UsageError(f"unknown scheme {cfg.scheme!r}")


# --------------------------------------------------------------------------
# oracle


def cmd_oracle(cfg: RunConfig) -> tuple[dict, int]:
    from .heat_reductions import gamma_sequence
    from .zpoly import _q_power, contour_I, z_transform_I

    c = exact_num(cfg.c)
    which = cfg.target or "I"
    if which == "I":
        value = z_transform_I(cfg.N, cfg.n, c)
        out = {"quantity": "I", "N": cfg.N, "n": cfg.n, "c": c, "value": value, "decimal": float(value)}
        if cfg.contour:
            q = contour_I(cfg.N, cfg.n, float(c))
            out["contour"] = q
            out["contour_deviation"] = abs(q - float(value))
    elif which == "gamma":
        value = gamma_sequence(cfg.n, c, exact_num(cfg.gamma0), check_N=range(1, 2 * cfg.n + 3))
        out = {"quantity": "gamma", "n": cfg.n, "c": c, "value": value, "decimal": float(value)}
    elif which == "qpow":
        poly = _q_power(cfg.n, Fraction(c))
        coeffs = [poly.coeff(j) for j in range(poly.degree() + 1)]
        out = {"quantity": "qpow", "n": cfg.n, "c": c, "coefficients": coeffs, "decimal": [float(v) for v in coeffs]}
    else:
        raise UsageError(f"unknown oracle {which!r} (I, gamma, qpow)")
    return out, EXIT_PASS


# --------------------------------------------------------------------------
# report


def cmd_report(cfg: RunConfig) -> tuple[dict, int]:
    """Run the built-in symmetry suites and every closed-form reduction."""
    from .heat import HEAT_CHARACTERISTICS, heat_point_fields
    from .toda import dttl_point_fields

    entries = {}
    samples = min(cfg.samples, 20)

    def run(label, fn, **over):
        sub = RunConfig(**(asdict(cfg) | {"samples": samples} | over))
        try:
            out, code = fn(sub)
        except LatsymError as exc:
            out, code = {"error": str(exc)}, EXIT_FAIL
        entries[label] = {"exit": code, "verdict": out.get("verdict", "pass" if out.get("ok", code == 0) else "fail")}

    for name in HEAT_CHARACTERISTICS:
        run(f"verify heat evolutionary {name}", cmd_verify, scheme="heat", kind="evolutionary", symmetry=name)
    for name in heat_point_fields():
        run(f"verify heat point {name}", cmd_verify, scheme="heat", kind="point", symmetry=name)
    for name in dttl_point_fields():
        run(f"verify dttl point {name}", cmd_verify, scheme="dttl", kind="point", symmetry=name, alpha="1")
    run("verify dttl isospectral", cmd_verify, scheme="dttl", symmetry="isospectral", alpha="1")
    run("reduce heat translation point", cmd_reduce, scheme="heat", symmetry="translation", kind="point", k="1", c="1", mode="rational")
    run("reduce heat translation evolutionary", cmd_reduce, scheme="heat", symmetry="translation", kind="evolutionary",
        a="1", sigma_x="1", sigma_t="1", mode="rational")
    run("reduce heat dilation point", cmd_reduce, scheme="heat", symmetry="dilation", kind="point", c="1", mode="rational")
    run("reduce heat dilation evolutionary", cmd_reduce, scheme="heat", symmetry="dilation", kind="evolutionary", c="1")
    run("reduce dttl translation", cmd_reduce, scheme="dttl", symmetry="translation", a="1", sigma_x="1", sigma_t="1",
        mode="rational")
    run("reduce dttl dilation", cmd_reduce, scheme="dttl", symmetry="dilation", beta="1", n=2, m=3, mode="rational")
    run("reduce dttl isospectral", cmd_reduce, scheme="dttl", symmetry="isospectral")
    run("reduce dttl nonisospectral", cmd_reduce, scheme="dttl", symmetry="nonisospectral")
    ok = all(e["exit"] == EXIT_PASS for e in entries.values())
    return {"entries": entries, "all_pass": ok}, EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "reduce": cmd_reduce, "evolve": cmd_evolve, "oracle": cmd_oracle, "report": cmd_report}


# --------------------------------------------------------------------------
# plumbing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="key = value configuration file")
    g.add_argument("--scheme", choices=["heat", "dttl"])
    g.add_argument("--symmetry", help="builtin name or expression")
    g.add_argument("--mode", dest="kind", choices=["point", "evolutionary"], help="kind of symmetry")
    g.add_argument("--arith", dest="mode", choices=["double", "rational"], help="arithmetic mode")
    g.add_argument("--seed", type=int)
    g.add_argument("--samples", type=int)
    g.add_argument("--tol", type=float)
    for name in ("c", "alpha", "a", "k", "A", "B", "beta", "gamma0"):
        g.add_argument(f"--{name}")
    g.add_argument("--sigma-x", dest="sigma_x")
    g.add_argument("--sigma-t", dest="sigma_t")
    for name in ("N", "n", "m", "m0", "n0", "steps", "width", "levels"):
        g.add_argument(f"--{name}", type=int)
    g.add_argument("--eps", type=float)
    g.add_argument("--contour", action="store_true", help="cross-check by contour quadrature")
    g.add_argument("--input")
    g.add_argument("--output", "-o")
    g.add_argument("--format", choices=["json", "csv"])

    parser = argparse.ArgumentParser(prog="latsym", description="Symmetries and reductions of lattice difference schemes.")
    parser.add_argument("--version", action="version", version=f"latsym {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="verify a point or evolutionary symmetry")
    sub.add_parser("reduce", parents=[common], help="perform a symmetry reduction")
    sub.add_parser("evolve", parents=[common], help="march a scheme in time")
    p = sub.add_parser("oracle", parents=[common], help="exact coefficient oracles")
    p.add_argument("target", nargs="?", default=None, choices=["I", "gamma", "qpow"])
    sub.add_parser("report", parents=[common], help="run every built-in check")
    return parser


def render(doc: dict) -> str:
    return json.dumps(jsonable(doc), sort_keys=True, indent=2) + "\n"


def _emit(cfg: RunConfig, payload: dict) -> None:
    from .io import atomic_write, write_field_csv

    field = payload.pop("_field", None)
    if cfg.format == "csv":
        if field is None:
            raise UsageError("csv output is only available for evolved heat fields")
        if not cfg.output:
            raise UsageError("csv output needs --output")
        write_field_csv(field, cfg.output)
        return
    text = render({"config": asdict(cfg), "result": payload})
    if cfg.output:
        with atomic_write(cfg.output) as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    try:
        cfg = build_config(args)
        payload, code = COMMANDS[cfg.command](cfg)
        _emit(cfg, payload)
        return code
    except (UsageError, ParseError) as exc:
        print(f"latsym: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LatsymError as exc:
        cfg_dict = asdict(cfg) if "cfg" in locals() else {}
        sys.stdout.write(render({"config": cfg_dict, "error": {"type": type(exc).__name__, "message": str(exc)}}))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
