"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 numeric failure
(for instance a non-hyperbolic verdict or a residual above tolerance).
Tolerances can be overridden with ``--tol name=value`` or with the
environment variables ``HYPERMOMENT_TOL_<NAME>``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from math import sqrt
from typing import Sequence

import numpy as np

from . import indexing as ix
from .assembly import assemble_directional, assemble_grad_1d, assemble_regularized_1d, scaled_matrix
from .fvsolver import SimConfig, SimulationError, cone_leak, signal_extent, simulate
from .hermite import InadmissibleState, char_poly, multiplicity_exponent
from .rotation import NotARotation, rotate_state, rotation_2d, rotation_about_axis, rotation_invariance_residual
from .spectral import analytic_eigenvalues, charpoly_logdet, classes, decompose, hyperbolicity_report
from .state import ConstraintViolation, load_state, random_state
from .waves import (FieldMismatch, classify_elementary_wave, hugoniot_pair, integral_curve,
                    make_field, rarefaction_curve_closed, shock_residuals, shock_speed)

log = logging.getLogger("hypermoment")

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_TOLS = {
    "imag": 1e-8,         # relative imaginary part that counts as complex
    "cond": 1e12,         # eigenvector condition number limit
    "charpoly": 1e-8,     # relative determinant mismatch
    "invariance": 1e-10,  # rotation invariance residual
    "wave": 1e-8,         # wave classification residual
}


class UsageError(Exception):
    pass


class NumericFailure(Exception):
    def __init__(self, msg, payload=None):
        super().__init__(msg)
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def tolerances(overrides: Sequence[str] = ()) -> dict:
    tols = dict(DEFAULT_TOLS)
    for name in tols:
        env = os.environ.get(f"HYPERMOMENT_TOL_{name.upper()}")
        if env is not None:
            tols[name] = float(env)
    for item in overrides:
        name, _, val = item.partition("=")
        if name not in tols or not val:
            raise UsageError(f"bad tolerance override {item!r}; known names: {', '.join(tols)}")
        tols[name] = float(val)
    return tols


def _emit(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, default=_jsonable)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(type(x))


def _check_dims(s, args):
    if not 1 <= s.D <= 3 and not args.allow_large:
        raise ValueError(f"D = {s.D} outside 1..3 (pass --allow-large to override)")
    if not 3 <= s.M <= 8 and not args.allow_large:
        raise ValueError(f"M = {s.M} outside 3..8 (pass --allow-large to override)")
    return s


def _state(path, args):
    return _check_dims(load_state(path), args)


def _direction(vals, D):
    if vals is None:
        return 1
    if len(vals) == 1 and float(vals[0]).is_integer() and len(vals) != D:
        return int(vals[0])
    n = np.asarray(vals, dtype=float)
    return list(n / np.linalg.norm(n))


# subcommands -------------------------------------------------------------------

def cmd_assemble(args, tols):
    s = _state(args.state, args)
    if args.kind == "grad":
        A = assemble_grad_1d(s)
    elif args.kind == "regularized":
        A = assemble_regularized_1d(s)
    elif args.kind == "scaled":
        A = scaled_matrix(s)[1]
    else:
        A = assemble_directional(s, _direction(args.direction, s.D))
    if args.format == "csv":
        if not args.out:
            raise ValueError("--format csv needs --out")
        A.write_csv(args.out)
    else:
        _emit(A.to_json(), args.out)


def cmd_spectrum(args, tols):
    s = _state(args.state, args)
    st = sqrt(s.theta)
    rows = []
    if args.vectors:
        for p in decompose(s).pairs:
            rows.append({"lambda": p.lam, "multiplicity": 1, "class": p.cls.j,
                         "hat": list(p.cls.hat_alpha), "root_index": p.i, "C": p.C,
                         "vector": p.vector.tolist()})
    else:
        by_k = {}
        for c in classes(s.D, s.M):
            by_k.setdefault(c.k, []).append(c.j)
        lam_iter = iter(analytic_eigenvalues(s))
        for k in range(1, s.M + 2):
            if multiplicity_exponent(s.D, s.M, k) == 0:
                continue
            for i in range(1, k + 1):
                lam, e = next(lam_iter)
                rows.append({"lambda": lam, "multiplicity": e, "class": by_k.get(k, []),
                             "root_index": i, "degree": k, "C": (lam - s.u[0]) / st})
    _emit({"D": s.D, "M": s.M, "N": s.N, "eigenvalues": rows}, args.out)


def cmd_charpoly(args, tols):
    s = _state(args.state, args)
    A = assemble_regularized_1d(s).data
    lams = args.lam
    if not lams:
        rng = np.random.default_rng(args.seed)
        lams = list(s.u[0] + sqrt(s.theta) * rng.uniform(-4, 4, size=20))
    rows, worst = [], 0.0
    for lam in lams:
        sg, ld = charpoly_logdet(A, lam)
        _, sg2, lp = char_poly(s.D, s.M, s.u[0], s.theta, lam)
        if sg == 0 or sg2 == 0:
            err = 0.0 if sg == sg2 else float("inf")
        else:
            err = abs(np.expm1(ld - lp)) if sg == sg2 else float("inf")
        worst = max(worst, err)
        rows.append({"lambda": lam, "numeric_log": ld, "analytic_log": lp,
                     "sign": [float(sg), float(sg2)], "rel_err": err})
    out = {"max_rel_err": worst, "tol": tols["charpoly"], "samples": rows}
    _emit(out, args.out)
    if worst > tols["charpoly"]:
        raise NumericFailure(f"characteristic polynomial mismatch {worst:.3e}")


def cmd_check_hyperbolic(args, tols):
    s = _state(args.state, args)
    if args.kind == "grad":
        A = assemble_grad_1d(s)
    elif args.direction is not None:
        A = assemble_directional(s, _direction(args.direction, s.D))
    else:
        A = assemble_regularized_1d(s)
    rep = hyperbolicity_report(A, tols["imag"], tols["cond"])
    out = dict(rep.to_json(), kind=args.kind)
    _emit(out, args.out)
    if not rep.hyperbolic:
        raise NumericFailure("matrix is not hyperbolic", out)


def _rotation_matrix(args, D):
    if args.matrix:
        return np.asarray(json.loads(args.matrix), dtype=float)
    if D == 2:
        return rotation_2d(np.deg2rad(args.angle))
    if D == 3:
        if args.axis is None:
            raise ValueError("D = 3 needs --axis or --matrix")
        return rotation_about_axis(args.axis, np.deg2rad(args.angle))
    return np.eye(1)


def cmd_rotate(args, tols):
    s = _state(args.state, args)
    G = _rotation_matrix(args, s.D)
    _emit(rotate_state(s, G).to_json(), args.out)


def cmd_rotate_check(args, tols):
    s = _state(args.state, args)
    if args.direction is None:
        raise ValueError("--direction is required")
    n = np.asarray(args.direction, dtype=float)
    n = n / np.linalg.norm(n)
    res = rotation_invariance_residual(s, n)
    out = {"direction": n.tolist(), "residual": res, "tol": tols["invariance"]}
    _emit(out, args.out)
    if res > tols["invariance"]:
        raise NumericFailure(f"invariance residual {res:.3e}")


def cmd_classify_field(args, tols):
    fld = make_field(args.D, args.M, args.cls, args.root)
    _emit(fld.to_json(), args.out)


def cmd_classify_wave(args, tols):
    wL, wR = _state(args.left, args), _state(args.right, args)
    if (wL.D, wL.M) != (wR.D, wR.M):
        raise ValueError("left and right states have different D or M")
    fld = make_field(wL.D, wL.M, args.cls, args.root)
    desc = classify_elementary_wave(wL, wR, fld, tols["wave"])
    _emit(desc.to_json(), args.out)


def cmd_curve(args, tols):
    s = _state(args.state, args)
    fld = make_field(s.D, s.M, args.cls, args.root)
    zs = np.linspace(0.0, args.zeta, args.points)
    rows = []
    for z in zs:
        row = {"zeta": float(z)}
        if fld.kind in ("v1", "v2ek"):
            row.update(rarefaction_curve_closed(s, fld.kind, fld.C, z, fld.axis or 2).to_json())
        if args.integrate:
            w = integral_curve(s, fld, float(z)) if z != 0 else s
            row["integrated"] = w.to_json()
        rows.append(row)
    _emit({"field": fld.to_json(), "points": rows}, args.out)


def cmd_shock(args, tols):
    wL = _state(args.left, args)
    fld = make_field(wL.D, wL.M, args.cls, args.root)
    if args.right:
        wR = _state(args.right, args)
        S = args.speed if args.speed is not None else shock_speed(wL, wR)
    else:
        wR, S = hugoniot_pair(wL, fld.C, args.eps, args.rho_ratio)
    rep = shock_residuals(wL, wR, S, fld)
    _emit({"speed": S, "right": wR.to_json(), "report": rep.to_json()}, args.out)


def cmd_simulate(args, tols):
    with open(args.config, encoding="utf-8") as fh:
        cfg = SimConfig.from_json(json.load(fh))
    res = simulate(cfg)
    if args.csv:
        res.write_csv(args.csv, args.keys or ())
    if args.ledger:
        res.write_ledger_csv(args.ledger)
    first, last = res.ledger[0], res.ledger[-1]
    drift = {k: abs(last[k] - first[k]) / max(1.0, abs(first[k])) for k in first}
    out = {"steps": res.steps, "t": res.times[-1], "conservation_drift": drift}
    if cfg.left is not None and cfg.right is not None and cfg.initial is None:
        lo, hi, dev = cone_leak(res, cfg.left, cfg.right, cfg.x_split)
        out["cone"] = {"lo": lo, "hi": hi, "max_change_outside": dev,
                       "signal_extent": list(signal_extent(res))}
    _emit(out, args.out)


def cmd_random_state(args, tols):
    s = random_state(args.D, args.M, args.seed, scale=args.scale)
    _emit(s.to_json(), args.out)


# parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hypermoment", description="Regularized moment system tools")
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--allow-large", action="store_true", help="lift the D <= 3, M <= 8 guard")
    p.add_argument("-v", "--verbose", action="store_true")
    # the shared options are also accepted after the subcommand
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", action="append", default=argparse.SUPPRESS, metavar="NAME=VALUE")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--allow-large", action="store_true", default=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        q = sub.add_parser(name, help=help_, parents=[common])
        q.set_defaults(fn=fn)
        q.add_argument("--out", default=None)
        return q

    q = add("assemble", cmd_assemble, "write a coefficient matrix")
    q.add_argument("--state", required=True)
    q.add_argument("--kind", choices=["grad", "regularized", "scaled", "directional"], default="regularized")
    q.add_argument("--direction", nargs="+", type=float, default=None)
    q.add_argument("--format", choices=["json", "csv"], default="json")

    q = add("spectrum", cmd_spectrum, "analytic eigenvalues")
    q.add_argument("--state", required=True)
    q.add_argument("--vectors", action="store_true")

    q = add("charpoly", cmd_charpoly, "compare det(lam I - A) with the Hermite product")
    q.add_argument("--state", required=True)
    q.add_argument("--lam", nargs="*", type=float, default=None)

    q = add("check-hyperbolic", cmd_check_hyperbolic, "numeric hyperbolicity verdict")
    q.add_argument("--state", required=True)
    q.add_argument("--kind", choices=["grad", "regularized"], default="regularized")
    q.add_argument("--direction", nargs="+", type=float, default=None)

    q = add("rotate", cmd_rotate, "rotate a state")
    q.add_argument("--state", required=True)
    q.add_argument("--angle", type=float, default=0.0, help="degrees")
    q.add_argument("--axis", nargs=3, type=float, default=None)
    q.add_argument("--matrix", default=None, help="rotation matrix as a JSON list of rows")

    q = add("rotate-check", cmd_rotate_check, "rotation invariance residual")
    q.add_argument("--state", required=True)
    q.add_argument("--direction", nargs="+", type=float, default=None)

    q = add("classify-field", cmd_classify_field, "GNL / LD nature of a field")
    q.add_argument("--D", type=int, required=True)
    q.add_argument("--M", type=int, required=True)
    q.add_argument("--class", dest="cls", type=int, required=True)
    q.add_argument("--root", type=int, required=True)

    q = add("classify-wave", cmd_classify_wave, "classify a jump between two states")
    q.add_argument("--left", required=True)
    q.add_argument("--right", required=True)
    q.add_argument("--class", dest="cls", type=int, default=1)
    q.add_argument("--root", type=int, required=True)

    q = add("curve", cmd_curve, "rarefaction curve samples")
    q.add_argument("--state", required=True)
    q.add_argument("--class", dest="cls", type=int, default=1)
    q.add_argument("--root", type=int, required=True)
    q.add_argument("--zeta", type=float, required=True)
    q.add_argument("--points", type=int, default=11)
    q.add_argument("--integrate", action="store_true", help="also integrate the ODE numerically")

    q = add("shock", cmd_shock, "Hugoniot pair or jump residuals")
    q.add_argument("--left", required=True)
    q.add_argument("--right", default=None)
    q.add_argument("--speed", type=float, default=None)
    q.add_argument("--class", dest="cls", type=int, default=1)
    q.add_argument("--root", type=int, required=True)
    q.add_argument("--eps", type=float, default=0.05)
    q.add_argument("--rho-ratio", type=float, default=1.01)

    q = add("simulate", cmd_simulate, "run the finite-volume solver")
    q.add_argument("--config", required=True)
    q.add_argument("--csv", default=None)
    q.add_argument("--ledger", default=None)
    q.add_argument("--keys", nargs="*", default=None)

    q = add("random-state", cmd_random_state, "random admissible state")
    q.add_argument("--D", type=int, required=True)
    q.add_argument("--M", type=int, required=True)
    q.add_argument("--scale", type=float, default=0.1)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        tols = tolerances(args.tol)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:          # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.fn(args, tols)
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SimulationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConstraintViolation, InadmissibleState, NotARotation, FieldMismatch, ix.UnsupportedOrder,
            ValueError, KeyError, TypeError, OSError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
