"""Command line front end: one JSON report per invocation.

Exit codes: 0 success, 2 undecided (or a negative verdict the caller asked to confirm), 1 error.
"""
from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import sys
import warnings
from fractions import Fraction

from .classify import (CyclicSearchExhausted, QSystem, cyclic_vector, formal_isomorphic, graded_descriptor,
                       invariants, restriction_of_scalars)
from .context import QContext
from .contfrac import OmegaSpecError, PrecisionExhausted, brjuno, cf_expand, yoccoz_bound
from .diophantine import BRJUNO_DEPTH, admissibility
from .expr import EvaluationError, ParseError, evaluate, parse_ast, parse_operator
from .factor import FactorizationError, SmallDivisor, factor_full
from .newton import NewtonPolygon, all_slope_data, newton_polygon
from .series import SeriesError, TruncatedPuiseuxSeries, kummer_check, phi_series, radius_estimate

SCHEMA = "qdiff-report/1"
COMMANDS = ("newton", "exponents", "admissible", "factor", "classify", "iso", "kummer-verify",
            "phi-radius", "brjuno", "cyclic", "resn")


class UsageError(Exception):
    pass


class Undecided(Exception):
    """Raised by a command whose answer is evidence rather than a verdict."""

    def __init__(self, message: str, result=None, evidence=None):
        super().__init__(message)
        self.result = result
        self.evidence = evidence


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- input helpers -------------------------------------------------------

def _read_arg(text: str) -> str:
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            return fh.read().strip()
    return text


def _is_system(text: str) -> bool:
    return text.lstrip().startswith("[")


def _scalar_entry(text: str, ctx: QContext):
    op = evaluate(parse_ast(text), ctx)
    if op.order > 0:
        raise EvaluationError(f"system entries may not contain S: {text!r}")
    return op.coeffs[0] if op.coeffs else TruncatedPuiseuxSeries.zero(ctx, op.ram)


def parse_system(text: str, ctx: QContext) -> QSystem:
    """A JSON array of rows; each entry is an S-free expression string or a number."""
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed system literal: {exc.msg}", exc.pos) from exc
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError("a system literal is a list of rows", 0)
    return QSystem(ctx, [[_scalar_entry(str(e), ctx) for e in row] for row in rows])


def parse_input(text: str, ctx: QContext):
    text = _read_arg(text)
    return parse_system(text, ctx) if _is_system(text) else parse_operator(text, ctx)


def parse_constant(text: str, ctx: QContext):
    op = evaluate(parse_ast(text), ctx)
    if op.order > 0 or not op.coeffs:
        raise EvaluationError(f"expected a nonzero constant, got {text!r}")
    c = op.coeffs[0]
    if c.val != 0 or len(c.coeffs) != 1 or c.prec is not None:
        raise EvaluationError(f"expected a constant without x, got {text!r}")
    return c.coeffs[0]


def _lambda(args, ctx: QContext):
    if args.alpha is not None and args.lam is not None:
        raise UsageError("--alpha and --lambda are mutually exclusive")
    if args.alpha is not None:
        return ctx.mp.expjpi(2 * ctx.mp.mpf(args.alpha))
    if args.lam is not None:
        return parse_constant(args.lam, ctx)
    return None


def _operator(args, ctx):
    obj = parse_input(args.expr, ctx)
    if isinstance(obj, QSystem):
        return cyclic_vector(obj).op
    return obj


# -- JSON helpers --------------------------------------------------------

def _cplx(z) -> list:
    return [float(z.real), float(z.imag)]


def _polygon_json(poly: NewtonPolygon) -> dict:
    out = poly.to_json()
    out["slopes_exact"] = [[s["mu"], s["r"]] for s in out["slopes"]]
    out["slopes"] = [[int(mu) if mu.denominator == 1 else float(mu), r] for mu, r in poly.x_slopes()]
    return out


def _clean(obj):
    """Convert mpmath numbers and replace non-finite floats so the output stays strict JSON."""
    name = type(obj).__name__
    if name == "mpf":
        obj = float(obj)
    elif name == "mpc":
        return _clean(_cplx(obj))
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _default(o):
    if isinstance(o, Fraction):
        return str(o)
    if type(o).__name__ == "mpf":
        return float(o)
    if type(o).__name__ == "mpc":
        return _cplx(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# -- commands ------------------------------------------------------------

def cmd_newton(args, ctx):
    op = _operator(args, ctx)
    return {"order": op.order, "polygon": _polygon_json(newton_polygon(op))}, {}


def cmd_exponents(args, ctx):
    op = _operator(args, ctx)
    data = all_slope_data(op)
    return {"polygon": _polygon_json(newton_polygon(op)), "slopes": [d.to_json() for d in data]}, {}


def cmd_admissible(args, ctx):
    op = _operator(args, ctx)
    verdict = admissibility(op, n=args.N, brjuno_depth=args.depth or BRJUNO_DEPTH)
    result = {"status": verdict.status}
    evidence = verdict.to_json()
    if verdict.status != "admissible":
        raise Undecided(f"admissibility: {verdict.status}", result, evidence)
    return result, evidence


def _permutation(text):
    if text is None:
        return None
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--permutation expects a comma list of integers, got {text!r}") from exc


def cmd_factor(args, ctx):
    op = _operator(args, ctx)
    try:
        f = factor_full(op, _permutation(args.permutation), args.mode)
    except SmallDivisor as exc:
        raise Undecided(str(exc), {"status": "small_divisor"},
                        {"n": exc.n, "relative_divisor": float(exc.value), "floor": float(ctx.floor)}) from exc
    result = f.to_json()
    evidence = {"min_divisors": [{"value": float(e.min_divisor), "at": e.min_divisor_at}
                                 for e in f.extractions if e.min_divisor is not None]}
    if not f.passed:
        raise Undecided("re-multiplied factors deviate beyond tol", result, evidence)
    return result, evidence


def cmd_classify(args, ctx):
    obj = parse_input(args.expr, ctx)
    result = {}
    if isinstance(obj, QSystem) and obj.is_constant():
        desc = graded_descriptor(ctx, obj.constant_matrix(), n=args.N)
        result["graded"] = desc.to_json()
    op = cyclic_vector(obj).op if isinstance(obj, QSystem) else obj
    inv = invariants(op)
    result["invariants"] = inv.to_json()
    result["polygon"] = _polygon_json(inv.polygon)
    status = inv.admissibility.status if inv.admissibility else "undecided"
    result["admissibility"] = status
    if status == "undecided":
        raise Undecided("admissibility undecided", result, {})
    return result, {}


def cmd_iso(args, ctx):
    a = parse_input(args.expr, ctx)
    b = parse_input(args.other, ctx)
    res = formal_isomorphic(a, b)
    result = res.to_json()
    if res.verdict == "undecided":
        raise Undecided(res.reason, result, {})
    return result, {}


def cmd_kummer(args, ctx):
    lam = _lambda(args, ctx)
    if lam is None:
        raise UsageError("kummer-verify needs --alpha or --lambda")
    n = args.N or 128
    check = kummer_check(ctx, lam, n)
    result = check.to_json()
    result["pass"] = bool(check.max_rel_dev <= ctx.tol)
    if not result["pass"]:
        raise Undecided("Kummer coefficients disagree beyond tol", result, {})
    return result, {}


def cmd_phi_radius(args, ctx):
    lam = _lambda(args, ctx)
    lams = [ctx.q] if lam is None else [lam]
    n = args.N or 256
    rad = radius_estimate(phi_series(ctx, lams, n))
    return {"Lambda": [_cplx(l) for l in lams], "N": n, "radius": rad.to_json()}, {}


def cmd_brjuno(args, ctx):
    depth = args.depth or BRJUNO_DEPTH
    try:
        cf = cf_expand(ctx.omega_spec, depth)
    except PrecisionExhausted as exc:
        raise Undecided(str(exc), {"available_depth": exc.available}, {}) from exc
    est = brjuno(cf, depth, ctx.mp)
    result = {
        "depth": est.depth,
        "value": float(est.value),
        "partial_sums": [float(s) for s in est.partial_sums],
        "last_increment": float(est.increments[-1]),
        "converged": est.converged,
        "lower_bound": est.lower_bound,
        "threshold": est.threshold,
        "notes": est.notes,
    }
    if hasattr(cf, "quotients"):
        result["quotients"] = list(cf.quotients[: depth + 1])
    if not est.lower_bound:
        result["yoccoz_radius_bound"] = float(yoccoz_bound(est.value, 0, ctx.mp))
    if not est.converged and not est.lower_bound:
        raise Undecided("increments have not dropped below the threshold", result, {})
    return result, {}


def _resn_system(args, ctx):
    lam = _lambda(args, ctx)
    if lam is None or args.mu is None or args.n is None:
        raise UsageError("needs --mu, --n and one of --alpha / --lambda")
    return restriction_of_scalars(ctx, args.mu, lam, args.n)


def cmd_cyclic(args, ctx):
    if args.expr is not None:
        system = parse_input(args.expr, ctx)
        if not isinstance(system, QSystem):
            raise UsageError("cyclic expects a system literal")
    else:
        system = _resn_system(args, ctx)
    cv = cyclic_vector(system)
    result = cv.to_json()
    result["polygon"] = _polygon_json(newton_polygon(cv.op))
    return result, {}


def cmd_resn(args, ctx):
    system = _resn_system(args, ctx)
    cv = cyclic_vector(system)
    inv = invariants(cv.op)
    return {"system": system.to_json(), "cyclic": cv.to_json(), "polygon": _polygon_json(inv.polygon),
            "invariants": inv.to_json()}, {}


HANDLERS = {
    "newton": cmd_newton, "exponents": cmd_exponents, "admissible": cmd_admissible, "factor": cmd_factor,
    "classify": cmd_classify, "iso": cmd_iso, "kummer-verify": cmd_kummer, "phi-radius": cmd_phi_radius,
    "brjuno": cmd_brjuno, "cyclic": cmd_cyclic, "resn": cmd_resn,
}


# -- argument parsing ----------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--omega", default="golden")
    common.add_argument("--precision", type=int, default=50)
    common.add_argument("--trunc", type=int, default=64)
    common.add_argument("--horizon", type=int, default=50)
    common.add_argument("--tol", default=None)
    common.add_argument("--permutation", default=None)
    common.add_argument("--mode", choices=("analytic", "formal"), default="analytic")
    common.add_argument("--alpha", default=None)
    common.add_argument("--lambda", dest="lam", default=None)
    common.add_argument("--N", type=int, default=None)
    common.add_argument("--depth", type=int, default=None)
    common.add_argument("--mu", type=int, default=None)
    common.add_argument("--n", type=int, default=None)

    parser = _Parser(prog="qdiff", description="q-difference operator toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    positional = {"newton": 1, "exponents": 1, "admissible": 1, "factor": 1, "classify": 1, "iso": 2,
                  "cyclic": "?"}
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        arity = positional.get(name, 0)
        if arity == "?":
            p.add_argument("expr", nargs="?", default=None)
        elif arity >= 1:
            p.add_argument("expr")
            if arity == 2:
                p.add_argument("other")
    return parser


_FLAG_USE = {
    "permutation": {"factor"},
    "alpha": {"kummer-verify", "phi-radius", "cyclic", "resn"},
    "lam": {"kummer-verify", "phi-radius", "cyclic", "resn"},
    "N": {"admissible", "classify", "kummer-verify", "phi-radius"},
    "depth": {"admissible", "brjuno"},
    "mu": {"cyclic", "resn"},
    "n": {"cyclic", "resn"},
}


def _check_flags(args):
    for flag, allowed in _FLAG_USE.items():
        if getattr(args, flag) is not None and args.command not in allowed:
            name = "lambda" if flag == "lam" else flag
            raise UsageError(f"--{name} does not apply to {args.command}")
    if args.mode != "analytic" and args.command != "factor":
        raise UsageError(f"--mode does not apply to {args.command}")


def _context(args) -> QContext:
    return QContext(args.omega, args.precision, args.trunc, args.horizon, args.tol)


def run_command(argv) -> tuple[dict, int]:
    """Parse argv, run the command, and return (report, exit code)."""
    report = {"schema": SCHEMA, "command": None, "context": None, "input": {}, "status": "error",
              "exit_code": 1, "result": None, "evidence": {}, "warnings": []}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            args = build_parser().parse_args(argv)
            report["command"] = args.command
            report["input"] = {k: v for k, v in vars(args).items()
                               if k != "command" and v is not None}
            _check_flags(args)
            ctx = _context(args)
            report["context"] = ctx.describe()
            result, evidence = HANDLERS[args.command](args, ctx)
            report.update(status="ok", exit_code=0, result=result, evidence=evidence)
        except Undecided as exc:
            report.update(status="undecided", exit_code=2, result=exc.result, evidence=exc.evidence or {})
            report["reason"] = str(exc)
        except (UsageError, ParseError, EvaluationError, OmegaSpecError, FactorizationError, SeriesError,
                CyclicSearchExhausted, ArithmeticError, ValueError, OSError) as exc:
            err = {"type": type(exc).__name__, "message": str(exc)}
            if isinstance(exc, ParseError):
                err["position"] = exc.position
            report["error"] = err
        report["warnings"] = [str(w.message) for w in caught]
    return report, report["exit_code"]


def load_schema() -> dict:
    text = importlib.resources.files("qdiff").joinpath("schemas/qdiff-report-1.schema.json").read_text()
    return json.loads(text)


def render(report: dict) -> str:
    return json.dumps(_clean(report), default=_default, indent=2)


def main(argv=None) -> int:
    report, code = run_command(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(render(report) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
