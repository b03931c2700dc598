"""Acceptance gate: one PASS/FAIL line per criterion, tolerances as pinned below.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in the terminal summary.
"""
import json
import math
import os
import random
import time
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

from cli_fixtures import FIXTURES
from conftest import ACCEPTANCE_LINES, kummer, lam_at, random_operator, random_product
from constants import GOLDEN_BRJUNO_40
from oracles import brute_hull
from test_cli import assert_matches
from qdiff import QContext
from qdiff.classify import QSystem, cyclic_vector, formal_isomorphic, rank1_module, restriction_of_scalars
from qdiff.cli import render, run_command
from qdiff.contfrac import brjuno, cf_expand, norm_z
from qdiff.diophantine import near_resonant_alpha
from qdiff.expr import BinOp, Neg, Num, Pow, Sym, parse_ast, to_text
from qdiff.factor import SmallDivisor, factor_full
from qdiff.newton import lattice_points, newton_polygon, poly_eval, slope_data
from qdiff.series import TruncatedPuiseuxSeries as S, kummer_check
from qdiff.skewop import twist_char, twist_theta

KUMMER_REL = 1e-10
KUMMER_ORDER = 128
KUMMER_SECONDS = 10
ROUND_TRIP_DEV = 1e-8
ROUND_TRIP_COUNT = 100
ROUND_TRIP_SECONDS = 300
HULL_COUNT = 200
TWIST_TOL = 1e-10
PQR_TOL = 1e-20
ROOT_TOL = 1e-20
BRJUNO_INCREMENT = 1e-8
BRJUNO_DEPTH = 40
BRJUNO_REGRESSION = 1e-6
LIOUVILLE_BOUND = 100
LIOUVILLE_DEPTH = 10
BRIDGING_SAMPLES = 1000
GAUGE_RESIDUAL = 1e-10
AST_COUNT = 500


def report(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_kummer_identity():
    pairs = [("golden", 0.31), ("golden", 0.77), ("golden", 0.123), ("sqrt2m1", 0.31), ("sqrt2m1", 0.6)]
    worst, slowest = 0.0, 0.0
    for omega, alpha in pairs:
        ctx = QContext(omega, 50)
        t0 = time.perf_counter()
        check = kummer_check(ctx, lam_at(ctx, alpha), KUMMER_ORDER)
        slowest = max(slowest, time.perf_counter() - t0)
        worst = max(worst, float(check.max_rel_dev))
    ok = worst <= KUMMER_REL and slowest < KUMMER_SECONDS
    report(1, ok, f"5 pairs to order {KUMMER_ORDER}, worst relative deviation {worst:.2e} "
                  f"(limit {KUMMER_REL:g}), slowest pair {slowest:.2f}s")


def test_criterion_2_round_trip():
    ctx = QContext("golden", 50, 64, 50)
    rng = random.Random(2024)
    t0 = time.perf_counter()
    worst, failures, runs = 0.0, [], 0
    for k in range(ROUND_TRIP_COUNT):
        op, _ = random_product(ctx, rng)
        n = len(newton_polygon(op).slopes)
        for perm in {tuple(range(n)), tuple(reversed(range(n)))}:
            runs += 1
            try:
                f = factor_full(op, perm)
            except ArithmeticError as exc:
                failures.append(f"#{k} {perm}: {exc}")
                continue
            worst = max(worst, float(f.residual_error))
            if f.residual_error > ROUND_TRIP_DEV:
                failures.append(f"#{k} {perm}: max_dev {float(f.residual_error):.2e}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < ROUND_TRIP_SECONDS
    report(2, ok, f"{ROUND_TRIP_COUNT} products, {runs} factorizations, worst max_dev {worst:.2e} "
                  f"(limit {ROUND_TRIP_DEV:g}), {len(failures)} failures, {elapsed:.1f}s"
                  + (f"; first: {failures[0]}" if failures else ""))


def test_criterion_3_newton_polygon():
    ctx = QContext()
    rng = random.Random(7)
    hull_ok = shift_ok = char_ok = True
    char_dev = 0.0
    checked_char = 0
    for _ in range(HULL_COUNT):
        op = random_operator(ctx, rng)
        poly = newton_polygon(op)
        hull_ok &= list(poly.vertices) == brute_hull(lattice_points(op))
        mu = rng.randint(-3, 3)
        shift_ok &= [(m - mu, r) for m, r in poly.slopes] == list(newton_polygon(twist_theta(op, mu)).slopes)
        c = ctx.mp.mpf(rng.uniform(0.5, 2)) * lam_at(ctx, rng.random())
        twisted = twist_char(op, c)
        char_ok &= newton_polygon(twisted).slopes == poly.slopes
        if any(m == 0 for m, _ in poly.slopes):
            before = slope_data(op, 0).exponents
            after = list(slope_data(twisted, 0).exponents)
            for e in before:
                j = min(range(len(after)), key=lambda i: abs(after[i] - c * e))
                char_dev = max(char_dev, float(abs(after[j] - c * e) / max(1, abs(c * e))))
                after.pop(j)
            checked_char += 1
    char_ok &= char_dev <= TWIST_TOL
    ok = hull_ok and shift_ok and char_ok and checked_char > 0
    report(3, ok, f"{HULL_COUNT} operators: hull exact {hull_ok}, twist_theta shift exact {shift_ok}, "
                  f"twist_char polygon kept and slope-0 exponents scaled ({checked_char} cases, "
                  f"worst {char_dev:.2e}, limit {TWIST_TOL:g})")


def test_criterion_4_half_slope_example():
    ctx = QContext()
    lam = lam_at(ctx, 0.31)
    res = cyclic_vector(restriction_of_scalars(ctx, 1, lam, 2), m=[1, 1])
    q, qh = ctx.q, ctx.qpow(1, 2)
    x = S.monomial(ctx, 1, 1)
    p = -lam ** 2 * (q * qh * x - 1)
    qq = lam * (q - 1) * x
    r = -qh * x * (qh * x - 1)
    b0, b1 = res.relation
    # P m + Q Sigma m = R Sigma^2 m, against Sigma^2 m = b0 m + b1 Sigma m
    dev = max(float(abs(c)) for d in (b0 * r - p, b1 * r - qq) for c in d.window(-1, 32))
    slopes = newton_polygon(res.op).x_slopes()
    ok = dev <= PQR_TOL and slopes == [(Fraction(1, 2), 2)]
    report(4, ok, f"P, Q, R deviation {dev:.2e} (limit {PQR_TOL:g}), polygon {[(str(m), r) for m, r in slopes]}")


def test_criterion_5_characteristic_roots():
    ctx = QContext(precision=50)
    worst_res, worst_match = 0.0, 0.0
    for alpha in (0.31, 0.123, 0.77):
        lam = lam_at(ctx, alpha)
        data = slope_data(kummer(ctx, lam), 0)
        for e in data.exponents:
            worst_res = max(worst_res, float(abs(poly_eval(data.char_poly, e))))
        exps = sorted(data.exponents, key=lambda e: float(abs(e - 1)))
        worst_match = max(worst_match, float(abs(exps[0] - 1)), float(abs(exps[1] - 1 / lam)))
    ok = worst_res <= ROOT_TOL and worst_match <= ROOT_TOL
    report(5, ok, f"exponents {{1, 1/lambda}}: residual {worst_res:.2e}, distance {worst_match:.2e} (limit {ROOT_TOL:g})")


def test_criterion_6_diophantine():
    ctx = QContext()
    mp = ctx.mp
    golden = brjuno(cf_expand("golden", 60), BRJUNO_DEPTH, mp)
    increment = float(golden.increments[-1])
    regression = abs(float(golden.value) - GOLDEN_BRJUNO_40)
    liouville = brjuno(cf_expand("liouville-demo", LIOUVILLE_DEPTH), LIOUVILLE_DEPTH, mp)
    rng = random.Random(6)
    alpha = mp.sqrt(3) - 1
    lam = mp.expjpi(2 * alpha)
    bridge = max(abs(ctx.qpow(n) * lam - 1) - 2 * mp.sin(mp.pi * norm_z(n * ctx.omega + alpha, mp))
                 for n in (rng.randint(0, 10 ** 6) for _ in range(BRIDGING_SAMPLES)))
    checks = {
        f"golden increment at depth {BRJUNO_DEPTH} {increment:.2e} < {BRJUNO_INCREMENT:g}": increment < BRJUNO_INCREMENT,
        f"regression {regression:.1e} <= {BRJUNO_REGRESSION:g}": regression <= BRJUNO_REGRESSION,
        f"Liouville sum {float(liouville.value):.3g} > {LIOUVILLE_BOUND} by depth {LIOUVILLE_DEPTH}":
            liouville.value > LIOUVILLE_BOUND,
        f"bridging identity over {BRIDGING_SAMPLES} n, worst {float(abs(bridge)):.1e}":
            abs(bridge) <= mp.mpf(10) ** -(ctx.precision - 8),
    }
    failed = [k for k, v in checks.items() if not v]
    detail = "; ".join(f"{'ok' if v else 'FAILED'} {k}" for k, v in checks.items())
    report(6, not failed, detail)


def test_criterion_7_isomorphism():
    ctx = QContext()
    lam = lam_at(ctx, 0.31)
    shift = formal_isomorphic(rank1_module(ctx, 0, lam), rank1_module(ctx, 0, ctx.q * lam)).verdict
    differ = formal_isomorphic(rank1_module(ctx, 0, lam), rank1_module(ctx, 1, lam)).verdict

    def diag(a, b):
        return QSystem(ctx, [[S.const(ctx, a), S.zero(ctx)], [S.zero(ctx), S.const(ctx, b)]])

    res = formal_isomorphic(diag(lam, ctx.q * lam), diag(lam, lam))
    residual = float(res.residual) if res.residual is not None else math.inf
    ok = shift == "iso" and differ == "not_iso" and res.verdict == "iso" and residual <= GAUGE_RESIDUAL
    report(7, ok, f"M(0,lam)~M(0,q lam): {shift}; M(0,lam)~M(1,lam): {differ}; "
                  f"diag(lam,q lam)~diag(lam,lam): {res.verdict}, conjugation residual {residual:.1e} "
                  f"(limit {GAUGE_RESIDUAL:g})")


def test_criterion_8_admissible_vs_adversarial():
    wide = QContext(trunc=256)
    f = factor_full(kummer(wide, lam_at(wide, 0.31)))
    rads = [e.y_radius for e in f.extractions if e.y_radius is not None]
    admissible_ok = f.passed and bool(rads) and all(r.trend == "stable" and r.estimate > 0 for r in rads)

    ctx = QContext(trunc=64)
    adversarial = kummer(ctx, ctx.mp.expjpi(2 * near_resonant_alpha(ctx, 58, ctx.mp.mpf("1e-30"))))
    try:
        factor_full(adversarial)
        abort = None
    except SmallDivisor as exc:
        abort = exc.n
    formal = factor_full(adversarial, mode="formal")
    formal_ok = bool(formal.residual_error <= ROUND_TRIP_DEV)

    far = kummer(wide, wide.mp.expjpi(2 * near_resonant_alpha(wide, 240, wide.mp.mpf("1e-30"))))
    trends = [e.y_radius.trend for e in factor_full(far, mode="formal").extractions if e.y_radius is not None]
    ok = admissible_ok and abort is not None and formal_ok and "shrinking" in trends
    report(8, ok, f"admissible: pass {f.passed}, h radii {[round(float(r.estimate), 4) for r in rads]}; "
                  f"adversarial: analytic abort at n={abort}, formal max_dev {float(formal.residual_error):.1e} "
                  f"(limit {ROUND_TRIP_DEV:g}), y radius trends at N=256 {trends}")


def _random_ast(rng, depth=0):
    if depth > 3 or rng.random() < 0.3:
        if rng.random() < 0.5:
            return Sym(rng.choice("qxS"))
        return Num(Decimal(rng.randint(0, 10 ** 5)) / 100, rng.random() < 0.3)
    kind = rng.randrange(3)
    if kind == 0:
        return Neg(_random_ast(rng, depth + 1))
    if kind == 1:
        return BinOp(rng.choice("+-*/"), _random_ast(rng, depth + 1), _random_ast(rng, depth + 1))
    return Pow(_random_ast(rng, depth + 1), Fraction(rng.randint(-4, 6), rng.randint(1, 3)))


def test_criterion_9_cli_contract():
    root = Path(__file__).parent.parent
    golden = Path(__file__).parent / "golden"
    here = os.getcwd()
    os.chdir(root)
    mismatched, bad_exit = [], []
    try:
        for name, argv, code in FIXTURES:
            rep, exit_code = run_command(argv)
            if exit_code != code:
                bad_exit.append(name)
            try:
                assert_matches(json.loads(render(rep)), json.loads((golden / f"{name}.json").read_text()))
            except AssertionError:
                mismatched.append(name)
    finally:
        os.chdir(here)
    rng = random.Random(9)
    trips = sum(parse_ast(to_text(a)) == a for a in (_random_ast(rng) for _ in range(AST_COUNT)))
    ok = not mismatched and not bad_exit and trips == AST_COUNT
    report(9, ok, f"{len(FIXTURES)} golden reports, {len(mismatched)} mismatched, {len(bad_exit)} wrong exit codes; "
                  f"print/parse round trip {trips}/{AST_COUNT}")
