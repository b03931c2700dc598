"""Analytic and formal factorization into rank-one factors (t^mu sigma - lambda) o h(t)."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from .newton import newton_polygon, order_exponents, q_class, slope_data
from .series import RadiusEstimate, SeriesError, TruncatedPuiseuxSeries, radius_estimate
from .skewop import SkewOperator, majorant, majorant_mul, op_mul, ramify_op, relative_deviation, right_divide


class FactorizationError(ArithmeticError):
    pass


class SmallDivisor(FactorizationError):
    def __init__(self, n: int, value):
        super().__init__(f"small divisor |F0(q^{n})| = {float(value):.3e} below the analytic floor")
        self.n = n
        self.value = value


class ResonanceError(FactorizationError):
    def __init__(self, n: int):
        super().__init__(f"F0(q^{n}) vanishes: resonance at n = {n}")
        self.n = n


class ConditionViolation(FactorizationError):
    def __init__(self, shift: int):
        super().__init__(f"q^{shift} lambda is also an exponent of this slope")
        self.shift = shift


class NotAnExponent(FactorizationError):
    pass


@dataclass
class RankOneFactor:
    """(t^mu sigma - lam) o h(t) with t = x^(1/ram) and h(0) = 1."""

    mu: int
    lam: object
    h: TruncatedPuiseuxSeries
    ram: int = 1

    @property
    def slope(self) -> Fraction:
        return Fraction(self.mu, self.ram)

    def operator(self) -> SkewOperator:
        ctx = self.h.ctx
        h = self.h.lift(self.ram)
        lead = h.sigma(1).shift(self.mu)
        return SkewOperator(ctx, [h.scalar(-self.lam), lead], self.ram)

    def to_json(self) -> dict:
        s = self.slope
        return {"mu": str(s), "ram": self.ram,
                "lambda": [float(self.lam.real), float(self.lam.imag)], "h": self.h.to_json()}


@dataclass
class Extraction:
    h: TruncatedPuiseuxSeries
    quotient: SkewOperator
    lam: object
    mu: int
    y_radius: RadiusEstimate | None
    min_divisor: object
    min_divisor_at: int
    remainder: object


@dataclass
class Factorization:
    factors: list
    unit: TruncatedPuiseuxSeries
    mode: str
    permutation: tuple
    ram: int = 1
    residual_error: object = None
    passed: bool | None = None
    extractions: list = field(default_factory=list)

    def product(self) -> SkewOperator:
        ctx = self.unit.ctx
        out = SkewOperator(ctx, [self.unit.lift(self.ram)], self.ram)
        for f in self.factors:
            out = op_mul(out, f.operator())
        return out

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "permutation": list(self.permutation),
            "ram": self.ram,
            "factors": [f.to_json() for f in self.factors],
            "unit": self.unit.to_json(),
            "max_dev": None if self.residual_error is None else float(self.residual_error),
            "pass": self.passed,
            "h_radii": [None if e.y_radius is None else e.y_radius.to_json() for e in self.extractions],
        }


def _reduced_coefficients(op: SkewOperator, mu: int, lam):
    """b_i = a_i lam^i p^(-mu i(i-1)/2) t^(-mu i), normalized to start at t^0."""
    ctx = op.ctx
    bs = []
    for i, a in enumerate(op.coeffs):
        f = ctx.mp.mpc(lam) ** i * ctx.qpow(-mu * i * (i - 1) // 2, op.ram)
        bs.append(a.shift(-mu * i).scalar(f))
    m = min(b.val for b in bs if b.coeffs)
    return [b.shift(-m) for b in bs]


def solve_recursion(op: SkewOperator, mu: int, lam, mode: str = "analytic", n: int | None = None):
    """y = 1 + sum y_n t^n from F0(p^n) y_n = -sum_{l>=1} F_l(p^(n-l)) y_(n-l)."""
    ctx = op.ctx
    mp = ctx.mp
    bs = _reduced_coefficients(op, mu, lam)
    window = n or ctx.trunc
    for b in bs:
        if b.prec is not None:
            window = min(window, b.prec)
    if window < 1:
        raise SeriesError("no reliable coefficients left for the recursion")
    rows = [b.window(0, window) for b in bs]
    f0 = [r[0] for r in rows]
    scale = mp.fsum(abs(c) for c in f0)
    if abs(mp.fsum(f0)) > mp.sqrt(ctx.tol) * scale:
        raise NotAnExponent("1 is not a root of the reduced characteristic polynomial")
    y = [mp.mpc(1)]
    # z[i][k] = p^(i k) y_k, the coefficients of sigma^i(y)
    z = [[mp.mpc(1)] for _ in bs]
    min_div, min_at = None, 0
    for k in range(1, window):
        d = mp.fsum(c * ctx.qpow(i * k, op.ram) for i, c in enumerate(f0))
        rel = abs(d) / scale
        if min_div is None or rel < min_div:
            min_div, min_at = rel, k
        if rel <= ctx.zero:
            raise ResonanceError(k)
        if mode == "analytic" and rel < ctx.floor:
            raise SmallDivisor(k, rel)
        s = mp.mpc(0)
        for i, row in enumerate(rows):
            s += mp.fdot(row[1:k + 1], z[i][::-1])
        yk = -s / d
        y.append(yk)
        for i in range(len(bs)):
            z[i].append(yk * ctx.qpow(i * k, op.ram))
    ys = TruncatedPuiseuxSeries(ctx, y, 0, op.ram, window, _raw=True)
    return ys, (min_div, min_at)


def _match_exponent(ctx, exps, lam):
    best = min(exps, key=lambda e: abs(e - lam))
    if abs(best - lam) > ctx.mp.sqrt(ctx.tol) * max(1, abs(lam)):
        raise NotAnExponent("lambda is not an exponent of the slope")
    return best


def extract_right_factor(op: SkewOperator, mu, lam, mode: str = "analytic") -> Extraction:
    """Split off (t^mu sigma - lam) o h on the right; mu in t-units of op."""
    ctx = op.ctx
    mu = Fraction(mu)
    if mu.denominator != 1:
        raise ValueError("extract_right_factor needs an integer slope; ramify first")
    mu = int(mu)
    data = slope_data(op, mu)
    lam = _match_exponent(ctx, data.exponents, ctx.mp.mpc(lam))
    for other in data.exponents:
        rel = q_class(ctx, lam, other, op.ram)
        if rel.related and rel.shift > 0:
            raise ConditionViolation(rel.shift)
    y, (min_div, min_at) = solve_recursion(op, mu, lam, mode)
    h = y.inverse()
    rank_one = RankOneFactor(mu, lam, h, op.ram)
    quotient, rem = right_divide(op, rank_one.operator())
    rem_scale = rem.scale()
    bound = max(op.scale(), quotient.scale() * rank_one.operator().scale())
    if rem_scale > ctx.mp.sqrt(ctx.tol) * bound:
        raise FactorizationError(f"right division left a remainder of size {float(rem_scale):.3e}")
    try:
        rad = radius_estimate(y)
    except SeriesError:
        rad = None
    return Extraction(h, quotient.chop(), lam, mu, rad, min_div, min_at, rem_scale)


def factor_slope(op: SkewOperator, mu, mode: str = "analytic") -> tuple[list[RankOneFactor], SkewOperator, list]:
    """Peel every factor of slope mu; returns factors leftmost first and the left cofactor."""
    ctx = op.ctx
    mu = int(Fraction(mu))
    exps = order_exponents(ctx, slope_data(op, mu).exponents, op.ram)
    factors, extractions = [], []
    cur = op
    for lam in exps:
        ex = extract_right_factor(cur, mu, lam, mode)
        factors.append(RankOneFactor(mu, ex.lam, ex.h, op.ram))
        extractions.append(ex)
        cur = ex.quotient
    factors.reverse()
    return factors, cur, extractions


def factor_full(op: SkewOperator, perm=None, mode: str = "analytic") -> Factorization:
    """Factor into pure pieces of slopes mu_perm(1), ..., mu_perm(k), left to right."""
    poly = newton_polygon(op)
    if any(mu.denominator != 1 for mu, _ in poly.slopes):
        return factor_ramified(op, perm, mode)
    k = len(poly.slopes)
    perm = tuple(range(k)) if perm is None else tuple(perm)
    if sorted(perm) != list(range(k)):
        raise ValueError(f"{perm} is not a permutation of {k} slopes")
    blocks, extractions = [], []
    cur = op
    for idx in reversed(perm):
        mu = poly.slopes[idx][0]
        fs, cur, ex = factor_slope(cur, mu, mode)
        blocks.insert(0, fs)
        extractions.extend(ex)
    if cur.order != 0:
        raise FactorizationError(f"left cofactor of order {cur.order} remains")
    unit = cur.coeffs[0]
    out = Factorization([f for b in blocks for f in b], unit, mode, perm, op.ram, extractions=extractions)
    check = verify_factorization(op, out)
    out.residual_error, out.passed = check["max_dev"], check["pass"]
    return out


def ramification_index(slopes) -> int:
    """Least n making every slope integral in x^(1/n)."""
    return lcm(*[Fraction(mu).denominator for mu in slopes]) if slopes else 1


def factor_ramified(op: SkewOperator, perm=None, mode: str = "analytic") -> Factorization:
    """Ramify by the lcm of slope denominators, then factor."""
    n = ramification_index([mu for mu, _ in newton_polygon(op).slopes])
    if n == 1:
        return factor_full(op, perm, mode)
    return factor_full(ramify_op(op, n), perm, mode)


def factor_majorant(f: Factorization) -> list:
    """Majorant of the terms summed when the factors are re-multiplied."""
    out = majorant(SkewOperator(f.unit.ctx, [f.unit.lift(f.ram)], f.ram))
    for fac in f.factors:
        out = majorant_mul(out, majorant(fac.operator()))
    return out


def verify_factorization(op: SkewOperator, f: Factorization, tol=None) -> dict:
    """Re-multiply and compare coefficientwise.

    Each coefficient of the difference is measured against max(1, majorant) at the same exponent,
    so rounding in large cancelling terms is not mistaken for a wrong factor.
    """
    ctx = op.ctx
    tol = ctx.tol if tol is None else tol
    prod = f.product()
    dev = relative_deviation(prod, op, factor_majorant(f))
    return {"max_dev": dev, "pass": bool(dev <= tol)}
