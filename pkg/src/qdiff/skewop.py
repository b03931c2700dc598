"""q-difference operators sum_i a_i(t) sigma^i with sigma f = f(q_t t) sigma."""
from __future__ import annotations

from math import gcd

from .context import QContext
from .series import SeriesError, TruncatedPuiseuxSeries

# a_i -> a_i c^(TWIST_CHAR_SIGN * i) multiplies slope-0 exponents by c
TWIST_CHAR_SIGN = -1


class WindowExhausted(SeriesError):
    pass


def _lcm(a, b):
    return a * b // gcd(a, b)


class SkewOperator:
    """An element of C((x^(1/ram)))[sigma], coefficients listed from sigma^0 up."""

    __slots__ = ("ctx", "ram", "coeffs")

    def __init__(self, ctx: QContext, coeffs, ram: int | None = None):
        coeffs = [TruncatedPuiseuxSeries.const(ctx, c) if not isinstance(c, TruncatedPuiseuxSeries) else c
                  for c in coeffs]
        r = ram or 1
        for c in coeffs:
            r = _lcm(r, c.ram)
        coeffs = [c.lift(r) for c in coeffs]
        while coeffs and coeffs[-1].is_zero():
            coeffs.pop()
        self.ctx = ctx
        self.ram = r
        self.coeffs = tuple(coeffs)

    @classmethod
    def sigma_power(cls, ctx, k: int, ram: int = 1) -> "SkewOperator":
        z = TruncatedPuiseuxSeries.zero(ctx, ram)
        return cls(ctx, [z] * k + [TruncatedPuiseuxSeries.const(ctx, 1, ram)], ram)

    @classmethod
    def scalar(cls, ctx, s) -> "SkewOperator":
        if not isinstance(s, TruncatedPuiseuxSeries):
            s = TruncatedPuiseuxSeries.const(ctx, s)
        return cls(ctx, [s], s.ram)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def lift(self, ram: int) -> "SkewOperator":
        if ram == self.ram:
            return self
        return SkewOperator(self.ctx, [c.lift(ram) for c in self.coeffs], ram)

    def ords(self) -> list:
        """Valuations of the coefficients (None for zero ones), in t-units."""
        return [c.valuation() for c in self.coeffs]

    def leading(self) -> TruncatedPuiseuxSeries:
        return self.coeffs[-1]

    def __add__(self, other: "SkewOperator") -> "SkewOperator":
        r = _lcm(self.ram, other.ram)
        a, b = self.lift(r), other.lift(r)
        n = max(len(a.coeffs), len(b.coeffs))
        z = TruncatedPuiseuxSeries.zero(self.ctx, r)
        cs = [(a.coeffs[i] if i < len(a.coeffs) else z) + (b.coeffs[i] if i < len(b.coeffs) else z)
              for i in range(n)]
        return SkewOperator(self.ctx, cs, r)

    def __neg__(self) -> "SkewOperator":
        return SkewOperator(self.ctx, [-c for c in self.coeffs], self.ram)

    def __sub__(self, other: "SkewOperator") -> "SkewOperator":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, SkewOperator):
            return op_mul(self, other)
        return SkewOperator(self.ctx, [c * other for c in self.coeffs], self.ram)

    def left_mul(self, s: TruncatedPuiseuxSeries) -> "SkewOperator":
        """s * L for a scalar series s."""
        return SkewOperator(self.ctx, [s * c for c in self.coeffs], self.ram)

    def chop(self, tol=None) -> "SkewOperator":
        """Strip leading coefficient noise, judged against everything at or below the same exponent."""
        if not self.coeffs:
            return self
        tol = self.ctx.tol if tol is None else tol
        nonzero = [c for c in self.coeffs if c.coeffs]
        if not nonzero:
            return self
        lo = min(c.val for c in nonzero)
        hi = max(c.val + len(c.coeffs) for c in nonzero)
        prefix = []
        running = self.ctx.mp.mpf(0)
        for e in range(lo, hi):
            for c in nonzero:
                k = e - c.val
                if 0 <= k < len(c.coeffs):
                    m = abs(c.coeffs[k])
                    if m > running:
                        running = m
            prefix.append(running)
        out = []
        for c in self.coeffs:
            k = 0
            while k < len(c.coeffs) and abs(c.coeffs[k]) <= tol * prefix[c.val + k - lo]:
                k += 1
            out.append(c if k == 0 else TruncatedPuiseuxSeries(self.ctx, c.coeffs[k:], c.val + k, c.ram,
                                                               c.prec, _raw=True))
        return SkewOperator(self.ctx, out, self.ram)

    def scale(self):
        return max((c.scale() for c in self.coeffs), default=self.ctx.mp.mpf(0))

    def deviation(self, other: "SkewOperator"):
        """max |coefficient of self - other| / max(1, scale of other), on the common window."""
        r = _lcm(self.ram, other.ram)
        a, b = self.lift(r), other.lift(r)
        z = TruncatedPuiseuxSeries.zero(self.ctx, r)
        n = max(len(a.coeffs), len(b.coeffs))
        worst = self.ctx.mp.mpf(0)
        for i in range(n):
            x = a.coeffs[i] if i < len(a.coeffs) else z
            y = b.coeffs[i] if i < len(b.coeffs) else z
            worst = max(worst, x.distance(y))
        return worst / max(self.ctx.mp.mpf(1), other.scale())

    def __repr__(self) -> str:
        parts = [f"{c!r}*S^{i}" for i, c in enumerate(self.coeffs) if not c.is_zero()]
        return f"SkewOperator[ram={self.ram}](" + " + ".join(parts or ["0"]) + ")"

    def to_json(self) -> dict:
        return {"ram": self.ram, "order": self.order, "coeffs": [c.to_json() for c in self.coeffs]}


def op_mul(a: SkewOperator, b: SkewOperator) -> SkewOperator:
    """Composition a o b; the sigma^k coefficient is sum_{i+j=k} a_i sigma^i(b_j)."""
    if a.ctx is not b.ctx:
        raise ValueError("operators from different contexts")
    r = _lcm(a.ram, b.ram)
    a, b = a.lift(r), b.lift(r)
    if a.is_zero() or b.is_zero():
        return SkewOperator(a.ctx, [], r)
    out = [None] * (a.order + b.order + 1)
    for i, ai in enumerate(a.coeffs):
        if ai.is_zero() and ai.prec is None:
            continue
        for j, bj in enumerate(b.coeffs):
            term = ai * bj.sigma(i)
            out[i + j] = term if out[i + j] is None else out[i + j] + term
    z = TruncatedPuiseuxSeries.zero(a.ctx, r)
    return SkewOperator(a.ctx, [c if c is not None else z for c in out], r)


def op_apply(op: SkewOperator, y: TruncatedPuiseuxSeries) -> TruncatedPuiseuxSeries:
    """sum_i a_i(t) y(q_t^i t)."""
    r = _lcm(op.ram, y.ram)
    op, y = op.lift(r), y.lift(r)
    out = TruncatedPuiseuxSeries.zero(op.ctx, r)
    for i, a in enumerate(op.coeffs):
        out = out + a * y.sigma(i)
    return out


def right_divide(a: SkewOperator, b: SkewOperator) -> tuple[SkewOperator, SkewOperator]:
    """Q, R with A = Q o B + R and order R < order B, over the Laurent field."""
    if b.is_zero():
        raise ZeroDivisionError("division by the zero operator")
    ctx = a.ctx
    r = _lcm(a.ram, b.ram)
    a, b = a.lift(r), b.lift(r)
    rho = b.order
    z = TruncatedPuiseuxSeries.zero(ctx, r)
    if a.order < rho:
        return SkewOperator(ctx, [], r), a
    rem = list(a.coeffs)
    base = min((c.val for c in a.coeffs if c.coeffs), default=0)
    lead = b.coeffs[rho]
    quot = [z] * (a.order - rho + 1)
    for k in range(a.order - rho, -1, -1):
        top = rem[k + rho]
        if top.is_zero() and top.prec is None:
            continue
        qk = top * lead.sigma(k).inverse()
        if qk.prec is not None and qk.prec <= base:
            raise WindowExhausted(f"quotient coefficient {k} has no reliable terms")
        quot[k] = qk
        for j in range(rho):
            rem[k + j] = rem[k + j] - qk * b.coeffs[j].sigma(k)
        rem[k + rho] = TruncatedPuiseuxSeries.zero(ctx, r, top.prec)
    return SkewOperator(ctx, quot, r), SkewOperator(ctx, rem[:rho], r)


# -- error measurement ---------------------------------------------------

def _abs_series(s: TruncatedPuiseuxSeries) -> TruncatedPuiseuxSeries:
    return TruncatedPuiseuxSeries(s.ctx, [abs(c) for c in s.coeffs], s.val, s.ram, s.prec, _raw=True)


def majorant(op: SkewOperator) -> list:
    """Coefficient moduli, one series per power of sigma."""
    return [_abs_series(c) for c in op.coeffs]


def majorant_mul(a: list, b: list) -> list:
    """Bound on the terms summed by op_mul: sigma acts isometrically on moduli, so it drops out."""
    out = [None] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            t = x * y
            out[i + j] = t if out[i + j] is None else out[i + j] + t
    return out


def _coeff_or_zero(s, e):
    if s is None or (s.prec is not None and e >= s.prec):
        return 0
    return abs(s.coeff(e))


def relative_deviation(a: SkewOperator, b: SkewOperator, bound: list | None = None):
    """max |a_ie - b_ie| / max(1, |b_ie|, bound_ie) on the common windows.

    ``bound`` is a majorant of the terms that produced ``a``; with it, rounding
    in large cancelling terms is not mistaken for a wrong result.
    """
    ctx = a.ctx
    mp = ctx.mp
    r = _lcm(a.ram, b.ram)
    a, b = a.lift(r), b.lift(r)
    bound = [None if m is None else m.lift(r) for m in (bound or [])]
    z = TruncatedPuiseuxSeries.zero(ctx, r)
    worst = mp.mpf(0)
    for i in range(max(len(a.coeffs), len(b.coeffs))):
        x = a.coeffs[i] if i < len(a.coeffs) else z
        y = b.coeffs[i] if i < len(b.coeffs) else z
        if not (x.coeffs or y.coeffs):
            continue
        lo = min(s.val for s in (x, y) if s.coeffs)
        hi = max(s.val + len(s.coeffs) for s in (x, y))
        for p in (x.prec, y.prec):
            if p is not None:
                hi = min(hi, p)
        m = bound[i] if i < len(bound) else None
        for e in range(lo, hi):
            d = abs(x.coeff(e) - y.coeff(e))
            if d:
                worst = max(worst, d / max(mp.mpf(1), abs(y.coeff(e)), _coeff_or_zero(m, e)))
    return worst


def normalize(op: SkewOperator) -> SkewOperator:
    """Divide by the largest power of t common to all coefficients."""
    ords = [o for o in op.ords() if o is not None]
    if not ords:
        raise ValueError("normalize of the zero operator")
    m = min(ords)
    if m == 0:
        return op
    return SkewOperator(op.ctx, [c.shift(-m) for c in op.coeffs], op.ram)


def twist_theta(op: SkewOperator, mu: int) -> SkewOperator:
    """a_i -> a_i q_t^(-mu i(i+1)/2) t^(C - mu i) with the least C keeping every coefficient regular."""
    if int(mu) != mu:
        raise ValueError("twist_theta needs an integer slope; ramify first")
    mu = int(mu)
    ords = op.ords()
    c = max([0] + [mu * i - o for i, o in enumerate(ords) if o is not None])
    cs = []
    for i, a in enumerate(op.coeffs):
        f = op.ctx.qpow(-mu * i * (i + 1) // 2, op.ram)
        cs.append(a.shift(c - mu * i).scalar(f))
    return SkewOperator(op.ctx, cs, op.ram)


def twist_char(op: SkewOperator, c) -> SkewOperator:
    """Rescale sigma so that slope-0 exponents are multiplied by c."""
    c = op.ctx.mp.mpc(c)
    if not c:
        raise ValueError("twist by zero")
    return SkewOperator(op.ctx, [a.scalar(c ** (TWIST_CHAR_SIGN * i)) for i, a in enumerate(op.coeffs)], op.ram)


def ramify_op(op: SkewOperator, n: int) -> SkewOperator:
    """Rewrite over t = x^(1/(ram n)); slopes in the new variable are n times larger."""
    if n < 1:
        raise ValueError("n must be positive")
    return op.lift(op.ram * n)
