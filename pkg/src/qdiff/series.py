"""Truncated Puiseux series in t = x^(1/ram) and the q-special series built from them."""
from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from numbers import Number

from .context import QContext

RAM_CAP = 720


class SeriesError(ArithmeticError):
    pass


class VanishingDenominator(SeriesError):
    def __init__(self, index: int, n: int):
        super().__init__(f"denominator vanishes for parameter {index} at n = {n}")
        self.index = index
        self.n = n


def _lcm(a: int, b: int) -> int:
    return a * b // gcd(a, b)


class TruncatedPuiseuxSeries:
    """sum_k coeffs[k] t^(val+k) with t = x^(1/ram), known exactly below t^prec.

    ``prec`` is absolute (in units of 1/ram); ``None`` marks an exact
    Laurent polynomial.  Coefficients past the stored tuple are zero.
    """

    __slots__ = ("ctx", "ram", "val", "coeffs", "prec")

    def __init__(self, ctx: QContext, coeffs=(), val: int = 0, ram: int = 1, prec: int | None = None,
                 _raw: bool = False):
        if ram < 1:
            raise ValueError("ram must be positive")
        if ram > RAM_CAP:
            raise SeriesError(f"ramification {ram} exceeds cap {RAM_CAP}")
        mpc = ctx.mp.mpc
        cs = list(coeffs) if _raw else [mpc(c) for c in coeffs]
        if prec is not None:
            del cs[max(prec - val, 0):]
        start = 0
        while start < len(cs) and not cs[start]:
            start += 1
        end = len(cs)
        while end > start and not cs[end - 1]:
            end -= 1
        self.ctx = ctx
        self.ram = ram
        if start == end:
            self.coeffs = ()
            self.val = prec if prec is not None else 0
        else:
            self.coeffs = tuple(cs[start:end])
            self.val = val + start
        self.prec = prec

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, ctx, c, ram=1):
        return cls(ctx, (c,), 0, ram)

    @classmethod
    def monomial(cls, ctx, c, e: int, ram=1):
        return cls(ctx, (c,), e, ram)

    @classmethod
    def zero(cls, ctx, ram=1, prec=None):
        return cls(ctx, (), 0, ram, prec)

    # -- inspection ----------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def exact(self) -> bool:
        return self.prec is None

    @property
    def trunc(self) -> int:
        """Number of reliable coefficients from the valuation on."""
        if self.prec is None:
            return len(self.coeffs)
        return self.prec - self.val

    def valuation(self):
        return None if not self.coeffs else self.val

    @property
    def leading(self):
        return self.coeffs[0] if self.coeffs else self.ctx.mp.mpc(0)

    def coeff(self, e: int):
        """Coefficient of t^e."""
        if self.prec is not None and e >= self.prec:
            raise SeriesError(f"t^{e} lies outside the known window (prec {self.prec})")
        k = e - self.val
        if 0 <= k < len(self.coeffs):
            return self.coeffs[k]
        return self.ctx.mp.mpc(0)

    def window(self, lo: int, hi: int) -> list:
        """Coefficients of t^lo .. t^(hi-1)."""
        z = self.ctx.mp.mpc(0)
        out = [z] * (hi - lo)
        for k, c in enumerate(self.coeffs):
            e = self.val + k
            if lo <= e < hi:
                out[e - lo] = c
        return out

    def scale(self):
        """Largest coefficient modulus."""
        return max((abs(c) for c in self.coeffs), default=self.ctx.mp.mpf(0))

    # -- ramification --------------------------------------------------
    def lift(self, ram: int) -> "TruncatedPuiseuxSeries":
        if ram == self.ram:
            return self
        if ram % self.ram:
            raise ValueError(f"cannot lift ram {self.ram} to {ram}")
        d = ram // self.ram
        z = self.ctx.mp.mpc(0)
        cs = []
        for c in self.coeffs:
            cs.append(c)
            cs.extend([z] * (d - 1))
        prec = None if self.prec is None else self.prec * d
        return TruncatedPuiseuxSeries(self.ctx, cs, self.val * d, ram, prec, _raw=True)

    def reduce_ram(self) -> "TruncatedPuiseuxSeries":
        """Express over the smallest ramification that holds every exponent."""
        g = self.ram
        for k, c in enumerate(self.coeffs):
            if c:
                g = gcd(g, self.val + k)
        if self.prec is not None:
            g = gcd(g, self.prec)
        if g <= 1:
            return self
        cs = self.coeffs[::g]
        prec = None if self.prec is None else self.prec // g
        return TruncatedPuiseuxSeries(self.ctx, cs, self.val // g, self.ram // g, prec, _raw=True)

    def truncate(self, prec: int) -> "TruncatedPuiseuxSeries":
        if self.prec is not None and self.prec <= prec:
            return self
        return TruncatedPuiseuxSeries(self.ctx, self.coeffs, self.val, self.ram, prec, _raw=True)

    def shift(self, k: int) -> "TruncatedPuiseuxSeries":
        """Multiply by t^k."""
        prec = None if self.prec is None else self.prec + k
        return TruncatedPuiseuxSeries(self.ctx, self.coeffs, self.val + k, self.ram, prec, _raw=True)

    def chop(self, scale=None, tol=None) -> "TruncatedPuiseuxSeries":
        """Drop leading coefficients that are negligible against ``scale``."""
        tol = self.ctx.tol if tol is None else tol
        scale = self.scale() if scale is None else scale
        k = 0
        while k < len(self.coeffs) and abs(self.coeffs[k]) <= tol * scale:
            k += 1
        if k == 0:
            return self
        return TruncatedPuiseuxSeries(self.ctx, self.coeffs[k:], self.val + k, self.ram, self.prec, _raw=True)

    # -- arithmetic ----------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, TruncatedPuiseuxSeries):
            if other.ctx is not self.ctx:
                raise ValueError("series from different contexts")
            return other
        if isinstance(other, Number) or type(other).__name__ in ("mpf", "mpc"):
            return TruncatedPuiseuxSeries.const(self.ctx, other, self.ram)
        return NotImplemented

    def _aligned(self, other):
        r = _lcm(self.ram, other.ram)
        return self.lift(r), other.lift(r), r

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, r = self._aligned(other)
        precs = [p for p in (a.prec, b.prec) if p is not None]
        prec = min(precs) if precs else None
        if not a.coeffs:
            return b.truncate(prec) if prec is not None else b.lift(r)
        if not b.coeffs:
            return a.truncate(prec) if prec is not None else a
        lo = min(a.val, b.val)
        hi = max(a.val + len(a.coeffs), b.val + len(b.coeffs))
        if prec is not None:
            hi = min(hi, prec)
        if hi <= lo:
            return TruncatedPuiseuxSeries(self.ctx, (), 0, r, prec)
        wa, wb = a.window(lo, hi), b.window(lo, hi)
        tol = self.ctx.tol
        cs = []
        cancelling = True
        for x, y in zip(wa, wb):
            s = x + y
            if cancelling and s:
                if abs(s) <= tol * (abs(x) + abs(y)):
                    s = s * 0
                else:
                    cancelling = False
            cs.append(s)
        return TruncatedPuiseuxSeries(self.ctx, cs, lo, r, prec, _raw=True)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedPuiseuxSeries(self.ctx, [-c for c in self.coeffs], self.val, self.ram, self.prec, _raw=True)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scalar(self, c) -> "TruncatedPuiseuxSeries":
        c = self.ctx.mp.mpc(c)
        return TruncatedPuiseuxSeries(self.ctx, [c * a for a in self.coeffs], self.val, self.ram, self.prec,
                                      _raw=True)

    def __mul__(self, other):
        if isinstance(other, Number) or type(other).__name__ in ("mpf", "mpc"):
            return self.scalar(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, r = self._aligned(other)
        if (not a.coeffs and a.prec is None) or (not b.coeffs and b.prec is None):
            return TruncatedPuiseuxSeries(self.ctx, (), 0, r)
        va, vb = a.val, b.val
        cands = []
        if a.prec is not None:
            cands.append(a.prec + (vb if b.coeffs else 0))
        if b.prec is not None:
            cands.append(b.prec + (va if a.coeffs else 0))
        prec = min(cands) if cands else None
        if not a.coeffs or not b.coeffs:
            return TruncatedPuiseuxSeries(self.ctx, (), 0, r, prec)
        n = len(a.coeffs) + len(b.coeffs) - 1
        if prec is not None:
            n = min(n, prec - va - vb)
        cs = convolve(self.ctx, a.coeffs, b.coeffs, n)
        return TruncatedPuiseuxSeries(self.ctx, cs, va + vb, r, prec, _raw=True)

    __rmul__ = __mul__

    def inverse(self, n: int | None = None) -> "TruncatedPuiseuxSeries":
        """Multiplicative inverse; keeps the relative window of a truncated input."""
        if not self.coeffs:
            raise SeriesError("inversion of the zero series")
        if self.prec is None and len(self.coeffs) == 1:
            return TruncatedPuiseuxSeries(self.ctx, (1 / self.coeffs[0],), -self.val, self.ram)
        if n is None:
            n = self.trunc if self.prec is not None else self.ctx.trunc
        cs = invert_coeffs(self.ctx, self.coeffs, n)
        return TruncatedPuiseuxSeries(self.ctx, cs, -self.val, self.ram, -self.val + n, _raw=True)

    def __truediv__(self, other):
        if isinstance(other, Number) or type(other).__name__ in ("mpf", "mpc"):
            return self.scalar(1 / self.ctx.mp.mpc(other))
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.inverse() ** (-k)
        out = TruncatedPuiseuxSeries.const(self.ctx, 1, self.ram)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- q-dilation ----------------------------------------------------
    def sigma(self, k: int = 1) -> "TruncatedPuiseuxSeries":
        """f(t) -> f(q_t^k t) with q_t the fixed branch q^(1/ram)."""
        if k == 0 or not self.coeffs:
            return self
        qp = self.ctx.qpow
        cs = [c * qp(k * (self.val + j), self.ram) for j, c in enumerate(self.coeffs)]
        return TruncatedPuiseuxSeries(self.ctx, cs, self.val, self.ram, self.prec, _raw=True)

    def __call__(self, point):
        """Partial sum at x = point (principal branch of x^(1/ram))."""
        mp = self.ctx.mp
        t = mp.root(mp.mpc(point), self.ram) if self.ram > 1 else mp.mpc(point)
        return sum((c * t ** (self.val + k) for k, c in enumerate(self.coeffs)), mp.mpc(0))

    # -- comparison ----------------------------------------------------
    def close_to(self, other, tol=None) -> bool:
        """Coefficientwise agreement within tol (relative to the larger scale) on the common window."""
        other = self._coerce(other)
        tol = self.ctx.tol if tol is None else tol
        diff = self - other
        if diff.is_zero():
            return True
        a, b, _ = self._aligned(other)
        scale = max(a.scale(), b.scale(), self.ctx.mp.mpf(1))
        return diff.scale() <= tol * scale

    def distance(self, other):
        """max |a_e - b_e| over the common window, without any cancellation snapping."""
        other = self._coerce(other)
        a, b, _ = self._aligned(other)
        lo = min(a.val if a.coeffs else b.val, b.val if b.coeffs else a.val)
        hi = max(a.val + len(a.coeffs), b.val + len(b.coeffs))
        for p in (a.prec, b.prec):
            if p is not None:
                hi = min(hi, p)
        if hi <= lo:
            return self.ctx.mp.mpf(0)
        return max(abs(x - y) for x, y in zip(a.window(lo, hi), b.window(lo, hi)))

    def __eq__(self, other):
        if not isinstance(other, (TruncatedPuiseuxSeries, Number)):
            return NotImplemented
        return self.close_to(other)

    __hash__ = None

    def __repr__(self) -> str:
        from mpmath import nstr
        terms = [f"({nstr(c, 8)})*t^{self.val + k}" for k, c in enumerate(self.coeffs[:6]) if c]
        tail = f" + O(t^{self.prec})" if self.prec is not None else ""
        return f"Series[ram={self.ram}](" + " + ".join(terms or ["0"]) + tail + ")"

    def to_json(self) -> dict:
        return {
            "ram": self.ram,
            "val": self.val,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
            "trunc": self.prec,
        }


Series = TruncatedPuiseuxSeries


def convolve(ctx, a, b, n):
    """First n coefficients of the product of coefficient lists a and b."""
    fdot = ctx.mp.fdot
    la, lb = len(a), len(b)
    out = []
    for k in range(n):
        lo, hi = max(0, k - lb + 1), min(k, la - 1)
        if lo > hi:
            out.append(ctx.mp.mpc(0))
        else:
            out.append(fdot(a[lo:hi + 1], b[k - hi:k - lo + 1][::-1]))
    return out


def invert_coeffs(ctx, a, n):
    """First n coefficients of 1/sum a_k t^k with a_0 != 0."""
    fdot = ctx.mp.fdot
    inv0 = 1 / a[0]
    out = [inv0]
    for k in range(1, n):
        m = min(k, len(a) - 1)
        s = fdot(a[1:m + 1], out[k - m:k][::-1])
        out.append(-s * inv0)
    return out


def series_arith(a, b, kind: str):
    """Dispatch on ``add``, ``mul``, ``invert_unit`` or ``scalar`` (b a number)."""
    if kind == "add":
        return a + b
    if kind == "mul":
        return a * b
    if kind == "invert_unit":
        return a.inverse()
    if kind == "scalar":
        return a.scalar(b)
    raise ValueError(f"unknown kind {kind!r}")


def dilate(s: TruncatedPuiseuxSeries, c) -> TruncatedPuiseuxSeries:
    """f(x) -> f(c x); for ram > 1 the principal root of c is used."""
    mp = s.ctx.mp
    c = mp.mpc(c)
    if not c:
        raise ValueError("dilation by zero")
    root = c if s.ram == 1 else mp.root(c, s.ram)
    cs = [a * root ** (s.val + k) for k, a in enumerate(s.coeffs)]
    return TruncatedPuiseuxSeries(s.ctx, cs, s.val, s.ram, s.prec, _raw=True)


def sigma(s: TruncatedPuiseuxSeries, k: int = 1) -> TruncatedPuiseuxSeries:
    return s.sigma(k)


# -- q-special series ------------------------------------------------------

def q_pochhammer(ctx: QContext, lam, n: int):
    """(lam; q)_n."""
    mp = ctx.mp
    out = mp.mpc(1)
    lam = mp.mpc(lam)
    for j in range(n):
        out *= 1 - ctx.qpow(j) * lam
    return out


def q_integer(ctx: QContext, n: int):
    """[n]_q = 1 + q + ... + q^(n-1), with [0]_q = 1."""
    if n == 0:
        return ctx.mp.mpc(1)
    return ctx.mp.fsum(ctx.qpow(j) for j in range(n))


def q_factorials(ctx: QContext, n: int) -> list:
    """[0]_q!, ..., [n-1]_q!."""
    out, f = [], ctx.mp.mpc(1)
    for k in range(n):
        if k:
            f *= q_integer(ctx, k)
        out.append(f)
    return out


def _check_lambda(ctx, lam, n, index=0, start=0):
    for j in range(start, n):
        if abs(1 - ctx.qpow(j) * lam) <= ctx.zero:
            raise VanishingDenominator(index, j)


def phi_series(ctx: QContext, lambdas, n: int, root: int = 1) -> TruncatedPuiseuxSeries:
    """sum_k x^k / prod_i (lam_i; p)_k with p = q^(1/root); n coefficients."""
    mp = ctx.mp
    lambdas = [mp.mpc(l) for l in lambdas]
    for i, lam in enumerate(lambdas):
        for j in range(n - 1):
            if abs(1 - ctx.qpow(j, root) * lam) <= ctx.zero:
                raise VanishingDenominator(i, j + 1)
    cs, c = [], mp.mpc(1)
    for k in range(n):
        cs.append(c)
        d = mp.mpc(1)
        for lam in lambdas:
            d *= 1 - ctx.qpow(k, root) * lam
        c = c / d
    return TruncatedPuiseuxSeries(ctx, cs, 0, 1, n, _raw=True)


def special_series(ctx: QContext, kind: str, n: int, lam=None) -> TruncatedPuiseuxSeries:
    """``e_q``, ``E_q``, ``g_lambda`` (needs lam) or ``phi`` (lam is the parameter list)."""
    mp = ctx.mp
    if kind == "phi":
        return phi_series(ctx, lam or [], n)
    facts = q_factorials(ctx, n)
    if kind == "e_q":
        cs = [1 / f for f in facts]
    elif kind == "E_q":
        cs = [ctx.qpow(k * (k + 1) // 2) / f for k, f in enumerate(facts)]
    elif kind == "g_lambda":
        if lam is None:
            raise ValueError("g_lambda needs a parameter")
        lam = mp.mpc(lam)
        _check_lambda(ctx, lam, n)
        cs = [(-1) ** k * ctx.qpow(k * (k + 1) // 2) / (f * (1 - ctx.qpow(k) * lam))
              for k, f in enumerate(facts)]
    else:
        raise ValueError(f"unknown special series {kind!r}")
    return TruncatedPuiseuxSeries(ctx, cs, 0, 1, n, _raw=True)


@dataclass
class KummerCheck:
    lam: object
    n: int
    max_rel_dev: object
    worst_at: int

    def to_json(self) -> dict:
        return {"lambda": [float(self.lam.real), float(self.lam.imag)], "N": self.n,
                "max_rel_dev": float(self.max_rel_dev), "worst_at": self.worst_at}


def kummer_check(ctx: QContext, lam, n: int) -> KummerCheck:
    """Compare phi_(q; q lam)((1 - q) t) with (1 - lam) e_q(t) g_lam(t) coefficientwise."""
    mp = ctx.mp
    lam = mp.mpc(lam)
    left = dilate(phi_series(ctx, [ctx.q * lam], n), 1 - ctx.q)
    right = (special_series(ctx, "e_q", n) * special_series(ctx, "g_lambda", n, lam)).scalar(1 - lam)
    worst, at = mp.mpf(0), 0
    for k in range(n):
        a, b = left.coeff(k), right.coeff(k)
        size = max(abs(a), abs(b))
        dev = abs(a - b) / size if size else mp.mpf(0)
        if dev > worst:
            worst, at = dev, k
    return KummerCheck(lam, n, worst, at)


@dataclass
class RadiusEstimate:
    estimate: object
    trend: str
    samples: list
    window: int

    def to_json(self) -> dict:
        return {
            "estimate": float(self.estimate),
            "trend": self.trend,
            "window": self.window,
            "samples": [[n, float(r)] for n, r in self.samples],
        }


STABLE_SPREAD = 0.1
RADIUS_FLOOR = 1e-6


def radius_estimate(s: TruncatedPuiseuxSeries, window: int | None = None) -> RadiusEstimate:
    """Root test over the last ``window`` coefficients: min_n |c_n|^(-1/n), in t-units."""
    mp = s.ctx.mp
    hi = s.prec if s.prec is not None else s.val + len(s.coeffs)
    if window is None:
        window = max((hi - max(s.val, 0)) // 4, 1)
    lo = max(hi - window, 1)
    samples = []
    for e in range(lo, hi):
        c = s.coeff(e)
        if c:
            samples.append((e, mp.exp(-mp.log(abs(c)) / e)))
    if not samples:
        raise SeriesError("all-zero tail")
    rhos = [r for _, r in samples]
    est = min(rhos)
    big = max(rhos)
    if (big - est) / big < STABLE_SPREAD and est >= RADIUS_FLOOR:
        trend = "stable"
    else:
        h = len(rhos) // 2
        first = mp.fsum(rhos[:h]) / max(h, 1) if h else rhos[0]
        second = mp.fsum(rhos[h:]) / len(rhos[h:])
        trend = "shrinking" if second < first or est < RADIUS_FLOOR else "growing"
    return RadiusEstimate(est, trend, samples, window)
