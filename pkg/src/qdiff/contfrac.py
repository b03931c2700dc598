"""Continued fractions of rotation numbers and their Brjuno sums.

A rotation number is described by an ``OmegaSpec``.  Quadratic irrationals
come from purely periodic expansions and are exact to any depth; decimal
inputs are only trusted to the digits given.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath


class OmegaSpecError(ValueError):
    pass


class PrecisionExhausted(ValueError):
    """The requested expansion depth exceeds what the input determines."""

    def __init__(self, available: int, requested: int):
        super().__init__(f"only {available} partial quotients are determined, {requested} requested")
        self.available = available
        self.requested = requested


PRESETS = {"golden": (1,), "sqrt2m1": (2,)}
LIOUVILLE_RATE = 16


@dataclass(frozen=True)
class OmegaSpec:
    """How a rotation number was given: ``periodic``, ``decimal``, ``rational`` or ``liouville``."""

    kind: str
    text: str
    period: tuple[int, ...] = ()
    decimal: str = ""
    rational: Fraction | None = None
    rate: int = LIOUVILLE_RATE

    def value(self, mp) -> mpmath.mpf:
        if self.kind == "periodic":
            return _periodic_value(self.period, mp)
        if self.kind == "decimal":
            return mp.mpf(self.decimal)
        if self.kind == "rational":
            return mp.mpf(self.rational.numerator) / self.rational.denominator
        return mp.mpf(1) / liouville_first_quotient(self.rate)

    def quotients(self, depth: int) -> list[int]:
        """Partial quotients a_0 .. a_depth, exact."""
        if self.kind == "periodic":
            return [0] + [self.period[k % len(self.period)] for k in range(depth)]
        if self.kind == "rational":
            return _rational_quotients(self.rational)[: depth + 1]
        if self.kind == "decimal":
            digits = _decimal_quotients(self.decimal)
            if len(digits) - 1 < depth:
                raise PrecisionExhausted(len(digits) - 1, depth)
            return digits[: depth + 1]
        if depth > 1:
            raise PrecisionExhausted(1, depth)
        return [0, liouville_first_quotient(self.rate)][: depth + 1]

    def __str__(self) -> str:
        return self.text


def parse_omega(text: str | OmegaSpec) -> OmegaSpec:
    """Parse ``golden``, ``sqrt2m1``, ``cf:[a1,...,ak]``, ``dec:<digits>``, ``rat:p/q`` or ``liouville-demo``."""
    if isinstance(text, OmegaSpec):
        return text
    s = text.strip()
    if s in PRESETS:
        return OmegaSpec("periodic", s, period=PRESETS[s])
    if s == "liouville-demo":
        return OmegaSpec("liouville", s)
    if s.startswith("cf:"):
        body = s[3:].strip()
        m = re.fullmatch(r"\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]", body)
        if not m:
            raise OmegaSpecError(f"bad continued fraction {body!r}")
        period = tuple(int(a) for a in m.group(1).split(","))
        if any(a < 1 for a in period):
            raise OmegaSpecError("partial quotients must be positive")
        return OmegaSpec("periodic", s, period=period)
    if s.startswith("rat:"):
        try:
            r = Fraction(s[4:])
        except (ValueError, ZeroDivisionError) as exc:
            raise OmegaSpecError(f"bad rational {s[4:]!r}") from exc
        if not 0 < r < 1:
            raise OmegaSpecError("omega must lie in (0, 1)")
        return OmegaSpec("rational", s, rational=r)
    body = s[4:] if s.startswith("dec:") else s
    if not re.fullmatch(r"0?\.\d+", body):
        raise OmegaSpecError(f"unrecognised omega {text!r}")
    if Fraction(body) == 0:
        raise OmegaSpecError("omega must lie in (0, 1)")
    return OmegaSpec("decimal", s, decimal=body)


def _periodic_value(period: Sequence[int], mp):
    # y = [a1; a2, ..., ak, y] solves qk y^2 + (q_{k-1} - pk) y - p_{k-1} = 0
    p0, p1, q0, q1 = 1, period[0], 0, 1
    for a in period[1:]:
        p0, p1 = p1, a * p1 + p0
        q0, q1 = q1, a * q1 + q0
    a, b, c = q1, q0 - p1, -p0
    y = (-b + mp.sqrt(mp.mpf(b * b - 4 * a * c))) / (2 * a)
    return 1 / y


def _rational_quotients(r: Fraction) -> list[int]:
    out = []
    while True:
        a = r.numerator // r.denominator
        out.append(a)
        r -= a
        if r == 0:
            return out
        r = 1 / r


def _decimal_quotients(text: str) -> list[int]:
    """Quotients shared by both ends of the half-ulp interval around the decimal."""
    d = Fraction(text)
    digits = len(text.split(".")[1])
    half = Fraction(1, 2 * 10**digits)
    lo, hi = _rational_quotients(d - half), _rational_quotients(d + half)
    out = []
    for a, b in zip(lo, hi):
        if a != b:
            break
        out.append(a)
    # the last shared quotient of two finite expansions may still be unstable
    if len(out) == min(len(lo), len(hi)):
        out = out[:-1]
    return out


def liouville_first_quotient(rate: int) -> int:
    return math.ceil(math.exp(rate))


@dataclass(frozen=True)
class ContinuedFraction:
    quotients: tuple[int, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]
    rational: bool = False
    source: str = ""

    @property
    def depth(self) -> int:
        return len(self.quotients) - 1


@dataclass(frozen=True)
class LiouvilleExpansion:
    """Synthetic quotients a_{n+1} = ceil(exp(rate * q_n)); only a_1 fits in memory.

    Denominators are tracked through log q_n; Brjuno terms tend to ``rate``
    and equal it to working precision once q_n is astronomically large.
    """

    rate: int
    depth: int
    source: str = "liouville-demo"

    def brjuno_terms(self, mp) -> list:
        c = mp.mpf(self.rate)
        a1 = liouville_first_quotient(self.rate)
        terms = [mp.log(a1)]
        q_prev, q_cur = mp.mpf(1), mp.mpf(a1)
        huge = False
        for _ in range(1, self.depth):
            if huge:
                terms.append(c)
                continue
            # log q_{n+1} = c q_n + log q_n + O(exp(-c q_n))
            log_next = c * q_cur + mp.log(q_cur) + mp.log1p(q_prev / (q_cur * mp.exp(c * q_cur)))
            terms.append(log_next / q_cur)
            if log_next > 10**7:
                huge = True
            else:
                q_prev, q_cur = q_cur, mp.exp(log_next)
        return terms


def cf_expand(omega: str | OmegaSpec | Fraction, depth: int) -> ContinuedFraction | LiouvilleExpansion:
    """Partial quotients and convergents p_n/q_n for n <= depth."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if isinstance(omega, Fraction):
        spec = OmegaSpec("rational", str(omega), rational=omega)
    else:
        spec = parse_omega(omega)
    if spec.kind == "liouville":
        return LiouvilleExpansion(spec.rate, depth)
    quotients = spec.quotients(depth)
    p, q = [], []
    pm, pmm, qm, qmm = 1, 0, 0, 1
    for a in quotients:
        pn, qn = a * pm + pmm, a * qm + qmm
        p.append(pn)
        q.append(qn)
        pmm, pm, qmm, qm = pm, pn, qm, qn
    rational = spec.kind == "rational" and len(quotients) <= depth
    return ContinuedFraction(tuple(quotients), tuple(p), tuple(q), rational, str(spec))


@dataclass
class BrjunoEstimate:
    partial_sums: list
    increments: list
    depth: int
    threshold: float
    converged: bool
    lower_bound: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def value(self):
        return self.partial_sums[-1]


def brjuno(cf, depth: int | None = None, mp=None, threshold: float = 1e-8) -> BrjunoEstimate:
    """Partial sums of sum_n log(q_{n+1}) / q_n for n < depth."""
    mp = mp or mpmath.mp
    depth = cf.depth if depth is None else depth
    if depth < 2:
        raise ValueError("depth must be at least 2")
    notes = []
    if isinstance(cf, LiouvilleExpansion):
        terms = LiouvilleExpansion(cf.rate, depth).brjuno_terms(mp)
        lower = True
        notes.append("synthetic Liouville quotients; sums are lower bounds of a divergent series")
    else:
        if depth > cf.depth:
            raise PrecisionExhausted(cf.depth, depth)
        terms = [mp.log(cf.q[n + 1]) / cf.q[n] for n in range(depth)]
        lower = False
        if cf.rational and depth >= cf.depth:
            notes.append("rational input")
    sums, s = [], mp.mpf(0)
    for t in terms:
        s += t
        sums.append(s)
    converged = not lower and terms[-1] < threshold
    return BrjunoEstimate(sums, terms, depth, threshold, converged, lower, notes)


def yoccoz_bound(b, c0=0, mp=None):
    """exp(-B - C0), the radius bound attached to a finite Brjuno sum."""
    mp = mp or mpmath.mp
    return mp.exp(-mp.mpf(b) - c0)


def norm_z(x, mp=None):
    """Distance from x to the nearest integer."""
    mp = mp or mpmath.mp
    x = mp.mpf(x)
    return abs(x - mp.floor(x + mp.mpf(1) / 2))
