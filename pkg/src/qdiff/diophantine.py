"""Small divisors 1 - q^n lambda and the three-valued admissibility verdict."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .context import QContext
from .contfrac import (BrjunoEstimate, ContinuedFraction, LiouvilleExpansion, OmegaSpecError,
                       PrecisionExhausted, brjuno, cf_expand, norm_z, parse_omega, yoccoz_bound)
from .newton import newton_polygon, q_class, slope_data
from .series import (RADIUS_FLOOR, RadiusEstimate, TruncatedPuiseuxSeries, VanishingDenominator,
                     phi_series, radius_estimate)
from .skewop import SkewOperator

__all__ = [
    "AdmissibilityVerdict", "BrjunoEstimate", "ContinuedFraction", "LiouvilleExpansion", "OmegaSpecError",
    "PrecisionExhausted", "SlopeEvidence", "SmallDivisorProfile", "admissibility", "brjuno",
    "brjuno_evidence", "cf_expand", "near_resonant_alpha", "norm_z", "parse_omega",
    "small_divisor_profile", "yoccoz_bound",
]

ADMISSIBILITY_WINDOW = 256
BRJUNO_DEPTH = 60
# partial sums beyond this are read as divergence
BRJUNO_DIVERGENT = 100


class Resonance(ArithmeticError):
    def __init__(self, n: int):
        super().__init__(f"1 - q^n lambda vanishes at n = {n}")
        self.n = n


def inverse_divisor_series(ctx: QContext, lam, n: int, root: int = 1) -> TruncatedPuiseuxSeries:
    """sum_k x^k / (1 - p^k lam) with p = q^(1/root)."""
    mp = ctx.mp
    lam = mp.mpc(lam)
    cs = []
    for k in range(n):
        d = 1 - ctx.qpow(k, root) * lam
        if abs(d) <= ctx.zero:
            raise Resonance(k)
        cs.append(1 / d)
    return TruncatedPuiseuxSeries(ctx, cs, 0, 1, n, _raw=True)


@dataclass
class SmallDivisorProfile:
    alpha: object
    n: int
    min_nth_root: object
    argmin: int
    limsup_proxy: object
    series_radius: RadiusEstimate
    bridging_error: object

    def to_json(self) -> dict:
        return {
            "alpha": float(self.alpha), "N": self.n,
            "min_nth_root": float(self.min_nth_root), "argmin": self.argmin,
            "limsup_proxy": float(self.limsup_proxy),
            "series_radius": self.series_radius.to_json(),
            "bridging_error": float(self.bridging_error),
        }


def small_divisor_profile(ctx: QContext, alpha, n: int) -> SmallDivisorProfile:
    """||k omega + alpha||_Z for k <= n against the series sum x^k / (1 - q^k lambda)."""
    mp = ctx.mp
    alpha = mp.mpf(alpha)
    lam = mp.expjpi(2 * alpha)
    best, arg, limsup, bridge = None, 0, mp.mpf(0), mp.mpf(0)
    for k in range(n):
        d = norm_z(k * ctx.omega + alpha, mp)
        gap = abs(ctx.qpow(k) * lam - 1)
        if gap <= ctx.zero:
            raise Resonance(k)
        bridge = max(bridge, abs(gap - 2 * mp.sin(mp.pi * d)))
        if k >= 1:
            r = d ** (mp.mpf(1) / k)
            if best is None or r < best:
                best, arg = r, k
            limsup = max(limsup, -mp.log(gap) / k)
    rad = radius_estimate(inverse_divisor_series(ctx, lam, n))
    return SmallDivisorProfile(alpha, n, best, arg, limsup, rad, bridge)


def near_resonant_alpha(ctx: QContext, n: int, gap) -> object:
    """alpha in (0, 1) with ||n omega + alpha||_Z = gap, so |1 - q^n lambda| = 2 sin(pi gap)."""
    mp = ctx.mp
    a = -n * ctx.omega + mp.mpf(gap)
    return a - mp.floor(a)


# -- admissibility -------------------------------------------------------

@dataclass
class SeriesEvidence:
    name: str
    radius: RadiusEstimate | None
    status: str
    note: str = ""

    def to_json(self) -> dict:
        out = {"series": self.name, "status": self.status}
        if self.radius is not None:
            out["radius"] = self.radius.to_json()
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class SlopeEvidence:
    mu: Fraction
    ram: int
    exponents: list
    lambdas: list
    excluded: list
    series: list
    status: str

    def to_json(self) -> dict:
        return {
            "mu": str(self.mu), "ram": self.ram, "status": self.status,
            "exponents": [[float(e.real), float(e.imag)] for e in self.exponents],
            "Lambda": [[float(l.real), float(l.imag)] for l in self.lambdas],
            "excluded": [{"i": i, "j": j, "shift": k} for i, j, k in self.excluded],
            "series": [s.to_json() for s in self.series],
        }


@dataclass
class AdmissibilityVerdict:
    status: str
    slopes: list
    brjuno: dict
    horizon: int
    tol: object
    window: int
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "status": self.status, "horizon": self.horizon, "tol": float(self.tol), "N": self.window,
            "brjuno": self.brjuno, "slopes": [s.to_json() for s in self.slopes], "notes": self.notes,
        }


def brjuno_evidence(ctx: QContext, depth: int = BRJUNO_DEPTH) -> dict:
    spec = ctx.omega_spec
    try:
        cf = cf_expand(spec, depth)
    except PrecisionExhausted as exc:
        depth = exc.available
        if depth < 2:
            return {"status": "inconclusive", "depth": depth, "note": "too few partial quotients"}
        cf = cf_expand(spec, depth)
    if isinstance(cf, ContinuedFraction) and cf.rational:
        return {"status": "inconclusive", "depth": cf.depth, "note": "rational input"}
    depth = min(depth, cf.depth) if isinstance(cf, ContinuedFraction) else depth
    if depth < 2:
        return {"status": "inconclusive", "depth": depth, "note": "too few partial quotients"}
    est = brjuno(cf, depth, ctx.mp)
    value = est.value
    if value > BRJUNO_DIVERGENT:
        status = "divergent"
    elif est.converged:
        status = "convergent"
    else:
        status = "inconclusive"
    return {"status": status, "depth": depth, "partial_sum": float(value),
            "last_increment": float(est.increments[-1]), "lower_bound": est.lower_bound}


def _series_status(rad: RadiusEstimate) -> str:
    if rad.trend in ("stable", "growing") and rad.estimate >= RADIUS_FLOOR:
        return "stable"
    if rad.trend == "shrinking" and rad.estimate < RADIUS_FLOOR:
        return "divergent"
    return "unclear"


def lambda_set(ctx: QContext, exps, ram: int = 1, horizon=None):
    """Ratios lam_i / lam_j outside p^{k <= 0}; also the excluded (i, j, k)."""
    mp = ctx.mp
    lams, excluded = [], []
    for i, a in enumerate(exps):
        for j, b in enumerate(exps):
            if i == j:
                continue
            ratio = mp.mpc(a) / b
            rel = q_class(ctx, 1, ratio, ram, horizon)
            if rel.related and rel.shift <= 0:
                excluded.append((i, j, rel.shift))
                continue
            if any(abs(ratio - l) <= ctx.tol * abs(l) for l in lams):
                continue
            lams.append(ratio)
    return lams, excluded


def slope_verdict(ctx: QContext, exps, ram: int, n: int, horizon=None) -> tuple[str, list, list, list]:
    """Evidence for one slope given its exponents relative to q^(1/ram)."""
    lams, excluded = lambda_set(ctx, exps, ram, horizon)
    evidence = []
    tests = [("phi(Lambda)", lambda: phi_series(ctx, lams, n, ram)),
             ("1/(p;p)_n", lambda: phi_series(ctx, [ctx.qpow(1, ram)], n, ram))]
    for k, lam in enumerate(lams):
        tests.append((f"1/(1-p^n Lambda[{k}])", lambda lam=lam: inverse_divisor_series(ctx, lam, n, ram)))
    for name, build in tests:
        try:
            s = build()
        except (VanishingDenominator, Resonance) as exc:
            evidence.append(SeriesEvidence(name, None, "resonant", str(exc)))
            continue
        rad = radius_estimate(s)
        evidence.append(SeriesEvidence(name, rad, _series_status(rad)))
    return lams, excluded, evidence


def admissibility(op: SkewOperator, n: int | None = None, brjuno_depth: int = BRJUNO_DEPTH) -> AdmissibilityVerdict:
    """admissible / not_admissible / undecided, with the evidence behind it."""
    ctx = op.ctx
    n = n or max(ADMISSIBILITY_WINDOW, ctx.trunc)
    poly = newton_polygon(op)
    slopes = []
    bj = brjuno_evidence(ctx, brjuno_depth)
    for mu, _ in poly.slopes:
        data = slope_data(op, mu)
        lams, excluded, evidence = slope_verdict(ctx, data.exponents, data.ram, n)
        states = {e.status for e in evidence}
        if "divergent" in states:
            status = "not_admissible"
        elif states <= {"stable"}:
            status = "admissible"
        else:
            status = "undecided"
        slopes.append(SlopeEvidence(Fraction(mu, op.ram), data.ram, data.exponents, lams, excluded,
                                    evidence, status))
    statuses = {s.status for s in slopes}
    notes = []
    if bj["status"] == "divergent" or "not_admissible" in statuses:
        status = "not_admissible"
    elif statuses == {"admissible"}:
        status = "admissible"
    else:
        status = "undecided"
    if bj["status"] == "divergent":
        notes.append("Brjuno partial sums diverge at the tested depth")
    return AdmissibilityVerdict(status, slopes, bj, ctx.horizon, ctx.tol, n, notes)
