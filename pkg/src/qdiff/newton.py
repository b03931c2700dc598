"""Newton polygons, characteristic polynomials of slopes, and q^Z-class bookkeeping."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .context import QContext
from .skewop import SkewOperator, normalize, ramify_op, twist_theta


class RootFindingError(ArithmeticError):
    pass


class NotASlope(ValueError):
    pass


@dataclass(frozen=True)
class NewtonPolygon:
    """Slopes (in units of 1/ram) with horizontal lengths, increasing."""

    slopes: tuple[tuple[Fraction, int], ...]
    vertices: tuple[tuple[int, int], ...]
    ram: int = 1

    def x_slopes(self) -> list[tuple[Fraction, int]]:
        return [(mu / self.ram, r) for mu, r in self.slopes]

    @property
    def width(self) -> int:
        return sum(r for _, r in self.slopes)

    def shifted(self, mu) -> "NewtonPolygon":
        return NewtonPolygon(tuple((m - mu, r) for m, r in self.slopes),
                             tuple((i, o - mu * i) for i, o in self.vertices), self.ram)

    def to_json(self) -> dict:
        return {"ram": self.ram,
                "slopes": [{"mu": _frac_str(m), "r": r} for m, r in self.x_slopes()],
                "vertices": [[i, _frac_str(Fraction(o, self.ram))] for i, o in self.vertices]}


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def lower_hull(points) -> list[tuple[int, int]]:
    """Lower convex hull of lattice points sorted by abscissa, collinear points dropped."""
    pts = sorted(points)
    hull: list[tuple[int, int]] = []
    for p in pts:
        if hull and hull[-1][0] == p[0]:
            if hull[-1][1] <= p[1]:
                continue
            hull.pop()
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point unless it lies strictly below the chord
            if (y2 - y1) * (p[0] - x1) >= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    return hull


def lattice_points(op: SkewOperator) -> list[tuple[int, int]]:
    pts = []
    for i, c in enumerate(op.coeffs):
        if c.coeffs:
            pts.append((i, c.val))
        elif c.prec is not None:
            warnings.warn(f"coefficient of sigma^{i} vanishes on its whole window; treated as zero",
                          RuntimeWarning, stacklevel=3)
    return pts


def newton_polygon(op: SkewOperator) -> NewtonPolygon:
    pts = lattice_points(op)
    if not pts:
        raise ValueError("Newton polygon of the zero operator")
    hull = lower_hull(pts)
    slopes = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slopes.append((Fraction(y2 - y1, x2 - x1), x2 - x1))
    return NewtonPolygon(tuple(slopes), tuple(hull), op.ram)


# -- roots ---------------------------------------------------------------

def poly_eval(coeffs, z):
    out = 0
    for c in reversed(coeffs):
        out = out * z + c
    return out


def _derivative(coeffs, m=1):
    for _ in range(m):
        coeffs = [k * c for k, c in enumerate(coeffs)][1:]
    return coeffs


def poly_roots(ctx: QContext, coeffs) -> list[tuple[object, int]]:
    """Roots of sum c_k T^k with multiplicities; coefficient list low to high."""
    mp = ctx.mp
    coeffs = [mp.mpc(c) for c in coeffs]
    while coeffs and not coeffs[-1]:
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg < 1:
        return []
    if deg == 1:
        return [(-coeffs[0] / coeffs[1], 1)]
    lead = coeffs[-1]
    comp = mp.matrix(deg, deg)
    for k in range(1, deg):
        comp[k, k - 1] = 1
    for k in range(deg):
        comp[k, deg - 1] = -coeffs[k] / lead
    raw = list(mp.eig(comp, left=False, right=False))
    radius = mp.sqrt(ctx.tol)
    groups: list[list] = []
    for z in raw:
        for g in groups:
            if abs(z - g[0]) <= radius * max(1, abs(g[0])):
                g.append(z)
                break
        else:
            groups.append([z])
    out = []
    for g in groups:
        m = len(g)
        z = mp.fsum(g) / m
        target = _derivative(coeffs, m - 1)
        dtarget = _derivative(target)
        for _ in range(60):
            d = poly_eval(dtarget, z)
            if not d:
                break
            step = poly_eval(target, z) / d
            z -= step
            if abs(step) <= ctx.zero * max(1, abs(z)):
                break
        scale = mp.fsum(abs(c) * abs(z) ** k for k, c in enumerate(coeffs))
        if abs(poly_eval(coeffs, z)) > radius * scale:
            raise RootFindingError(f"root {mp.nstr(z, 10)} did not converge")
        out.append((z, m))
    return out


# -- slopes --------------------------------------------------------------

@dataclass
class SlopeData:
    """Exponents of one slope; they are relative to q^(1/ram) and listed with multiplicity."""

    mu: Fraction
    r: int
    char_poly: list
    exponents: list
    ram: int
    multiplicities: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"mu": _frac_str(self.mu / self.ram), "r": self.r, "ram": self.ram,
                "char_poly": [[float(c.real), float(c.imag)] for c in self.char_poly],
                "exponents": [[float(e.real), float(e.imag)] for e in self.exponents]}


def slope_data(op: SkewOperator, mu) -> SlopeData:
    """Characteristic polynomial and exponents of the slope ``mu`` (t-units of op)."""
    mu = Fraction(mu)
    poly = newton_polygon(op)
    if mu not in [m for m, _ in poly.slopes]:
        raise NotASlope(f"{mu} is not a slope of the operator")
    if mu.denominator != 1:
        d = mu.denominator
        data = slope_data(ramify_op(op, d), mu * d)
        return SlopeData(mu * d, data.r, data.char_poly, data.exponents, data.ram, data.multiplicities)
    m = int(mu)
    ctx = op.ctx
    tw = normalize(twist_theta(op, m))
    flat = newton_polygon(tw)
    start = None
    for (x1, y1), (x2, y2) in zip(flat.vertices, flat.vertices[1:]):
        if y1 == y2:
            start, end, height = x1, x2, y1
    cp = [tw.coeffs[i].coeff(height) if tw.coeffs[i].coeffs else ctx.mp.mpc(0)
          for i in range(start, end + 1)]
    roots = poly_roots(ctx, cp)
    shift = ctx.qpow(-m, op.ram)
    exps, mults = [], []
    for z, k in roots:
        exps.extend([z * shift] * k)
        mults.append(k)
    return SlopeData(mu, end - start, cp, exps, op.ram, mults)


def all_slope_data(op: SkewOperator) -> list[SlopeData]:
    return [slope_data(op, mu) for mu, _ in newton_polygon(op).slopes]


# -- q^Z classes ---------------------------------------------------------

@dataclass(frozen=True)
class QRelation:
    related: bool
    shift: int | None = None


def q_class(ctx: QContext, lam1, lam2, ram: int = 1, horizon: int | None = None, tol=None) -> QRelation:
    """Is lam2 = p^k lam1 with p = q^(1/ram) and |k| <= horizon?  Smallest |k| wins."""
    mp = ctx.mp
    horizon = ctx.horizon if horizon is None else horizon
    tol = ctx.tol if tol is None else tol
    ratio = mp.mpc(lam2) / mp.mpc(lam1)
    if abs(ratio - 1) <= tol:
        return QRelation(True, 0)
    for k in range(1, horizon + 1):
        for s in (k, -k):
            if abs(ratio - ctx.qpow(s, ram)) <= tol:
                return QRelation(True, s)
    return QRelation(False)


def q_chains(ctx: QContext, exps, ram: int = 1, horizon=None, tol=None) -> list[list[tuple[int, int]]]:
    """Partition indices into q^Z chains; each chain lists (index, shift against its first member)."""
    chains: list[list[tuple[int, int]]] = []
    for i, lam in enumerate(exps):
        for ch in chains:
            rel = q_class(ctx, exps[ch[0][0]], lam, ram, horizon, tol)
            if rel.related:
                ch.append((i, rel.shift))
                break
        else:
            chains.append([(i, 0)])
    return chains


def _sort_key(ctx, lam, index):
    a = float(ctx.mp.arg(lam))
    if a < -1e-12:
        a += 2 * math.pi
    return (round(float(abs(lam)), 12), round(max(a, 0.0), 12), index)


def order_exponents(ctx: QContext, exps, ram: int = 1, horizon=None) -> list:
    """Order so that lam_i / lam_j in p^{k>0} puts lam_i first; unrelated chains by modulus, argument, index."""
    exps = list(exps)
    chains = q_chains(ctx, exps, ram, horizon)
    ordered = []
    for ch in chains:
        members = sorted(ch, key=lambda t: (-t[1], _sort_key(ctx, exps[t[0]], t[0])))
        ordered.append(members)
    ordered.sort(key=lambda ms: _sort_key(ctx, exps[ms[0][0]], ms[0][0]))
    return [exps[i] for ms in ordered for i, _ in ms]


def check_nonresonant(ctx: QContext, exps, ram: int = 1, horizon=None) -> list[tuple[int, int, int]]:
    """Pairs (i, j, k) with lam_j / lam_i = p^k, k != 0, within the horizon."""
    out = []
    for i in range(len(exps)):
        for j in range(i + 1, len(exps)):
            rel = q_class(ctx, exps[i], exps[j], ram, horizon)
            if rel.related and rel.shift:
                out.append((i, j, rel.shift))
    return out
