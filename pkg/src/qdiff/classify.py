"""q-difference modules: systems, cyclic vectors, invariants, formal isomorphism, graded descriptors."""
from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd

from .context import QContext
from .diophantine import AdmissibilityVerdict, admissibility, slope_verdict
from .newton import NewtonPolygon, newton_polygon, q_chains, q_class, slope_data
from .series import SeriesError, TruncatedPuiseuxSeries
from .skewop import SkewOperator

Series = TruncatedPuiseuxSeries
CYCLIC_BUDGET = 24


class CyclicSearchExhausted(ArithmeticError):
    def __init__(self, tried):
        super().__init__(f"no cyclic vector among {len(tried)} candidates")
        self.tried = tried


# -- systems -------------------------------------------------------------

class QSystem:
    """Sigma(e) = e B(x): column j of B holds the coordinates of Sigma(e_j)."""

    __slots__ = ("ctx", "ram", "matrix")

    def __init__(self, ctx: QContext, matrix, ram: int = 1):
        rows = [[e if isinstance(e, Series) else Series.const(ctx, e) for e in row] for row in matrix]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("system matrix must be square and non-empty")
        r = ram
        for row in rows:
            for e in row:
                r = r * e.ram // gcd(r, e.ram)
        self.ctx = ctx
        self.ram = r
        self.matrix = tuple(tuple(e.lift(r) for e in row) for row in rows)

    @property
    def rank(self) -> int:
        return len(self.matrix)

    def is_constant(self) -> bool:
        for row in self.matrix:
            for e in row:
                if e.is_zero():
                    continue
                if e.val != 0 or len(e.coeffs) != 1:
                    return False
        return True

    def constant_matrix(self) -> list[list]:
        mp = self.ctx.mp
        return [[e.coeff(0) if not e.is_zero() else mp.mpc(0) for e in row] for row in self.matrix]

    def apply(self, v):
        """Coordinates of Sigma(sum v_i e_i) = B sigma(v)."""
        sv = [c.sigma(1) for c in v]
        out = []
        for row in self.matrix:
            acc = Series.zero(self.ctx, self.ram)
            for b, s in zip(row, sv):
                if not b.is_zero() and not s.is_zero():
                    acc = acc + b * s
            out.append(acc)
        return out

    def to_json(self) -> dict:
        return {"ram": self.ram, "matrix": [[e.to_json() for e in row] for row in self.matrix]}


def rank1_module(ctx: QContext, mu: int, lam) -> QSystem:
    """M_{mu, lam}: Sigma e = lam x^(-mu) e."""
    if not ctx.mp.mpc(lam):
        raise ValueError("lambda must be nonzero")
    return QSystem(ctx, [[Series.monomial(ctx, lam, -mu)]])


def restriction_of_scalars(ctx: QContext, mu: int, lam, n: int) -> QSystem:
    """The rank-one module of x^(mu/n) sigma - lam, seen over C((x)) in the basis x^(j/n) e."""
    if n < 1:
        raise ValueError("n must be positive")
    if gcd(mu, n) != 1:
        warnings.warn(f"gcd({mu}, {n}) != 1: the module is not simple", RuntimeWarning, stacklevel=2)
    mp = ctx.mp
    lam = mp.mpc(lam)
    z = Series.zero(ctx)
    mat = [[z] * n for _ in range(n)]
    for j in range(n):
        k, r = divmod(j - mu, n)
        mat[r][j] = Series.monomial(ctx, lam * ctx.qpow(j, n), k)
    return QSystem(ctx, mat)


# -- linear algebra over truncated Laurent series ------------------------

def _pivot_key(s: Series):
    return (s.val, -abs(s.leading))


def solve_series(ctx, mat, rhs):
    """Solve mat . x = rhs over the Laurent field; returns (x, determinant) or raises ZeroDivisionError."""
    n = len(mat)
    a = [list(row) + [b] for row, b in zip(mat, rhs)]
    det = Series.const(ctx, 1, mat[0][0].ram if n else 1)
    for c in range(n):
        cands = [(r, a[r][c].chop()) for r in range(c, n)]
        cands = [(r, s) for r, s in cands if not s.is_zero()]
        if not cands:
            raise ZeroDivisionError("singular transition matrix")
        p, piv = min(cands, key=lambda t: _pivot_key(t[1]))
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        a[c][c] = piv
        det = det * piv
        inv = piv.inverse()
        for r in range(c + 1, n):
            f = a[r][c]
            if f.is_zero():
                continue
            f = f * inv
            for k in range(c, n + 1):
                a[r][k] = a[r][k] - f * a[c][k]
    x = [None] * n
    for c in range(n - 1, -1, -1):
        acc = a[c][n]
        for k in range(c + 1, n):
            acc = acc - a[c][k] * x[k]
        x[c] = acc * a[c][c].inverse()
    return x, det


@dataclass
class CyclicResult:
    m: list
    op: SkewOperator
    relation: list
    determinant: Series
    tried: int

    def to_json(self) -> dict:
        return {"m": [s.to_json() for s in self.m], "operator": self.op.to_json(),
                "relation": [s.to_json() for s in self.relation], "candidates_tried": self.tried}


def _ladder(ctx, n, ram, budget):
    """Exponent tuples of total degree 0, 1, ... in lexicographic order."""
    def tuples(total, k):
        if k == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in tuples(total - first, k - 1):
                yield (first,) + rest
    count, d = 0, 0
    while count < budget:
        for t in tuples(d, n):
            yield [Series.monomial(ctx, 1, e, ram) for e in t]
            count += 1
            if count >= budget:
                return
        d += 1


def cyclic_vector(system: QSystem, m=None, budget: int = CYCLIC_BUDGET) -> CyclicResult:
    """Find m whose iterates under Sigma span; return the monic annihilating operator.

    The operator is sigma^n - sum_k beta_k sigma^k where Sigma^n m = sum_k beta_k Sigma^k m.
    """
    ctx = system.ctx
    n = system.rank
    cands = [m] if m is not None else _ladder(ctx, n, system.ram, budget)
    tried = []
    for cand in cands:
        cand = [c if isinstance(c, Series) else Series.const(ctx, c, system.ram) for c in cand]
        tried.append(cand)
        vs = [cand]
        for _ in range(n):
            vs.append(system.apply(vs[-1]))
        mat = [[vs[j][i] for j in range(n)] for i in range(n)]
        try:
            beta, det = solve_series(ctx, mat, vs[n])
        except (ZeroDivisionError, SeriesError):
            continue
        one = Series.const(ctx, 1, system.ram)
        op = SkewOperator(ctx, [-b for b in beta] + [one], system.ram)
        return CyclicResult(cand, op, beta, det, len(tried))
    raise CyclicSearchExhausted(tried)


# -- invariants ----------------------------------------------------------

@dataclass
class QClassInfo:
    representative: object
    members: list
    shifts: list

    @property
    def multiplicity(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        r = self.representative
        return {"representative": [float(r.real), float(r.imag)], "multiplicity": self.multiplicity,
                "shifts": self.shifts}


@dataclass
class SlopeClasses:
    mu: Fraction
    ram: int
    r: int
    classes: list

    def to_json(self) -> dict:
        return {"mu": str(self.mu), "ram": self.ram, "r": self.r, "classes": [c.to_json() for c in self.classes]}


@dataclass
class ModuleInvariants:
    polygon: NewtonPolygon
    slopes: list
    admissibility: AdmissibilityVerdict | None

    def to_json(self) -> dict:
        return {"polygon": self.polygon.to_json(), "slopes": [s.to_json() for s in self.slopes],
                "admissibility": None if self.admissibility is None else self.admissibility.to_json()}


def group_classes(ctx: QContext, exps, ram: int = 1) -> list[QClassInfo]:
    out = []
    for ch in q_chains(ctx, exps, ram):
        out.append(QClassInfo(exps[ch[0][0]], [exps[i] for i, _ in ch], [k for _, k in ch]))
    return out


def invariants(op: SkewOperator, with_admissibility: bool = True) -> ModuleInvariants:
    ctx = op.ctx
    poly = newton_polygon(op)
    slopes = []
    for mu, r in poly.slopes:
        data = slope_data(op, mu)
        slopes.append(SlopeClasses(Fraction(mu, op.ram), data.ram, r, group_classes(ctx, data.exponents, data.ram)))
    verdict = admissibility(op) if with_admissibility else None
    return ModuleInvariants(poly, slopes, verdict)


def _match_classes(ctx, a: SlopeClasses, b: SlopeClasses) -> bool:
    if a.mu != b.mu or a.r != b.r or a.ram != b.ram:
        return False
    left = list(b.classes)
    for ca in a.classes:
        for k, cb in enumerate(left):
            if cb.multiplicity == ca.multiplicity and q_class(ctx, ca.representative, cb.representative, a.ram).related:
                left.pop(k)
                break
        else:
            return False
    return not left


def same_invariants(ctx, a: ModuleInvariants, b: ModuleInvariants) -> bool:
    if a.polygon.x_slopes() != b.polygon.x_slopes() or len(a.slopes) != len(b.slopes):
        return False
    return all(_match_classes(ctx, sa, sb) for sa, sb in zip(a.slopes, b.slopes))


# -- constant systems and graded descriptors -----------------------------

@dataclass
class ClassBlock:
    representative: object
    eigenvalues: list
    shifts: list
    dimension: int
    blocks: list
    decided: bool = True

    def to_json(self) -> dict:
        r = self.representative
        return {"representative": [float(r.real), float(r.imag)], "dimension": self.dimension,
                "jordan_blocks": self.blocks, "shifts": self.shifts, "decided": self.decided}


@dataclass
class GradedDescriptor:
    components: list
    property_d: str
    evidence: list = field(default_factory=list)

    @property
    def decided(self) -> bool:
        return all(c.decided for _, cls in self.components for c in cls)

    def to_json(self) -> dict:
        return {"components": [{"mu": str(mu), "classes": [c.to_json() for c in cls]} for mu, cls in self.components],
                "property_D": self.property_d, "evidence": [e.to_json() for e in self.evidence]}


def _rank(mp, m, thresh) -> int:
    if m.rows == 0:
        return 0
    s = mp.svd_c(m, compute_uv=False)
    return sum(1 for v in s if abs(v) > thresh)


def _eigen_clusters(ctx, mat):
    """Eigenvalue clusters (mean, multiplicity) and whether any two clusters are suspiciously close."""
    mp = ctx.mp
    n = len(mat)
    diag = all(not mat[i][j] for i in range(n) for j in range(n) if i != j)
    raw = [mat[i][i] for i in range(n)] if diag else list(mp.eig(mp.matrix(mat), left=False, right=False))
    radius = mp.sqrt(ctx.tol)
    groups = []
    for z in raw:
        for g in groups:
            if abs(z - g[0]) <= radius * max(1, abs(g[0])):
                g.append(z)
                break
        else:
            groups.append([z])
    clusters = [(mp.fsum(g) / len(g), len(g)) for g in groups]
    ambiguous = any(abs(a - b) <= 1e5 * radius * max(1, abs(a))
                    for i, (a, _) in enumerate(clusters) for b, _ in clusters[i + 1:])
    return clusters, ambiguous, diag


def _jordan_blocks(ctx, mat, ev, mult) -> list[int]:
    mp = ctx.mp
    n = len(mat)
    a = mp.matrix(mat) - ev * mp.eye(n)
    thresh = mp.sqrt(ctx.tol) * max(1, mp.mnorm(mp.matrix(mat), 1))
    ranks = [n]
    p = mp.eye(n)
    for _ in range(mult):
        p = p * a
        ranks.append(_rank(mp, p, thresh))
    at_least = [ranks[k - 1] - ranks[k] for k in range(1, mult + 1)]
    blocks = []
    for k in range(1, mult + 1):
        exact = at_least[k - 1] - (at_least[k] if k < mult else 0)
        blocks.extend([k] * exact)
    return sorted(blocks, reverse=True)


def graded_descriptor(ctx: QContext, mat, mu=0, n: int | None = None) -> GradedDescriptor:
    """Jordan data of a constant matrix grouped by q^Z class, with the property (D) check on representatives."""
    mp = ctx.mp
    mat = [[mp.mpc(e) for e in row] for row in mat]
    if abs(mp.det(mp.matrix(mat))) <= ctx.zero:
        raise ValueError("matrix must be invertible")
    clusters, ambiguous, _ = _eigen_clusters(ctx, mat)
    evs = [c for c, _ in clusters]
    out = []
    for ch in q_chains(ctx, evs):
        members = [clusters[i] for i, _ in ch]
        blocks = []
        for ev, m in members:
            blocks.extend(_jordan_blocks(ctx, mat, ev, m))
        dim = sum(m for _, m in members)
        decided = not ambiguous and sum(blocks) == dim
        out.append(ClassBlock(members[0][0], [ev for ev, _ in members], [k for _, k in ch], dim,
                              sorted(blocks, reverse=True), decided))
    reps = [c.representative for c in out]
    _, _, evidence = slope_verdict(ctx, reps, 1, n or 256)
    states = {e.status for e in evidence}
    prop = "admissible" if states <= {"stable"} else ("not_admissible" if "divergent" in states else "undecided")
    return GradedDescriptor([(Fraction(mu), out)], prop, evidence)


# -- gauge witnesses for constant systems --------------------------------

def _null_basis(mp, m, k):
    """k right singular vectors of m for its smallest singular values."""
    u, s, v = mp.svd_c(m)
    n = m.cols
    order = sorted(range(n), key=lambda i: abs(s[i]))
    return [[v[i, c].conjugate() for c in range(n)] for i in order[:k]]


def _normal_form(ctx, mat, anchors):
    """Constant S and shifts k_j with S^-1 mat S block diagonal; eigenvalues moved onto the anchors.

    Returns (S, shifts per column, C) where C = S^-1 mat S with each block scaled by q^-k.
    """
    mp = ctx.mp
    n = len(mat)
    clusters, ambiguous, diag = _eigen_clusters(ctx, mat)
    cols, shifts = [], []
    for ev, m in clusters:
        k = None
        for a in anchors:
            rel = q_class(ctx, a, ev)
            if rel.related:
                k = rel.shift
                break
        if k is None:
            anchors.append(ev)
            k = 0
        if diag:
            vecs = [[mp.mpc(1) if r == i else mp.mpc(0) for r in range(n)]
                    for i in range(n) if abs(mat[i][i] - ev) <= mp.sqrt(ctx.tol) * max(1, abs(ev))]
        else:
            a = (mp.matrix(mat) - ev * mp.eye(n)) ** m
            vecs = _null_basis(mp, a, m)
        cols.extend(vecs)
        shifts.extend([k] * len(vecs))
    s = mp.matrix(n, n)
    for j, v in enumerate(cols):
        for i in range(n):
            s[i, j] = v[i]
    c = mp.inverse(s) * mp.matrix(mat) * s
    for i in range(n):
        for j in range(n):
            c[i, j] *= ctx.qpow(-shifts[j])
    return s, shifts, c, ambiguous


def _intertwiner(ctx, ca, cb):
    """Invertible constant P with ca P = P cb, or None."""
    mp = ctx.mp
    n = ca.rows
    tol = mp.sqrt(ctx.tol)
    if mp.mnorm(ca - cb, 1) <= tol:
        return mp.eye(n)
    if all(abs(ca[i, j]) <= tol and abs(cb[i, j]) <= tol for i in range(n) for j in range(n) if i != j):
        perm, used = [], set()
        for i in range(n):
            for j in range(n):
                if j not in used and abs(ca[i, i] - cb[j, j]) <= tol:
                    perm.append(j)
                    used.add(j)
                    break
        if len(perm) == n:
            p = mp.matrix(n, n)
            for i, j in enumerate(perm):
                p[i, j] = 1
            return p
    big = mp.matrix(n * n, n * n)
    for i in range(n):
        for j in range(n):
            row = i * n + j
            for k in range(n):
                big[row, k * n + j] += ca[i, k]
                big[row, i * n + k] -= cb[k, j]
    u, s, v = mp.svd_c(big)
    null = [idx for idx in range(n * n) if abs(s[idx]) <= tol * max(1, abs(s[0]))]
    if not null:
        return None
    rng = random.Random(0)
    p = mp.matrix(n, n)
    for idx in null:
        w = mp.mpc(rng.uniform(0.5, 1.5), rng.uniform(-0.5, 0.5))
        for i in range(n):
            for j in range(n):
                p[i, j] += w * v[idx, i * n + j].conjugate()
    if abs(mp.det(p)) <= tol:
        return None
    return p


def _gauge_matrix(ctx, s, shifts, sign):
    """S diag(x^(-k)) (sign=+1) or diag(x^k) S^-1 (sign=-1) as a matrix of monomial series."""
    mp = ctx.mp
    n = s.rows
    out = [[None] * n for _ in range(n)]
    if sign > 0:
        for i in range(n):
            for j in range(n):
                out[i][j] = Series.monomial(ctx, s[i, j], -shifts[j]) if s[i, j] else Series.zero(ctx)
    else:
        si = mp.inverse(s)
        for i in range(n):
            for j in range(n):
                out[i][j] = Series.monomial(ctx, si[i, j], shifts[i]) if si[i, j] else Series.zero(ctx)
    return out


def _smat(ctx, m):
    return [[Series.const(ctx, m[i, j]) if m[i, j] else Series.zero(ctx) for j in range(m.cols)]
            for i in range(m.rows)]


def series_matmul(ctx, a, b):
    n, k, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = Series.zero(ctx)
            for t in range(k):
                if not a[i][t].is_zero() and not b[t][j].is_zero():
                    acc = acc + a[i][t] * b[t][j]
            row.append(acc)
        out.append(row)
    return out


def conjugation_residual(ctx, a: QSystem, b: QSystem, g, g_inv) -> object:
    """max |G^-1 A sigma(G) - B| over the entries."""
    sg = [[e.sigma(1) for e in row] for row in g]
    lhs = series_matmul(ctx, series_matmul(ctx, g_inv, [list(r) for r in a.matrix]), sg)
    worst = ctx.mp.mpf(0)
    for i in range(a.rank):
        for j in range(a.rank):
            d = lhs[i][j].distance(b.matrix[i][j])
            worst = max(worst, d)
    return worst


@dataclass
class IsoResult:
    verdict: str
    reason: str
    witness: list | None = None
    residual: object = None

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "reason": self.reason}
        if self.witness is not None:
            out["witness"] = [[e.to_json() for e in row] for row in self.witness]
            out["conjugation_residual"] = float(self.residual)
        return out


def _constant_iso(ctx, a: QSystem, b: QSystem) -> IsoResult:
    mp = ctx.mp
    da = graded_descriptor(ctx, a.constant_matrix())
    db = graded_descriptor(ctx, b.constant_matrix())
    ca, cb = da.components[0][1], db.components[0][1]
    if not (da.decided and db.decided):
        return IsoResult("undecided", "ambiguous eigenvalue clustering")
    left = list(cb)
    for x in ca:
        for k, y in enumerate(left):
            if q_class(ctx, x.representative, y.representative).related and x.blocks == y.blocks:
                left.pop(k)
                break
        else:
            return IsoResult("not_iso", "graded descriptors differ")
    if left:
        return IsoResult("not_iso", "graded descriptors differ")
    anchors = []
    sa, ka, cma, _ = _normal_form(ctx, a.constant_matrix(), anchors)
    sb, kb, cmb, _ = _normal_form(ctx, b.constant_matrix(), anchors)
    p = _intertwiner(ctx, cma, cmb)
    if p is None:
        return IsoResult("undecided", "no invertible intertwiner found numerically")
    ga = _gauge_matrix(ctx, sa, ka, +1)
    ga_inv = _gauge_matrix(ctx, sa, ka, -1)
    gb = _gauge_matrix(ctx, sb, kb, +1)
    gb_inv = _gauge_matrix(ctx, sb, kb, -1)
    g = series_matmul(ctx, series_matmul(ctx, ga, _smat(ctx, p)), gb_inv)
    g_inv = series_matmul(ctx, series_matmul(ctx, gb, _smat(ctx, mp.inverse(p))), ga_inv)
    g = [[e.chop(scale=1) for e in row] for row in g]
    g_inv = [[e.chop(scale=1) for e in row] for row in g_inv]
    res = conjugation_residual(ctx, a, b, g, g_inv)
    return IsoResult("iso", "equal graded descriptors", g, res)


def _as_operator(x) -> SkewOperator:
    if isinstance(x, QSystem):
        return cyclic_vector(x).op
    return x


def formal_isomorphic(a, b) -> IsoResult:
    """iso / not_iso / undecided for two operators or systems."""
    ctx = a.ctx
    if isinstance(a, QSystem) and isinstance(b, QSystem):
        if a.rank != b.rank:
            return IsoResult("not_iso", "ranks differ")
        if a.is_constant() and b.is_constant():
            return _constant_iso(ctx, a, b)
    oa, ob = _as_operator(a), _as_operator(b)
    if oa.order != ob.order:
        return IsoResult("not_iso", "ranks differ")
    ia, ib = invariants(oa, False), invariants(ob, False)
    if ia.polygon.x_slopes() != ib.polygon.x_slopes():
        return IsoResult("not_iso", "Newton polygons differ")
    if not same_invariants(ctx, ia, ib):
        return IsoResult("not_iso", "exponent classes differ")
    if all(c.multiplicity == 1 for s in ia.slopes for c in s.classes):
        return IsoResult("iso", "equal invariants, every class non-resonant")
    return IsoResult("undecided", "resonant classes need nilpotent data")
