"""Working context: the base q = exp(2 pi i omega), precision and tolerances."""
from __future__ import annotations

import mpmath

from .contfrac import OmegaSpec, parse_omega

GUARD_DIGITS = 10


class QContext:
    """Immutable numeric setting shared by every object built from it.

    Each context owns a private mpmath context, so two contexts with
    different precisions never disturb each other.
    """

    def __init__(self, omega: str | OmegaSpec = "golden", precision: int = 50, trunc: int = 64,
                 horizon: int = 50, tol=None):
        if precision < 10:
            raise ValueError("precision must be at least 10 digits")
        if trunc < 1 or horizon < 1:
            raise ValueError("trunc and horizon must be positive")
        mp = mpmath.MPContext()
        mp.dps = precision + GUARD_DIGITS
        spec = parse_omega(omega)
        self._mp = mp
        self._spec = spec
        self._precision = precision
        self._trunc = trunc
        self._horizon = horizon
        self._omega = spec.value(mp)
        self._q = mp.expjpi(2 * self._omega)
        self._tol = mp.mpf(10) ** (-(2 * precision // 5)) if tol is None else mp.mpf(tol)
        self._floor = mp.mpf(10) ** (-(precision // 2))
        self._zero = mp.mpf(10) ** (-(9 * precision // 10))
        self._powers: dict[tuple[int, int], mpmath.mpc] = {}

    mp = property(lambda self: self._mp)
    omega_spec = property(lambda self: self._spec)
    precision = property(lambda self: self._precision)
    trunc = property(lambda self: self._trunc)
    horizon = property(lambda self: self._horizon)
    omega = property(lambda self: self._omega)
    q = property(lambda self: self._q)
    tol = property(lambda self: self._tol)
    # analytic small-divisor floor
    floor = property(lambda self: self._floor)
    # numerically zero at working precision
    zero = property(lambda self: self._zero)

    def qpow(self, e, ram: int = 1):
        """The fixed branch q^(e/ram) = exp(2 pi i omega e / ram)."""
        key = (int(e), ram)
        v = self._powers.get(key)
        if v is None:
            v = self._mp.expjpi(2 * self._omega * key[0] / ram)
            if len(self._powers) < 200000:
                self._powers[key] = v
        return v

    def replace(self, **kw) -> "QContext":
        args = dict(omega=self._spec, precision=self._precision, trunc=self._trunc,
                    horizon=self._horizon, tol=None)
        args.update(kw)
        return QContext(**args)

    def describe(self) -> dict:
        return {
            "omega": str(self._spec),
            "omega_value": mpmath.nstr(self._omega, 30),
            "precision": self._precision,
            "trunc": self._trunc,
            "horizon": self._horizon,
            "tol": mpmath.nstr(self._tol, 5),
        }

    def __repr__(self) -> str:
        return (f"QContext(omega={str(self._spec)!r}, precision={self._precision}, "
                f"trunc={self._trunc}, horizon={self._horizon})")
