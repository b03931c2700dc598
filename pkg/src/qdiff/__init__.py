"""Factorization and classification of q-difference operators over truncated Puiseux series."""
from .classify import (IsoResult, QSystem, cyclic_vector, formal_isomorphic, graded_descriptor, invariants,
                       rank1_module, restriction_of_scalars)
from .context import QContext
from .contfrac import brjuno, cf_expand, norm_z, parse_omega, yoccoz_bound
from .diophantine import admissibility, small_divisor_profile
from .expr import parse_operator
from .factor import (Factorization, RankOneFactor, extract_right_factor, factor_full, factor_ramified,
                     factor_slope, verify_factorization)
from .newton import newton_polygon, order_exponents, q_class, slope_data
from .series import (TruncatedPuiseuxSeries, dilate, kummer_check, phi_series, q_pochhammer, radius_estimate,
                      series_arith, special_series)
from .skewop import SkewOperator, normalize, op_apply, op_mul, ramify_op, right_divide, twist_char, twist_theta

__version__ = "0.1.0"

__all__ = [
    "Factorization", "IsoResult", "QContext", "QSystem", "RankOneFactor", "SkewOperator",
    "TruncatedPuiseuxSeries", "admissibility", "brjuno", "cf_expand", "cyclic_vector", "dilate",
    "extract_right_factor", "factor_full", "factor_ramified", "factor_slope", "formal_isomorphic",
    "graded_descriptor", "invariants", "kummer_check", "newton_polygon", "norm_z", "normalize", "op_apply",
    "op_mul", "order_exponents", "parse_omega", "parse_operator", "phi_series", "q_class", "q_pochhammer",
    "radius_estimate", "ramify_op", "rank1_module", "restriction_of_scalars", "right_divide", "series_arith",
    "slope_data", "small_divisor_profile", "special_series", "twist_char", "twist_theta",
    "verify_factorization", "yoccoz_bound",
]
