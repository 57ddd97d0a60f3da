"""Rabier distance to singularity, generalized critical values of polynomial
maps, truncated Puiseux arithmetic and empirical thinness of point clouds."""

__version__ = "0.1.0"

from .expr import PolynomialMap, differentiate, eval_jacobian, eval_map, parse_map
from .rabier import nu, nu_kernel, smallest_singular_oracle
from .rcf import ConvexSubgroup, PuiseuxSeries

__all__ = [
    "PolynomialMap", "parse_map", "differentiate", "eval_map", "eval_jacobian",
    "nu", "nu_kernel", "smallest_singular_oracle",
    "PuiseuxSeries", "ConvexSubgroup",
]
