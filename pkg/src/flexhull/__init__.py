"""flexhull: homothetic polygon approximation of DER (p, q) flexibility domains.

Outer and inner approximations are homothets (uniform scale + translation)
of a shared convex polygon prototype, fitted through sum-of-squares
certificates compiled to semidefinite programs; fleets aggregate by
parameter addition.  An independent geometric oracle cross-checks every fit.
"""

from .aggregate import FleetApprox, aggregate, area_metric, distance_metric
from .domain import FlexDomain, make_ac, make_battery, make_pv, make_wind
from .fit import (
    DiscreteDomainError,
    FitConfig,
    FitError,
    FitReport,
    InnerFitParams,
    check_inner,
    detect_binding_edges,
    fit_inner,
    fit_outer,
    max_alpha_bisection,
)
from .polynomial import MonomialBasis, Polynomial2, basis, gram_expand
from .prototype import Homothet, PrototypePolygon, custom_prototype, regular_prototype

__all__ = [
    "FleetApprox",
    "aggregate",
    "area_metric",
    "distance_metric",
    "FlexDomain",
    "make_ac",
    "make_battery",
    "make_pv",
    "make_wind",
    "DiscreteDomainError",
    "FitConfig",
    "FitError",
    "FitReport",
    "InnerFitParams",
    "check_inner",
    "detect_binding_edges",
    "fit_inner",
    "fit_outer",
    "max_alpha_bisection",
    "MonomialBasis",
    "Polynomial2",
    "basis",
    "gram_expand",
    "Homothet",
    "PrototypePolygon",
    "custom_prototype",
    "regular_prototype",
]

__version__ = "0.1.0"
