"""Numerical verification of geodesic sandwich inequalities on test manifolds.

Modules
-------
manifolds, charts
    Catalog manifolds with closed-form geodesics and an RK4 chart backend.
fields
    Scalar-field catalog and derivative operators.
sandwich
    Two-function chord inequality, separator construction and corollaries.
ball_geometry
    Space-form volumes, ball integrals and the ball inequalities.
geodesic_calculus
    Derivative profiles, mean-value and orthogonality parameters.
scenario, cli
    TOML scenario runner.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .ball_geometry import (BallInequalityReport, BallSpec, ball_integral,
                            check_curvature_sandwich_bound, check_subharmonic_mean_inequality,
                            geodesic_sphere_area, space_form_ball_volume)
from .charts import ChartMetric, chart_metric
from .domains import Domain, ball_domain, default_domain, whole_domain
from .fields import (ScalarField, StarPair, directional_derivative, gradient, laplacian,
                     make_catalog_field)
from .geodesic_calculus import (NoRootFound, OrthogonalPoint, PhiProfile, mvt_point,
                                orthogonal_point, phi_profile)
from .manifolds import (GeodesicSegment, ProductPoint, curve_length, distance, euclidean,
                        exp_map, flat_torus, geodesic_integrate, geodesic_point, hyperbolic,
                        log_map, product_geodesic, sphere)
from .sandwich import (SeparatorEstimate, StarCheckReport, build_separator,
                       check_along_closed_geodesic, check_constant_separator,
                       check_geodesic_convex, check_pointwise_dominance, check_property_star,
                       check_sandwich, closed_geodesic, exhaustive_envelope_1d)

__all__ = [
    "BACKEND", "BallInequalityReport", "BallSpec", "ChartMetric", "Domain", "GeodesicSegment",
    "NoRootFound", "OrthogonalPoint", "PhiProfile", "ProductPoint", "ScalarField",
    "SeparatorEstimate", "StarCheckReport", "StarPair", "ball_domain", "ball_integral",
    "build_separator", "chart_metric", "check_along_closed_geodesic", "check_constant_separator",
    "check_curvature_sandwich_bound", "check_geodesic_convex", "check_pointwise_dominance",
    "check_property_star", "check_sandwich", "check_subharmonic_mean_inequality",
    "closed_geodesic", "curve_length", "default_domain", "directional_derivative", "distance",
    "euclidean", "exhaustive_envelope_1d", "exp_map", "flat_torus", "geodesic_integrate",
    "geodesic_point", "geodesic_sphere_area", "gradient", "hyperbolic", "laplacian", "log_map",
    "make_catalog_field", "mvt_point", "orthogonal_point", "phi_profile", "product_geodesic",
    "space_form_ball_volume", "sphere", "whole_domain",
]
