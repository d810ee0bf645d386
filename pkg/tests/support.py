"""Shared case builders for the test suite."""

import numpy as np

from geosandwich import (ball_domain, euclidean, flat_torus, hyperbolic, make_catalog_field,
                         sphere)
from geosandwich.fields import StarPair

ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"criterion {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def field(m, kind, **params):
    return make_catalog_field(m, {"kind": kind, **params})


def perturbed_pair(m, base, slack):
    return StarPair(field(m, "perturbed_lower", base=base, slack=slack),
                    field(m, "perturbed_upper", base=base, slack=slack))


def perturbed_cases():
    """Five (name, manifold, pair, domain) cases built as convex base +- slack."""
    e1, e2 = euclidean(1), euclidean(2)
    hyp = hyperbolic(-1.0)
    torus = flat_torus((1.0, 1.0))
    return [
        ("euclidean2_coordinate_quadratic", e2,
         perturbed_pair(e2, {"kind": "coordinate_quadratic", "matrix": [[2.0, 0.0], [0.0, 1.0]]},
                        0.1),
         ball_domain(e2, radius=1.0)),
        ("euclidean1_quadratic_distance", e1,
         perturbed_pair(e1, {"kind": "quadratic_distance", "center": [0.5], "scale": 1.0}, 0.2),
         ball_domain(e1, radius=2.0)),
        ("hyperbolic_cosh_distance", hyp,
         perturbed_pair(hyp, {"kind": "cosh_distance", "center": [0.0, 0.0]}, 0.5),
         ball_domain(hyp, radius=1.0)),
        ("hyperbolic_quadratic_distance", hyp,
         perturbed_pair(hyp, {"kind": "quadratic_distance", "center": [0.2, 0.1], "scale": 0.5},
                        0.2),
         ball_domain(hyp, radius=1.0)),
        ("torus_constant", torus,
         perturbed_pair(torus, {"kind": "constant", "value": 1.0}, 0.25), None),
    ]


def one_dim_cases():
    """The two extra 1-D forward-direction cases on [-2, 2]."""
    m = euclidean(1)
    dom = ball_domain(m, [0.0], 2.0)
    quad_lo = field(m, "coordinate_quadratic", matrix=[[1.0]], offset=-1.0)
    quad_hi = field(m, "coordinate_quadratic", matrix=[[1.0]], offset=1.0)
    tent = field(m, "tent", center=[0.0], peak=1.0, slope=1.0)
    return [
        ("x2_minus1_x2_plus1", m, StarPair(quad_lo, quad_hi), dom),
        ("tent_minorant", m, StarPair(field(m, "constant", value=-1.5), tent), dom),
    ]


def random_sphere_points(rng, n, dim=2):
    g = rng.standard_normal((n, dim + 1))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def catalog_manifolds():
    return {"euclidean2": euclidean(2), "sphere1": sphere(1.0), "hyperbolic-1": hyperbolic(-1.0),
            "flat_torus11": flat_torus((1.0, 1.0))}


BANANA_TOML = """
[scenario]
name = "banana"

[manifold]
kind = "banana"
"""

BROKEN_TOML = """
[scenario]
name = "broken"
seed =
"""

UNKNOWN_CHECK_TOML = """
[scenario]
name = "unknown"

[manifold]
kind = "euclidean"
dim = 1

[[checks]]
name = "check_nonsense"
"""

FAILING_TOML = """
[scenario]
name = "failing"

[manifold]
kind = "euclidean"
dim = 1

[fields.f]
kind = "coordinate_quadratic"
matrix = [[1.0]]
offset = 1.0

[fields.h]
kind = "coordinate_quadratic"
matrix = [[1.0]]
offset = -1.0

[[checks]]
name = "check_pointwise_dominance"
"""
