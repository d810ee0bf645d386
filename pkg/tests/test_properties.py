import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from geosandwich import (GeodesicSegment, ProductPoint, build_separator, ball_domain, euclidean,
                         flat_torus, hyperbolic, phi_profile, product_geodesic,
                         space_form_ball_volume, sphere)
from geosandwich._kernels import python_kernels

from support import field

SETTINGS = settings(max_examples=60, deadline=None)
coord = st.floats(-2.0, 2.0, allow_nan=False)
pair2 = st.tuples(coord, coord)

E2, S2, H2, T2 = euclidean(2), sphere(1.0), hyperbolic(-1.0), flat_torus((1.0, 1.0))


def _sphere_point(a, b):
    lon, z = np.pi * a / 2.0, np.clip(b / 2.0, -0.99, 0.99)
    r = np.sqrt(1 - z * z)
    return np.array([r * np.cos(lon), r * np.sin(lon), z])


def _disk_point(a, b):
    v = np.array([a, b]) / 2.0
    n = np.linalg.norm(v)
    return v if n <= 0.9 else 0.9 * v / n


def _point(name, a, b):
    if name == "sphere":
        return S2, _sphere_point(a, b)
    if name == "hyperbolic":
        return H2, _disk_point(a, b)
    if name == "torus":
        return T2, np.mod(np.array([a, b]), 1.0)
    return E2, np.array([a, b])


MANIFOLD_NAMES = st.sampled_from(["euclidean", "sphere", "hyperbolic", "torus"])


def _close_enough(m, x, y, frac=0.9):
    return np.isinf(m.injectivity_radius) or m.dist(x, y) < frac * m.injectivity_radius


@SETTINGS
@given(MANIFOLD_NAMES, pair2, pair2)
def test_exp_inverts_log(name, p, q):
    m, x = _point(name, *p)
    _, y = _point(name, *q)
    assume(_close_enough(m, x, y))
    back = m.exp(x, m.log(x, y))
    assert m.dist(back, y) <= 1e-9


@SETTINGS
@given(MANIFOLD_NAMES, pair2, pair2, pair2)
def test_distance_is_a_metric(name, p, q, r):
    m, x = _point(name, *p)
    _, y = _point(name, *q)
    _, z = _point(name, *r)
    assert abs(m.dist(x, y) - m.dist(y, x)) <= 1e-12
    assert m.dist(x, x) <= 1e-12
    assert m.dist(x, z) <= m.dist(x, y) + m.dist(y, z) + 1e-9


@SETTINGS
@given(MANIFOLD_NAMES, pair2, pair2, st.floats(0.0, 1.0), coord, coord)
def test_product_geodesic_height_is_affine(name, p, q, t, hp, hq):
    m, x = _point(name, *p)
    _, y = _point(name, *q)
    assume(_close_enough(m, x, y))
    pt = product_geodesic(m, ProductPoint(x, hp), ProductPoint(y, hq), t)
    assert abs(pt.height - ((1 - t) * hp + t * hq)) <= 1e-12
    assert abs(m.dist(x, pt.base) - t * m.dist(x, y)) <= 1e-9


@SETTINGS
@given(pair2, st.floats(0.0, 2.0), st.lists(pair2, min_size=1, max_size=20))
def test_perturbed_pair_brackets_base(center, slack, pts):
    base = {"kind": "quadratic_distance", "center": list(center), "scale": 1.0}
    lo = field(E2, "perturbed_lower", base=base, slack=slack)
    hi = field(E2, "perturbed_upper", base=base, slack=slack)
    x = np.array(pts)
    k0 = field(E2, **base).eval(x)
    assert np.all(lo.eval(x) <= k0) and np.all(k0 <= hi.eval(x))


_SEP = build_separator(E2, field(E2, "tent", center=[0.0, 0.0], peak=1.0, slope=1.0),
                       domain=ball_domain(E2, radius=1.0), node_resolution=33)
_TENT = field(E2, "tent", center=[0.0, 0.0], peak=1.0, slope=1.0)


@SETTINGS
@given(st.lists(st.tuples(st.floats(-0.7, 0.7), st.floats(-0.7, 0.7)), min_size=1,
                max_size=50))
def test_separator_stays_below_h(pts):
    x = np.array(pts)
    assert np.all(_SEP.eval(x) <= _TENT.eval(x))


@SETTINGS
@given(st.floats(-5.0, 5.0), st.integers(1, 4), st.integers(1, 4),
       st.lists(pair2, min_size=1, max_size=30), st.booleans())
def test_interp_reproduces_constants(c, n0, n1, qs, periodic):
    vals = np.full((n0, n1), c)
    out = python_kernels.interp_regular(vals, np.zeros(2), np.full(2, 0.3),
                                        np.array([periodic, False]), np.array(qs))
    assert np.all(out == c)


@SETTINGS
@given(st.floats(-3.0, 3.0), st.integers(1, 5), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_ball_volume_increases_with_radius(k, n, r1, r2):
    lo, hi = sorted((r1, r2))
    assume(hi - lo > 1e-6)
    if k > 0:
        cap = np.pi / np.sqrt(k)
        assume(hi < cap)
    assert space_form_ball_volume(k, n, lo) < space_form_ball_volume(k, n, hi)


@SETTINGS
@given(pair2, pair2, pair2)
def test_profile_integrates_to_increment(c, p, q):
    f = field(H2, "cosh_distance", center=list(_disk_point(*c)))
    x, y = _disk_point(*p), _disk_point(*q)
    assume(H2.dist(x, y) > 1e-6)
    seg = GeodesicSegment.between(H2, x, y)
    diff = float(f.eval(seg.end) - f.eval(seg.start))
    assert abs(phi_profile(f, seg).integral() - diff) <= 1e-5 * (1 + abs(diff))
