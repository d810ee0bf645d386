import numpy as np
import pytest

from geosandwich import (ProductPoint, chart_metric, curve_length, distance, euclidean, exp_map,
                         flat_torus, geodesic_integrate, geodesic_point, hyperbolic, log_map,
                         product_geodesic, sphere, GeodesicSegment)
from geosandwich.errors import (InvalidPoint, InvalidTangent, LeftChartDomain, NonUniqueGeodesic,
                                SpeedDriftExceeded, UnsupportedManifold)

from support import random_sphere_points

S2 = np.sqrt(2.0) / 2


# =============================================================================
# Catalog metadata
# =============================================================================

def test_catalog_metadata():
    s = sphere(2.0)
    assert s.curvature_bound_upper == pytest.approx(0.25)
    assert s.injectivity_radius == pytest.approx(2 * np.pi)
    assert s.finite_volume
    t = flat_torus((1.0, 1.0))
    assert t.curvature_bound_upper == 0 and t.finite_volume
    assert not euclidean(3).finite_volume and not hyperbolic(-1.0).finite_volume
    for m in (s, t, euclidean(1), hyperbolic(-2.0)):
        assert m.dim >= 1 and m.injectivity_radius > 0


# =============================================================================
# Worked examples
# =============================================================================

@pytest.mark.parametrize("m, x, y, t, want", [
    (euclidean(2), [0, 0], [2, 0], 0.25, [0.5, 0]),
    (sphere(1.0), [1, 0, 0], [0, 1, 0], 0.5, [S2, S2, 0]),
    (hyperbolic(-1.0), [0, 0], [0.5, 0], 0.5, [np.tanh(np.arctanh(0.5) / 2), 0]),
])
def test_geodesic_point_examples(m, x, y, t, want):
    assert np.allclose(geodesic_point(m, x, y, t), want, atol=1e-12)


def test_hyperbolic_midpoint_value():
    got = geodesic_point(hyperbolic(-1.0), [0, 0], [0.5, 0], 0.5)
    assert got[0] == pytest.approx(0.2679491924311227, abs=1e-12)


@pytest.mark.parametrize("m, x, v, want", [
    (euclidean(2), [1, 1], [2, 0], [3, 1]),
    (sphere(1.0), [0, 0, 1], [np.pi / 2, 0, 0], [1, 0, 0]),
    (sphere(1.0), [0, 0, 1], [2 * np.pi, 0, 0], [0, 0, 1]),
])
def test_exp_map_examples(m, x, v, want):
    assert np.allclose(exp_map(m, x, v), want, atol=1e-12)


def test_exp_map_reports_injectivity_radius():
    _, info = exp_map(sphere(1.0), [0, 0, 1], [2 * np.pi, 0, 0], return_info=True)
    assert info["beyond_injectivity_radius"]


@pytest.mark.parametrize("m, x, y, want", [
    (euclidean(2), [0, 0], [3, 4], [3, 4]),
    (sphere(1.0), [0, 0, 1], [1, 0, 0], [np.pi / 2, 0, 0]),
    (flat_torus((1.0, 1.0)), [0.1, 0.1], [0.9, 0.1], [-0.2, 0]),
])
def test_log_map_examples(m, x, y, want):
    assert np.allclose(log_map(m, x, y), want, atol=1e-12)


def test_torus_log_matches_lattice_brute_force():
    m = flat_torus((1.0, 2.0))
    rng = np.random.default_rng(3)
    x = rng.uniform(0, 1, (200, 2)) * m.periods
    step = rng.standard_normal((200, 2))
    step *= rng.uniform(0, 0.45, (200, 1)) / np.linalg.norm(step, axis=-1, keepdims=True)
    y = m.reduce(x + step)
    shifts = np.array([[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1)]) * m.periods
    cands = (y[:, None, :] + shifts[None]) - x[:, None, :]
    best = cands[np.arange(200), np.argmin(np.linalg.norm(cands, axis=-1), axis=1)]
    assert np.allclose(m.log(x, y), best, atol=1e-12)


@pytest.mark.parametrize("m, x, y, want", [
    (sphere(1.0), [1, 0, 0], [0, 1, 0], np.pi / 2),
    (hyperbolic(-1.0), [0, 0], [0.5, 0], np.log(3.0)),
    (flat_torus((1.0, 1.0)), [0.1, 0], [0.9, 0], 0.2),
])
def test_distance_examples(m, x, y, want):
    assert distance(m, x, y) == pytest.approx(want, abs=1e-12)


def test_antipodal_points_have_no_unique_geodesic():
    with pytest.raises(NonUniqueGeodesic):
        geodesic_point(sphere(1.0), [0, 0, 1], [0, 0, -1], 0.5)


def test_invalid_representations_raise():
    with pytest.raises(InvalidPoint):
        distance(sphere(1.0), [1, 1, 0], [1, 0, 0])
    with pytest.raises(InvalidPoint):
        distance(hyperbolic(-1.0), [1.0, 0], [0, 0])
    with pytest.raises(InvalidTangent):
        exp_map(sphere(1.0), [0, 0, 1], [0, 0, 1])


# =============================================================================
# Chart backend
# =============================================================================

def test_chart_flat_integration_is_straight():
    traj = geodesic_integrate(chart_metric("flat"), [0, 0], [1, 0], 1.0, 100)
    assert len(traj) == 101
    assert np.allclose(traj[-1][0], [1, 0], atol=1e-14)


def test_chart_poincare_reaches_closed_form():
    # coordinate vector (1, 0) has metric speed 2 at the origin, so the
    # unit-speed start is (0.5, 0); radial arclength s ends at tanh(s / 2)
    m = chart_metric("poincare-disk")
    traj = geodesic_integrate(m, [0, 0], [0.5, 0], np.log(3.0), 1000)
    assert np.allclose(traj[-1][0], [0.5, 0], atol=1e-6)
    traj = geodesic_integrate(m, [0, 0], [1, 0], np.log(3.0), 1000)
    assert np.allclose(traj[-1][0], [np.tanh(np.log(3.0)), 0], atol=1e-6)


def test_chart_log_inverts_exp():
    m = chart_metric("poincare-disk", steps=400)
    x = np.array([0.1, -0.2])
    v = np.array([0.4, 0.3])
    assert np.allclose(m.log(x, m.exp(x, v)), v, atol=1e-9)


def test_chart_leaving_domain_raises():
    with pytest.raises(LeftChartDomain):
        chart_metric("poincare-disk", steps=50).exp(np.array([0.0, 0.0]), np.array([80.0, 0.0]))


def test_chart_speed_drift_raises():
    m = chart_metric("stereographic-sphere", steps=2, drift_tol=1e-12)
    with pytest.raises(SpeedDriftExceeded):
        m.exp(np.array([0.2, 0.1]), np.array([3.0, 1.0]))


def test_custom_metric_matches_preset():
    def poincare(x):
        fac = 2.0 / (1.0 - np.sum(x * x, axis=-1))
        return fac[..., None, None] ** 2 * np.eye(2)

    custom = chart_metric(preset=None, metric=poincare, injectivity_radius=np.inf,
                          curvature_bound_upper=-1.0, steps=400)
    preset = chart_metric("poincare-disk", steps=400)
    x, v = np.array([0.1, 0.2]), np.array([0.3, -0.5])
    assert np.allclose(custom.exp(x, v), preset.exp(x, v), atol=1e-6)


def test_integrate_needs_chart_manifold():
    with pytest.raises(UnsupportedManifold):
        geodesic_integrate(euclidean(2), [0, 0], [1, 0], 1.0, 10)


# =============================================================================
# Product geodesics and curve length
# =============================================================================

def test_product_geodesic_examples():
    p = ProductPoint(np.array([0.0, 0.0]), 0.0)
    q = ProductPoint(np.array([2.0, 0.0]), 4.0)
    mid = product_geodesic(euclidean(2), p, q, 0.25)
    assert np.allclose(mid.base, [0.5, 0]) and mid.height == 1.0
    s = sphere(1.0)
    mid = product_geodesic(s, ProductPoint(np.array([1.0, 0, 0]), 2.0),
                           ProductPoint(np.array([0, 1.0, 0]), 6.0), 0.5)
    assert np.allclose(mid.base, [S2, S2, 0]) and mid.height == pytest.approx(4.0)


def test_product_geodesic_endpoints_exact():
    s = sphere(1.0)
    p = ProductPoint(np.array([0.6, 0.0, 0.8]), -1.25)
    q = ProductPoint(np.array([0.0, 0.6, 0.8]), 3.5)
    start = product_geodesic(s, p, q, 0.0)
    assert np.array_equal(start.base, p.base) and start.height == p.height
    end = product_geodesic(s, p, q, 1.0)
    assert np.array_equal(end.base, q.base) and end.height == q.height


def test_curve_length_examples():
    assert curve_length(euclidean(2), [[0, 0], [1, 0], [1, 1]]) == pytest.approx(2.0)
    ang = np.linspace(0, 2 * np.pi, 101)
    eq = np.stack([np.cos(ang), np.sin(ang), np.zeros_like(ang)], axis=-1)
    assert curve_length(sphere(1.0), eq) == pytest.approx(2 * np.pi, abs=1e-3)
    assert curve_length(euclidean(2), [[1.0, 2.0]]) == 0.0


# =============================================================================
# Segments
# =============================================================================

@pytest.mark.parametrize("m, x, y", [
    (sphere(1.0), [1, 0, 0], [0, 0.6, 0.8]),
    (hyperbolic(-1.0), [0.1, 0.3], [-0.5, 0.2]),
    (flat_torus((1.0, 1.0)), [0.1, 0.9], [0.8, 0.2]),
    (euclidean(3), [0, 1, 2], [3, -1, 0.5]),
])
def test_segment_constant_speed(m, x, y):
    seg = GeodesicSegment.between(m, x, y)
    t = np.linspace(0, 1, 33)
    speeds = m.norm(seg.eval_point(t), seg.eval_velocity(t))
    assert np.max(np.abs(speeds - seg.speed)) <= 1e-8
    assert seg.speed == pytest.approx(distance(m, x, y), abs=1e-12)


def test_equator_is_closed():
    seg = GeodesicSegment.from_initial(sphere(1.0), [1, 0, 0], [0, 2 * np.pi, 0])
    ok, gap, _ = seg.is_closed()
    assert ok and gap < 1e-9


def test_distance_axioms_on_samples():
    rng = np.random.default_rng(4)
    s = sphere(1.0)
    a, b, c = (random_sphere_points(rng, 500) for _ in range(3))
    assert np.max(np.abs(s.dist(a, b) - s.dist(b, a))) <= 1e-12
    assert np.min(s.dist(a, b) + s.dist(b, c) - s.dist(a, c)) >= -1e-10
    h = hyperbolic(-1.0)
    a, b, c = (rng.uniform(-0.5, 0.5, (500, 2)) for _ in range(3))
    assert np.max(np.abs(h.dist(a, b) - h.dist(b, a))) <= 1e-12
    assert np.min(h.dist(a, b) + h.dist(b, c) - h.dist(a, c)) >= -1e-10
    assert np.max(np.abs(h.dist(a, b) - h.norm(a, h.log(a, b)))) <= 1e-10
