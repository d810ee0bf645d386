"""Space-form volumes, geodesic balls and the two mean-value style inequalities.

Balls on constant-curvature manifolds are integrated in geodesic polar
coordinates, where the area element is exactly ``s_K(r)**(n-1)`` times the
round measure on unit directions. Chart metrics (2-D only) and dimensions
above three fall back to Monte Carlo with a reported standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .domains import random_unit_tangents
from .errors import InvalidParameter, PreconditionFailed, RadiusExceedsSphere, UnsupportedManifold
from .fields import laplacian
from .rng import stream

DEFAULT_RADIAL_NODES = 64
DEFAULT_ANGULAR_NODES = 256
DEFAULT_MC_SAMPLES = 200_000
DEFAULT_BOUNDARY_DIRECTIONS = 720
PRECONDITION_SAMPLES = 512
_SMALL_CURVATURE = 1e-2


def unit_sphere_area(n):
    """Area ``omega_{n-1}`` of the unit sphere in ``R^n`` (2 for ``n = 1``)."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def s_k(k, t):
    """Generalized sine: ``sin(sqrt(k) t)/sqrt(k)``, ``t`` or ``sinh(sqrt(-k) t)/sqrt(-k)``."""
    t = np.asarray(t, dtype=np.float64)
    if k > 0:
        a = math.sqrt(k)
        return np.sin(a * t) / a
    if k < 0:
        a = math.sqrt(-k)
        return np.sinh(a * t) / a
    return t


def space_form_ball_volume(k, n, R):
    """Volume of a radius-``R`` ball in the ``n``-dimensional space form of curvature ``k``."""
    k, n, R = float(k), int(n), float(R)
    if n < 1:
        raise InvalidParameter("dimension must be at least 1")
    if not R > 0:
        raise InvalidParameter("radius must be positive")
    if k > 0 and R > math.pi / math.sqrt(k) * (1.0 + 1e-12):
        raise RadiusExceedsSphere(f"radius {R} exceeds pi/sqrt(k) = {math.pi / math.sqrt(k)}")
    if n == 1:
        return 2.0 * R
    small = abs(k) * R * R < _SMALL_CURVATURE
    if n == 2 and not small:
        # 1 - cos x = 2 sin^2(x/2) avoids cancellation
        a = math.sqrt(abs(k))
        half = math.sin(0.5 * a * R) if k > 0 else math.sinh(0.5 * a * R)
        return 2.0 * math.pi * 2.0 * half * half / (a * a)
    if n == 2 and k == 0:
        return math.pi * R * R
    if n == 3 and not small:
        a = math.sqrt(abs(k))
        if k > 0:
            return 4.0 * math.pi * (2.0 * a * R - math.sin(2.0 * a * R)) / (4.0 * a ** 3)
        return 4.0 * math.pi * (math.sinh(2.0 * a * R) - 2.0 * a * R) / (4.0 * a ** 3)
    if n == 3 and k == 0:
        return 4.0 * math.pi * R ** 3 / 3.0
    val, _ = integrate.quad(lambda t: float(s_k(k, t)) ** (n - 1), 0.0, R,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return unit_sphere_area(n) * val


def _check_radius(m, radius):
    if not 0 < radius < m.injectivity_radius:
        raise InvalidParameter(
            f"radius {radius} must lie in (0, injectivity radius {m.injectivity_radius})")


def geodesic_sphere_area(m, p, xi):
    """Area of the geodesic sphere of radius ``xi`` on a constant-curvature manifold."""
    if m.constant_curvature is None:
        raise UnsupportedManifold(f"{m.name}: geodesic sphere area needs constant curvature")
    m.check_point(p)
    _check_radius(m, xi)
    return unit_sphere_area(m.dim) * float(s_k(m.constant_curvature, xi)) ** (m.dim - 1)


@dataclass(frozen=True)
class BallSpec:
    manifold: object
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", self.manifold.check_point(self.center))
        _check_radius(self.manifold, float(self.radius))


@dataclass
class BallInequalityReport:
    """``passed`` iff ``margin >= -3 * mc_std_error`` (minus a small quadrature allowance)."""

    name: str
    lhs: float
    rhs: float
    margin: float
    mc_std_error: float
    passed: bool
    components: dict = field(default_factory=dict)

    def to_dict(self):
        return {"name": self.name, "passed": bool(self.passed),
                "max_violation": float(-self.margin), "lhs": float(self.lhs),
                "rhs": float(self.rhs), "margin": float(self.margin),
                "mc_std_error": float(self.mc_std_error), "components": self.components}


# -- direction rules ------------------------------------------------------------

def _direction_rule(n, count):
    """Unit directions and weights summing to ``omega_{n-1}``; None for ``n > 3``."""
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    if n == 2:
        ang = 2.0 * np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1), np.full(count, 2.0 * np.pi / count)
    if n == 3:
        nz = max(2, count // 2)
        z, wz = np.polynomial.legendre.leggauss(nz)
        ph = 2.0 * np.pi * np.arange(count) / count
        Z, P = np.meshgrid(z, ph, indexing="ij")
        rho = np.sqrt(1.0 - Z * Z)
        dirs = np.stack([rho * np.cos(P), rho * np.sin(P), Z], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * np.full(count, 2.0 * np.pi / count)[None, :]).ravel()
        return dirs, w
    return None


def _points_at(m, p, radii, dirs):
    """``exp_p(r u)`` for every radius and frame direction, shape ``(R, D, coord)``."""
    frame = m.tangent_frame(p)
    tang = dirs @ frame
    v = np.asarray(radii)[:, None, None] * tang[None, :, :]
    return m.exp(np.broadcast_to(p, v.shape), v)


def _budget(budget):
    b = {"radial_nodes": DEFAULT_RADIAL_NODES, "angular_nodes": DEFAULT_ANGULAR_NODES,
         "mc_samples": DEFAULT_MC_SAMPLES, "method": "auto"}
    if budget is not None:
        unknown = set(budget) - set(b)
        if unknown:
            raise InvalidParameter(f"unknown ball budget keys {sorted(unknown)}")
        b.update(budget)
    return b


def _quadrature(m, f, spec, b):
    K = m.constant_curvature
    rule = _direction_rule(m.dim, int(b["angular_nodes"]))
    r, wr = np.polynomial.legendre.leggauss(int(b["radial_nodes"]))
    R = spec.radius
    r = 0.5 * R * (r + 1.0)
    wr = 0.5 * R * wr * s_k(K, r) ** (m.dim - 1)
    dirs, wd = rule
    vals = f.eval(_points_at(m, spec.center, r, dirs))
    return float(wr @ vals @ wd)


def _radial_sampler(K, n, R, rng, count):
    grid = np.linspace(0.0, R, 8193)
    dens = s_k(K, grid) ** (n - 1)
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    return np.interp(rng.uniform(0.0, cdf[-1], count), cdf, grid)


def _mc_constant(m, f, spec, b, seed):
    K = m.constant_curvature
    rng = stream(seed, "ball_integral")
    N = int(b["mc_samples"])
    r = _radial_sampler(K, m.dim, spec.radius, rng, N)
    c = np.broadcast_to(spec.center, (N, m.coord_dim))
    u = random_unit_tangents(m, c, rng)
    vals = f.eval(m.exp(c, r[:, None] * u))
    V = space_form_ball_volume(K, m.dim, spec.radius)
    return V * float(np.mean(vals)), V * float(np.std(vals, ddof=1)) / math.sqrt(N)


def _mc_chart(m, f, spec, b, seed):
    # uniform samples in a chart box, weighted by sqrt(det g); membership from the
    # boundary traced by radial geodesics (assumes the ball is star-shaped in the chart)
    if m.dim != 2:
        raise UnsupportedManifold("chart Monte Carlo integration supports 2-D charts only")
    p = spec.center
    ang = 2.0 * np.pi * np.arange(720) / 720
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    bnd = _points_at(m, p, [spec.radius], dirs)[0]
    rel = bnd - p
    b_ang = np.mod(np.arctan2(rel[:, 1], rel[:, 0]), 2 * np.pi)
    b_rad = np.hypot(rel[:, 0], rel[:, 1])
    order = np.argsort(b_ang)
    b_ang, b_rad = b_ang[order], b_rad[order]
    lo, hi = bnd.min(axis=0), bnd.max(axis=0)
    rng = stream(seed, "ball_integral_chart")
    N = int(b["mc_samples"])
    x = lo + (hi - lo) * rng.uniform(0.0, 1.0, (N, 2))
    d = x - p
    a = np.mod(np.arctan2(d[:, 1], d[:, 0]), 2 * np.pi)
    rad = np.interp(a, b_ang, b_rad, period=2 * np.pi)
    inside = np.hypot(d[:, 0], d[:, 1]) <= rad
    w = np.zeros(N)
    if np.any(inside):
        xi = x[inside]
        w[inside] = np.sqrt(np.linalg.det(m.metric(xi))) * f.eval(xi)
    area = float(np.prod(hi - lo))
    return area * float(np.mean(w)), area * float(np.std(w, ddof=1)) / math.sqrt(N)


def ball_integral(m, f, spec, budget=None, seed=0):
    """``(value, std_error)`` of ``int_B f dV``.

    Polar quadrature (standard error 0) on constant-curvature manifolds of
    dimension at most 3; Monte Carlo otherwise or when ``method="mc"``.
    """
    b = _budget(budget)
    method = b["method"]
    if method not in ("auto", "quadrature", "mc"):
        raise InvalidParameter(f"unknown integration method {method!r}")
    constant = m.constant_curvature is not None
    if method in ("auto", "quadrature") and constant and m.dim <= 3:
        return _quadrature(m, f, spec, b), 0.0
    if method == "quadrature":
        raise UnsupportedManifold(f"{m.name}: polar quadrature needs constant curvature, dim <= 3")
    if constant:
        return _mc_constant(m, f, spec, b, seed)
    return _mc_chart(m, f, spec, b, seed)


def _quadrature_allowance(scale):
    return 1e-12 * (1.0 + abs(scale))


def _uniform_ball_points(m, spec, count, seed, operation):
    rng = stream(seed, operation)
    c = np.broadcast_to(spec.center, (count, m.coord_dim))
    u = random_unit_tangents(m, c, rng)
    r = spec.radius * rng.uniform(0.0, 1.0, count) ** (1.0 / m.dim)
    pts = m.exp(c, r[:, None] * u)
    pts[0] = spec.center
    return pts


def check_subharmonic_mean_inequality(m, f, spec, budget=None, seed=0, tolerance=1e-8,
                                      curvature_bound=None):
    """Check ``f(p) <= (1/V_s(R)) int_B f dV`` for sampled-subharmonic, nonnegative ``f``.

    ``V_s`` is the space-form ball volume at ``curvature_bound`` (default
    ``m.curvature_bound_upper``).

    Raises
    ------
    PreconditionFailed
        When ``f < -tolerance`` or ``laplacian(f) < -tolerance`` at a sample.
    """
    s = m.curvature_bound_upper if curvature_bound is None else float(curvature_bound)
    if s < m.curvature_bound_upper:
        raise PreconditionFailed(f"curvature bound {s} is below the manifold's bound "
                                 f"{m.curvature_bound_upper}")
    pts = _uniform_ball_points(m, spec, PRECONDITION_SAMPLES, seed, "subharmonic_precondition")
    fv = f.eval(pts)
    if np.min(fv) < -tolerance:
        i = int(np.argmin(fv))
        raise PreconditionFailed(f"f is negative ({fv[i]:.3g}) on the ball", pts[i].tolist())
    lap = laplacian(f, pts)
    if np.min(lap) < -tolerance:
        i = int(np.argmin(lap))
        raise PreconditionFailed(f"f is not subharmonic (laplacian {lap[i]:.3g})",
                                 pts[i].tolist())
    lhs = float(f.eval(spec.center))
    value, se = ball_integral(m, f, spec, budget, seed)
    V = space_form_ball_volume(s, m.dim, spec.radius)
    rhs = value / V
    margin = rhs - lhs
    guard = 3.0 * se + (_quadrature_allowance(rhs) if se == 0.0 else 0.0)
    return BallInequalityReport(
        "check_subharmonic_mean_inequality", lhs, rhs, margin, se, margin >= -guard,
        {"volume_V_s": V, "curvature_bound": s, "radius": spec.radius, "integral": value,
         "min_sampled_f": float(np.min(fv)), "min_sampled_laplacian": float(np.min(lap)),
         "precondition_samples": PRECONDITION_SAMPLES})


def _boundary_rule(m, count):
    rule = _direction_rule(m.dim, count)
    if rule is None:
        raise UnsupportedManifold("boundary sampling supports dimension <= 3")
    return rule


def check_curvature_sandwich_bound(m, pair, k, p, xi, budget=None, seed=0, tolerance=1e-8,
                                   outer_radius=None):
    """Check ``f(p) <= 3 omega / (2 V_s) * max_{boundary} h`` and report every chain term.

    ``k`` is the separator (estimate or field). The chain follows the
    argument: ``f(p) <= k(p) <= mean of k over the ball``, the boundary
    form of that mean, and finally the boundary maximum of ``k`` and ``h``.
    Both the arithmetically consistent boundary expression (factor
    ``1/(2 V_s)`` on both terms) and the expression with factor ``1/V_s`` on
    the boundary integral are reported.
    """
    R = xi if outer_radius is None else float(outer_radius)
    if xi > R:
        raise PreconditionFailed(f"ball radius {xi} exceeds outer radius {R}")
    spec = BallSpec(m, p, xi)
    _check_radius(m, R)
    s = m.curvature_bound_upper
    pts = _uniform_ball_points(m, spec, PRECONDITION_SAMPLES, seed, "sandwich_precondition")
    kv = k.eval(pts)
    if np.min(kv) < -tolerance:
        i = int(np.argmin(kv))
        raise PreconditionFailed(f"separator is negative ({kv[i]:.3g}) on the ball",
                                 pts[i].tolist())
    b = _budget(budget)
    V = space_form_ball_volume(s, m.dim, xi)
    omega = geodesic_sphere_area(m, spec.center, xi)
    n_dirs = DEFAULT_BOUNDARY_DIRECTIONS if m.dim == 2 else int(b["angular_nodes"])
    dirs, wd = _boundary_rule(m, n_dirs)
    bnd = _points_at(m, spec.center, [xi], dirs)[0]
    kb = k.eval(bnd)
    hb = pair.h.eval(bnd)
    # geodesic spheres in constant curvature are round, so direction weights are exact
    boundary_int_k = omega * float(wd @ kb) / float(np.sum(wd))
    lhs = float(pair.f.eval(spec.center))
    k_p = float(k.eval(spec.center))
    int_k, se = ball_integral(m, k, spec, budget, seed)
    max_h = float(np.max(hb))
    max_k = float(np.max(kb))
    factor = 3.0 * omega / (2.0 * V)
    rhs = factor * max_h
    margin = rhs - lhs
    chain = {
        "f_p": lhs,
        "k_p": k_p,
        "mean_value_bound": int_k / V,
        "boundary_form_consistent": omega * k_p / (2.0 * V) + boundary_int_k / (2.0 * V),
        "boundary_form_as_written": omega * k_p / (2.0 * V) + boundary_int_k / V,
        "max_boundary_k_bound": factor * max_k,
        "final_bound": rhs,
    }
    return BallInequalityReport(
        "check_curvature_sandwich_bound", lhs, rhs, margin, se, lhs <= rhs + tolerance,
        {"volume_V_s": V, "area_omega_M": omega, "curvature_bound": s, "radius": xi,
         "outer_radius": R, "integral_k": int_k, "boundary_integral_k": boundary_int_k,
         "max_boundary_h": max_h, "max_boundary_k": max_k, "boundary_directions": len(dirs),
         "constant_factor": factor, "chain": chain})
