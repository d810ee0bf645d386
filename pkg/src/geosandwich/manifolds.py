"""Catalog manifolds with closed-form geodesics.

Points and tangent vectors are plain float arrays whose last axis holds
coordinates; every method broadcasts over leading axes. Representations:

* ``Euclidean(n)``: points in R^n.
* ``Sphere(radius, dim)``: embedded points in R^(dim+1) with norm ``radius``;
  tangent vectors are ambient vectors orthogonal to the base point.
* ``PoincareDisk(curvature, dim)``: points in the open unit ball with metric
  ``4 rho^2 / (1 - |x|^2)^2``, ``rho = 1/sqrt(-curvature)``; tangent vectors
  are coordinate components.
* ``FlatTorus(periods)``: points reduced into ``[0, period)`` per axis.

The chart-metric backend lives in :mod:`geosandwich.charts`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import InvalidPoint, InvalidTangent, NonUniqueGeodesic

_UNIQUE_MARGIN = 1e-12


def _as_float(x):
    return np.asarray(x, dtype=np.float64)


def _dot(u, v):
    # einsum is much faster than sum(u * v) over a short trailing axis
    u, v = np.broadcast_arrays(u, v)
    return np.einsum("...i,...i->...", u, v)


def _sqnorm(v):
    return _dot(v, v)


class Manifold:
    """Common interface of every manifold backend.

    Attributes
    ----------
    name : str
    dim : int
        Intrinsic dimension.
    coord_dim : int
        Length of the coordinate vectors used for points and tangents.
    curvature_bound_upper : float
        Upper bound ``s`` on sectional curvature.
    injectivity_radius : float
        May be ``inf``.
    finite_volume : bool
    constant_curvature : float or None
        Sectional curvature when it is constant and analytically known.
    """

    name = "manifold"
    compact = False

    def __init__(self, dim, coord_dim, curvature_bound_upper, injectivity_radius,
                 finite_volume, constant_curvature, representation):
        if int(dim) < 1:
            raise ValueError("dimension must be at least 1")
        if not injectivity_radius > 0:
            raise ValueError("injectivity radius must be positive")
        self.dim = int(dim)
        self.coord_dim = int(coord_dim)
        self.curvature_bound_upper = float(curvature_bound_upper)
        self.injectivity_radius = float(injectivity_radius)
        self.finite_volume = bool(finite_volume)
        self.constant_curvature = constant_curvature
        self.representation = dict(representation)
        self._frozen = True

    def __setattr__(self, key, value):
        if getattr(self, "_frozen", False):
            raise AttributeError(f"{type(self).__name__} is immutable")
        object.__setattr__(self, key, value)

    def __repr__(self):
        params = ", ".join(f"{k}={v!r}" for k, v in self.representation.items()
                           if k != "kind")
        return f"{type(self).__name__}({params})"

    def describe(self):
        """JSON-friendly summary used in reports."""
        rep = {k: (list(v) if isinstance(v, tuple) else v)
               for k, v in self.representation.items()}
        return {
            "name": self.name,
            "dim": self.dim,
            "representation": rep,
            "curvature_bound_upper": self.curvature_bound_upper,
            "injectivity_radius": self.injectivity_radius,
            "finite_volume": self.finite_volume,
        }

    # -- validation -----------------------------------------------------
    def check_point(self, x):
        x = _as_float(x)
        if x.shape[-1:] != (self.coord_dim,):
            raise InvalidPoint(
                f"{self.name}: expected {self.coord_dim} coordinates, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidPoint(f"{self.name}: non-finite coordinates")
        return x

    def check_tangent(self, x, v):
        v = _as_float(v)
        if v.shape[-1:] != (self.coord_dim,):
            raise InvalidTangent(
                f"{self.name}: expected {self.coord_dim} components, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidTangent(f"{self.name}: non-finite tangent components")
        return v

    def origin(self):
        return np.zeros(self.coord_dim)

    # -- metric ---------------------------------------------------------
    def inner(self, x, u, v):
        return _dot(u, v)

    def norm(self, x, v):
        return np.sqrt(np.maximum(self.inner(x, v, v), 0.0))

    def tangent_frame(self, x):
        """Orthonormal tangent basis at ``x``, shape ``(..., dim, coord_dim)``."""
        x = _as_float(x)
        eye = np.eye(self.dim, self.coord_dim)
        return np.broadcast_to(eye, x.shape[:-1] + eye.shape).copy()

    def project(self, x, w):
        """Orthogonal projection of a coordinate vector onto ``T_x M``."""
        return _as_float(w)

    def rgrad(self, x, egrad):
        """Riemannian gradient from coordinate (or ambient) partial derivatives."""
        return self.project(x, egrad)

    # -- geodesics ------------------------------------------------------
    def exp(self, x, v):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def dist(self, x, y):
        raise NotImplementedError

    def geodesic_velocity(self, x, v, t):
        """Velocity at time ``t`` of the geodesic ``s -> exp(x, s v)``."""
        x, v = np.broadcast_arrays(_as_float(x), _as_float(v))
        t = np.asarray(t, dtype=np.float64)[..., None]
        y = self.exp(x, v)
        p = self.exp(x, t * v)
        fwd = self.log(p, y)
        bwd = self.log(p, x)
        with np.errstate(invalid="ignore", divide="ignore"):
            vel = np.where(t <= 0.5, fwd / (1.0 - t), -bwd / t)
        return np.where(t == 0.0, v, vel)

    def _raise_if_nonunique(self, d):
        if not np.isfinite(self.injectivity_radius):
            return
        bad = d >= self.injectivity_radius * (1.0 - _UNIQUE_MARGIN)
        if np.any(bad):
            worst = float(np.max(np.where(bad, d, -np.inf)))
            raise NonUniqueGeodesic(
                f"{self.name}: points at distance {worst:.12g} >= injectivity "
                f"radius {self.injectivity_radius:.12g}")


class Euclidean(Manifold):
    name = "euclidean"

    def __init__(self, dim):
        super().__init__(dim, dim, 0.0, np.inf, False, 0.0,
                         {"kind": "euclidean", "dim": int(dim)})

    def exp(self, x, v):
        return _as_float(x) + _as_float(v)

    def log(self, x, y):
        return _as_float(y) - _as_float(x)

    def dist(self, x, y):
        return np.sqrt(_sqnorm(_as_float(y) - _as_float(x)))

    def geodesic_velocity(self, x, v, t):
        x, v = np.broadcast_arrays(_as_float(x), _as_float(v))
        t = np.asarray(t, dtype=np.float64)
        return np.broadcast_to(v, np.broadcast_shapes(v.shape, t.shape + (1,))).copy()


class Sphere(Manifold):
    name = "sphere"
    compact = True

    def __init__(self, radius=1.0, dim=2):
        radius = float(radius)
        if not radius > 0:
            raise ValueError("sphere radius must be positive")
        self.radius = radius
        super().__init__(dim, dim + 1, 1.0 / radius ** 2, np.pi * radius, True,
                         1.0 / radius ** 2,
                         {"kind": "sphere", "radius": radius, "dim": int(dim)})

    def origin(self):
        p = np.zeros(self.coord_dim)
        p[-1] = self.radius
        return p

    def check_point(self, x):
        x = super().check_point(x)
        err = np.abs(np.sqrt(_sqnorm(x)) - self.radius)
        if np.any(err > 1e-12 * max(1.0, self.radius)):
            raise InvalidPoint(
                f"sphere: point off the sphere by {float(np.max(err)):.3g}")
        return x

    def check_tangent(self, x, v):
        v = super().check_tangent(x, v)
        off = np.abs(_dot(_as_float(x), v)) / self.radius
        scale = np.maximum(1.0, np.sqrt(_sqnorm(v)))
        if np.any(off > 1e-10 * scale):
            raise InvalidTangent("sphere: tangent vector not orthogonal to its base point")
        return v

    def normalize(self, x):
        x = _as_float(x)
        return self.radius * x / np.sqrt(_sqnorm(x))[..., None]

    def project(self, x, w):
        x = _as_float(x)
        w = _as_float(w)
        return w - (_dot(x, w) / self.radius ** 2)[..., None] * x

    def tangent_frame(self, x):
        xn = _as_float(x) / self.radius
        m = self.coord_dim
        k = np.argmin(xn, axis=-1)
        ek = np.eye(m)[k]
        w = xn - ek
        ww = _sqnorm(w)[..., None, None]
        # Householder reflection sending e_k to x; its other columns span T_x
        H = np.eye(m) - 2.0 * w[..., :, None] * w[..., None, :] / ww
        cols = np.swapaxes(H, -1, -2)
        keep = np.arange(m)[None, :] != np.reshape(k, (-1, 1))
        flat = cols.reshape(-1, m, m)[keep.reshape(-1, m)]
        return flat.reshape(xn.shape[:-1] + (self.dim, m))

    def exp(self, x, v):
        x = _as_float(x)
        v = _as_float(v)
        nv = np.sqrt(_sqnorm(v))[..., None]
        theta = nv / self.radius
        with np.errstate(invalid="ignore", divide="ignore"):
            direction = np.where(nv > 0.0, v / nv, 0.0)
        y = np.cos(theta) * x + self.radius * np.sin(theta) * direction
        return self.normalize(y)

    def _log_parts(self, x, y):
        x = _as_float(x) / self.radius
        y = _as_float(y) / self.radius
        c = _dot(x, y)
        w = y - c[..., None] * x
        s = np.sqrt(_sqnorm(w))
        theta = np.arctan2(s, c)
        return w, s, theta

    def log(self, x, y):
        w, s, theta = self._log_parts(x, y)
        self._raise_if_nonunique(self.radius * theta)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(s[..., None] > 0.0,
                           (self.radius * theta / s)[..., None] * w, 0.0)
        return out

    def dist(self, x, y):
        return self.radius * self._log_parts(x, y)[2]

    def geodesic_velocity(self, x, v, t):
        x, v = np.broadcast_arrays(_as_float(x), _as_float(v))
        t = np.asarray(t, dtype=np.float64)[..., None]
        nv = np.sqrt(_sqnorm(v))[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            direction = np.where(nv > 0.0, v / nv, 0.0)
        ang = t * nv / self.radius
        return -(nv / self.radius) * np.sin(ang) * x + nv * np.cos(ang) * direction


class PoincareDisk(Manifold):
    name = "hyperbolic"

    def __init__(self, curvature=-1.0, dim=2):
        curvature = float(curvature)
        if not curvature < 0:
            raise ValueError("hyperbolic curvature must be negative")
        self.scale = 1.0 / np.sqrt(-curvature)
        super().__init__(dim, dim, curvature, np.inf, False, curvature,
                         {"kind": "hyperbolic", "curvature": curvature, "dim": int(dim)})

    def check_point(self, x):
        x = super().check_point(x)
        if np.any(_sqnorm(x) >= 1.0):
            raise InvalidPoint("hyperbolic: point outside the open unit disk")
        return x

    def conformal_factor(self, x):
        return 2.0 / (1.0 - _sqnorm(_as_float(x)))

    def inner(self, x, u, v):
        lam = self.scale * self.conformal_factor(x)
        return lam * lam * _dot(u, v)

    def tangent_frame(self, x):
        x = _as_float(x)
        lam = self.scale * self.conformal_factor(x)
        eye = np.eye(self.dim)
        return eye / lam[..., None, None]

    def rgrad(self, x, egrad):
        lam = self.scale * self.conformal_factor(x)
        return _as_float(egrad) / (lam * lam)[..., None]

    @staticmethod
    def mobius_add(x, y):
        x = _as_float(x)
        y = _as_float(y)
        xy = _dot(x, y)[..., None]
        xx = _sqnorm(x)[..., None]
        yy = _sqnorm(y)[..., None]
        num = (1.0 + 2.0 * xy + yy) * x + (1.0 - xx) * y
        den = 1.0 + 2.0 * xy + xx * yy
        return num / den

    def exp(self, x, v):
        x = _as_float(x)
        v = _as_float(v)
        nv = np.sqrt(_sqnorm(v))[..., None]
        lam = self.conformal_factor(x)[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            step = np.where(nv > 0.0, np.tanh(0.5 * lam * nv) * v / nv, 0.0)
        return self.mobius_add(x, step)

    def _diff(self, x, y):
        w = self.mobius_add(-_as_float(x), y)
        nw = np.sqrt(_sqnorm(w))
        return w, np.minimum(nw, 1.0 - 1e-16)

    def log(self, x, y):
        w, nw = self._diff(x, y)
        lam = self.conformal_factor(x)
        with np.errstate(invalid="ignore", divide="ignore"):
            coef = np.where(nw > 0.0, (2.0 / lam) * np.arctanh(nw) / nw, 0.0)
        return coef[..., None] * w

    def dist(self, x, y):
        return 2.0 * self.scale * np.arctanh(self._diff(x, y)[1])


class FlatTorus(Manifold):
    name = "flat_torus"
    compact = True

    def __init__(self, periods=(1.0, 1.0)):
        periods = tuple(float(p) for p in np.atleast_1d(periods))
        if not all(p > 0 for p in periods):
            raise ValueError("torus periods must be positive")
        self.periods = np.array(periods)
        n = len(periods)
        self._shifts = np.array(list(itertools.product((-1.0, 0.0, 1.0), repeat=n)))
        super().__init__(n, n, 0.0, 0.5 * min(periods), True, 0.0,
                         {"kind": "flat_torus", "periods": periods})

    def reduce(self, x):
        x = _as_float(x)
        r = np.mod(x, self.periods)
        return np.where(r >= self.periods, r - self.periods, r)

    def check_point(self, x):
        return self.reduce(super().check_point(x))

    def exp(self, x, v):
        return self.reduce(_as_float(x) + _as_float(v))

    def _candidates(self, x, y):
        d = self.reduce(y) - self.reduce(x)
        cand = d[..., None, :] + self._shifts * self.periods
        norms = _sqnorm(cand)
        # argmin returns the first minimum, i.e. the lexicographically smallest shift
        idx = np.argmin(norms, axis=-1)
        best = np.take_along_axis(cand, idx[..., None, None], axis=-2)[..., 0, :]
        return best

    def log(self, x, y):
        v = self._candidates(x, y)
        self._raise_if_nonunique(np.sqrt(_sqnorm(v)))
        return v

    def dist(self, x, y):
        return np.sqrt(_sqnorm(self._candidates(x, y)))

    def geodesic_velocity(self, x, v, t):
        x, v = np.broadcast_arrays(_as_float(x), _as_float(v))
        t = np.asarray(t, dtype=np.float64)
        return np.broadcast_to(v, np.broadcast_shapes(v.shape, t.shape + (1,))).copy()


# -- constructors -------------------------------------------------------

def euclidean(n=2):
    return Euclidean(n)


def sphere(radius=1.0, dim=2):
    return Sphere(radius, dim)


def hyperbolic(curvature=-1.0, dim=2):
    return PoincareDisk(curvature, dim)


def flat_torus(periods=(1.0, 1.0)):
    return FlatTorus(periods)


# -- operations ---------------------------------------------------------

def geodesic_point(m, x, y, t):
    """Point ``sigma_xy(t)`` on the minimal geodesic from ``x`` to ``y``."""
    x = m.check_point(x)
    y = m.check_point(y)
    v = m.log(x, y)
    t = np.asarray(t, dtype=np.float64)
    out = m.exp(x, t[..., None] * v)
    # endpoints are returned exactly
    out = np.where(t[..., None] == 0.0, x, out)
    return np.where(t[..., None] == 1.0, y, out)


def exp_map(m, x, v, return_info=False):
    """Exponential map; ``return_info`` adds whether ``|v|`` reached the injectivity radius."""
    x = m.check_point(x)
    v = m.check_tangent(x, v)
    y = m.exp(x, v)
    if return_info:
        beyond = bool(np.any(m.norm(x, v) >= m.injectivity_radius))
        return y, {"beyond_injectivity_radius": beyond}
    return y


def log_map(m, x, y):
    x = m.check_point(x)
    y = m.check_point(y)
    return m.log(x, y)


def distance(m, x, y):
    x = m.check_point(x)
    y = m.check_point(y)
    return m.dist(x, y)


def curve_length(m, path):
    """Sum of geodesic distances between consecutive points of ``path``."""
    pts = m.check_point(np.atleast_2d(path))
    if len(pts) < 2:
        return 0.0
    a, b = pts[:-1], pts[1:]
    m._raise_if_nonunique(m.dist(a, b))
    return float(np.sum(m.dist(a, b)))


def geodesic_integrate(m, x, v, T, steps):
    """RK4 integration of the geodesic equation on a chart-metric manifold."""
    from .charts import ChartMetric
    if not isinstance(m, ChartMetric):
        from .errors import UnsupportedManifold
        raise UnsupportedManifold("geodesic_integrate needs a chart_metric manifold")
    return m.integrate(x, v, T, steps)


@dataclass(frozen=True)
class ProductPoint:
    """Point ``(base, height)`` of the product ``M x R``."""

    base: np.ndarray
    height: float


def product_geodesic(m, p, q, t):
    """Geodesic of ``M x R``: minimal geodesic in ``M``, affine in height."""
    base = geodesic_point(m, p.base, q.base, t)
    t = float(t)
    if t == 0.0:
        return ProductPoint(m.check_point(p.base), p.height)
    if t == 1.0:
        return ProductPoint(m.check_point(q.base), q.height)
    return ProductPoint(base, (1.0 - t) * p.height + t * q.height)


@dataclass(frozen=True)
class GeodesicSegment:
    """Constant-speed geodesic ``t -> exp(start, t * velocity)`` on ``[0, 1]``."""

    manifold: Manifold
    start: np.ndarray
    velocity: np.ndarray
    end: np.ndarray

    @classmethod
    def between(cls, m, x, y):
        x = m.check_point(x)
        y = m.check_point(y)
        return cls(m, x, m.log(x, y), y)

    @classmethod
    def from_initial(cls, m, x, v):
        x = m.check_point(x)
        v = m.check_tangent(x, v)
        return cls(m, x, v, m.exp(x, v))

    @property
    def speed(self):
        return float(self.manifold.norm(self.start, self.velocity))

    def eval_point(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.manifold.exp(self.start, t[..., None] * self.velocity)

    def eval_velocity(self, t):
        return self.manifold.geodesic_velocity(self.start, self.velocity, t)

    def is_closed(self, tol=1e-9):
        m = self.manifold
        p0, p1 = self.eval_point(0.0), self.eval_point(1.0)
        v0, v1 = self.eval_velocity(0.0), self.eval_velocity(1.0)
        gap = float(m.dist(p0, p1))
        vgap = float(np.sqrt(_sqnorm(v1 - v0)))
        return gap <= tol and vgap <= tol * max(1.0, self.speed), gap, vgap
