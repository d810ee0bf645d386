"""Scalar fields on manifolds and their derivatives.

A :class:`ScalarField` wraps a batched evaluator and, optionally, analytic
Riemannian gradient and Laplace-Beltrami operators. Catalog fields are
built with :func:`make_catalog_field` from a plain dict::

    make_catalog_field(m, {"kind": "quadratic_distance", "center": [0, 0], "scale": 1})

Derivatives fall back to central finite differences along geodesics when
no analytic form is attached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (IncompatibleManifold, InvalidParameter, NumericallyUnstable,
                     UnknownCatalogId)
from .manifolds import Euclidean, FlatTorus, PoincareDisk, Sphere

FD_STEP_GRADIENT = 1e-6
FD_STEP_LAPLACIAN = 1e-4


class ScalarField:
    """Real function on a manifold.

    Parameters
    ----------
    manifold : Manifold
    fn : callable
        Batched evaluator ``fn(points) -> values``.
    gradient : callable, optional
        Riemannian gradient, returned as tangent components.
    laplacian : callable, optional
    catalog_id : str, optional
    params : dict, optional
    """

    def __init__(self, manifold, fn, gradient=None, laplacian=None,
                 catalog_id=None, params=None):
        self.manifold = manifold
        self._fn = fn
        self.analytic_gradient = gradient
        self.analytic_laplacian = laplacian
        self.catalog_id = catalog_id
        self.params = dict(params or {})

    def eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        return np.asarray(self._fn(x), dtype=np.float64)

    __call__ = eval

    def __repr__(self):
        return f"ScalarField({self.catalog_id or 'custom'}, {self.params})"

    def describe(self):
        return {"catalog_id": self.catalog_id or "custom", "params": _jsonable(self.params)}


@dataclass(frozen=True)
class StarPair:
    """Pair ``(f, h)`` tested for the two-function chord inequality."""

    f: ScalarField
    h: ScalarField

    def __post_init__(self):
        if self.f.manifold is not self.h.manifold:
            raise IncompatibleManifold("f and h must live on the same manifold")

    @property
    def manifold(self):
        return self.f.manifold


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


# -- radial helpers for constant-curvature manifolds ----------------------

def _log_ratio(m, r):
    """``s_K'(r) / s_K(r)`` for the manifold's constant curvature ``K``."""
    K = m.constant_curvature
    with np.errstate(divide="ignore", invalid="ignore"):
        if K == 0:
            return 1.0 / r
        if K > 0:
            a = np.sqrt(K)
            return a / np.tan(a * r)
        a = np.sqrt(-K)
        return a / np.tanh(a * r)


def _radial_laplacian(m, r, g1, g2):
    """Laplacian of ``g(d(x, c))`` from ``g'`` and ``g''``; valid inside the injectivity radius."""
    n = m.dim
    if n == 1:
        return g2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = g2 + (n - 1) * _log_ratio(m, r) * g1
    return val


def _unit_radial(m, x, center):
    """Outward unit radial direction ``-log_x(c)/d`` and the distance ``d``."""
    lg = m.log(x, center)
    d = m.dist(x, center)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(d[..., None] > 0, -lg / d[..., None], 0.0)
    return u, d


# -- catalog ---------------------------------------------------------------

def _constant(m, value):
    value = float(value)
    return ScalarField(
        m,
        lambda x: np.full(np.shape(x)[:-1], value),
        gradient=lambda x: np.zeros(np.shape(x)),
        laplacian=lambda x: np.zeros(np.shape(x)[:-1]),
        catalog_id="constant", params={"value": value})


def _quadratic_distance(m, center, scale=1.0):
    center = m.check_point(center)
    scale = float(scale)

    def fn(x):
        return scale * m.dist(x, center) ** 2

    def grad(x):
        # grad of d^2 is -2 log_x(c)
        return -2.0 * scale * m.log(x, center)

    lap = None
    if m.constant_curvature is not None:
        def lap(x):
            d = m.dist(x, center)
            with np.errstate(invalid="ignore"):
                val = scale * _radial_laplacian(m, d, 2.0 * d, 2.0 * np.ones_like(d))
            return np.where(d > 0, val, scale * 2.0 * m.dim)
    return ScalarField(m, fn, grad, lap, "quadratic_distance",
                       {"center": center, "scale": scale})


def _cosh_distance(m, center):
    if not isinstance(m, PoincareDisk):
        raise IncompatibleManifold("cosh_distance is defined on hyperbolic manifolds only")
    center = m.check_point(center)

    def fn(x):
        return np.cosh(m.dist(x, center))

    def grad(x):
        u, d = _unit_radial(m, x, center)
        return np.sinh(d)[..., None] * u

    def lap(x):
        d = m.dist(x, center)
        val = _radial_laplacian(m, d, np.sinh(d), np.cosh(d))
        return np.where(d > 0, val, float(m.dim))
    return ScalarField(m, fn, grad, lap, "cosh_distance", {"center": center})


def _height_z(m):
    if not isinstance(m, Sphere):
        raise IncompatibleManifold("height_z is defined on spheres only")
    ez = np.zeros(m.coord_dim)
    ez[-1] = 1.0

    def fn(x):
        return np.asarray(x)[..., -1].copy()

    def grad(x):
        return m.project(x, np.broadcast_to(ez, np.shape(x)))

    def lap(x):
        return -m.dim * np.asarray(x)[..., -1] / m.radius ** 2
    return ScalarField(m, fn, grad, lap, "height_z", {})


def _coordinate_quadratic(m, matrix, center=None, offset=0.0):
    """``(x - c)^T A (x - c) + offset`` on a euclidean space."""
    if not isinstance(m, Euclidean):
        raise IncompatibleManifold("coordinate_quadratic is defined on euclidean spaces only")
    A = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    if A.shape != (m.dim, m.dim):
        raise InvalidParameter(f"matrix must be {m.dim}x{m.dim}")
    c = np.zeros(m.dim) if center is None else m.check_point(center)
    offset = float(offset)
    S = A + A.T
    trace = float(np.trace(S))
    return ScalarField(
        m,
        lambda x: np.einsum("...i,ij,...j->...", x - c, A, x - c) + offset,
        gradient=lambda x: np.einsum("ij,...j->...i", S, x - c),
        laplacian=lambda x: np.full(np.shape(x)[:-1], trace),
        catalog_id="coordinate_quadratic",
        params={"matrix": A, "center": c, "offset": offset})


def _tent(m, center, peak=1.0, slope=1.0):
    center = m.check_point(center)
    peak, slope = float(peak), float(slope)

    def fn(x):
        return peak - slope * m.dist(x, center)

    def grad(x):
        u, _ = _unit_radial(m, x, center)
        return -slope * u

    lap = None
    if m.constant_curvature is not None:
        def lap(x):
            d = m.dist(x, center)
            return _radial_laplacian(m, d, -slope * np.ones_like(d), np.zeros_like(d))
    return ScalarField(m, fn, grad, lap, "tent",
                       {"center": center, "peak": peak, "slope": slope})


def _periodic_product(m, offset=0.5, amplitude=0.1):
    if not isinstance(m, FlatTorus):
        raise IncompatibleManifold("periodic_product is defined on flat tori only")
    offset, amplitude = float(offset), float(amplitude)
    w = 2.0 * np.pi / m.periods

    def fn(x):
        return offset + amplitude * np.prod(np.sin(w * x), axis=-1)

    def grad(x):
        s = np.sin(w * x)
        c = np.cos(w * x)
        out = np.empty(np.shape(x))
        for i in range(m.dim):
            others = np.prod(np.delete(s, i, axis=-1), axis=-1)
            out[..., i] = amplitude * w[i] * c[..., i] * others
        return out

    def lap(x):
        return -float(np.sum(w * w)) * (fn(x) - offset)
    return ScalarField(m, fn, grad, lap, "periodic_product",
                       {"offset": offset, "amplitude": amplitude})


def _exponential(m, rate):
    if not isinstance(m, Euclidean):
        raise IncompatibleManifold("exponential is defined on euclidean spaces only")
    a = np.atleast_1d(np.asarray(rate, dtype=np.float64))
    if a.shape != (m.dim,):
        raise InvalidParameter(f"rate must have {m.dim} entries")
    aa = float(a @ a)
    return ScalarField(
        m,
        lambda x: np.exp(x @ a),
        gradient=lambda x: np.exp(x @ a)[..., None] * a,
        laplacian=lambda x: aa * np.exp(x @ a),
        catalog_id="exponential", params={"rate": a})


def _perturbed(m, base, slack, sign, name):
    slack = float(slack)
    if slack < 0:
        raise InvalidParameter(f"{name}: slack must be nonnegative")
    if not isinstance(base, ScalarField):
        base = make_catalog_field(m, base)
    shift = sign * slack
    grad = base.analytic_gradient
    lap = base.analytic_laplacian
    return ScalarField(m, lambda x: base.eval(x) + shift, grad, lap, name,
                       {"base": base.describe(), "slack": slack})


CATALOG = {
    "constant": _constant,
    "coordinate_quadratic": _coordinate_quadratic,
    "cosh_distance": _cosh_distance,
    "exponential": _exponential,
    "height_z": _height_z,
    "periodic_product": _periodic_product,
    "perturbed_lower": lambda m, base, slack: _perturbed(m, base, slack, -1.0, "perturbed_lower"),
    "perturbed_upper": lambda m, base, slack: _perturbed(m, base, slack, 1.0, "perturbed_upper"),
    "quadratic_distance": _quadratic_distance,
    "tent": _tent,
}

CATALOG_PARAMS = {
    "constant": ["value"],
    "coordinate_quadratic": ["matrix", "center", "offset"],
    "cosh_distance": ["center"],
    "exponential": ["rate"],
    "height_z": [],
    "periodic_product": ["offset", "amplitude"],
    "perturbed_lower": ["base", "slack"],
    "perturbed_upper": ["base", "slack"],
    "quadratic_distance": ["center", "scale"],
    "tent": ["center", "peak", "slope"],
}


def make_catalog_field(m, spec):
    """Build a catalog field from ``{"kind": id, **params}``.

    ``spec`` may also be a ``(id, params)`` tuple.
    """
    if isinstance(spec, tuple):
        kind, params = spec
        params = dict(params)
    else:
        params = dict(spec)
        kind = params.pop("kind", None)
    if kind not in CATALOG:
        raise UnknownCatalogId(f"unknown field catalog id {kind!r}")
    if kind == "constant" and "value" not in params and "c" in params:
        params["value"] = params.pop("c")
    unknown = set(params) - set(CATALOG_PARAMS[kind])
    if unknown:
        raise InvalidParameter(f"{kind}: unexpected parameters {sorted(unknown)}")
    try:
        return CATALOG[kind](m, **params)
    except TypeError as exc:
        raise InvalidParameter(f"{kind}: {exc}") from None


# -- differential operators ---------------------------------------------------

def _fd_step(x):
    scale = float(np.max(np.sqrt(np.sum(np.asarray(x) ** 2, axis=-1)), initial=0.0))
    return FD_STEP_GRADIENT * max(1.0, scale)


def directional_derivative(f, x, u):
    """``df_x(u)``; analytic gradient when available, else central differences along ``exp``."""
    m = f.manifold
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if f.analytic_gradient is not None:
        return m.inner(x, f.analytic_gradient(x), u)
    eps = _fd_step(x)
    return (f.eval(m.exp(x, eps * u)) - f.eval(m.exp(x, -eps * u))) / (2.0 * eps)


def gradient(f, x):
    """Riemannian gradient as tangent components."""
    m = f.manifold
    x = np.asarray(x, dtype=np.float64)
    if f.analytic_gradient is not None:
        return f.analytic_gradient(x)
    frame = m.tangent_frame(x)
    out = np.zeros(x.shape)
    for i in range(m.dim):
        e = frame[..., i, :]
        out = out + directional_derivative(f, x, e)[..., None] * e
    return out


def laplacian(f, x):
    """Laplace-Beltrami value; analytic when cataloged, else normal-coordinate stencil."""
    m = f.manifold
    x = np.asarray(x, dtype=np.float64)
    if f.analytic_laplacian is not None:
        return f.analytic_laplacian(x)
    eps = FD_STEP_LAPLACIAN
    if eps >= m.injectivity_radius:
        raise NumericallyUnstable("Laplacian stencil exceeds the injectivity radius")
    frame = m.tangent_frame(x)
    centre = f.eval(x)
    total = np.zeros(x.shape[:-1])
    for i in range(m.dim):
        e = frame[..., i, :]
        try:
            fp = f.eval(m.exp(x, eps * e))
            fm = f.eval(m.exp(x, -eps * e))
        except Exception as exc:  # chart integration leaving its domain
            raise NumericallyUnstable(f"Laplacian stencil failed: {exc}") from exc
        total = total + (fp - 2.0 * centre + fm) / eps ** 2
    return total
