"""Chart-metric manifolds integrated with fixed-step RK4.

Three presets are available by name: ``flat``, ``stereographic-sphere`` and
``poincare-disk``. They are conformal (``g = exp(2 phi) I``) and run through
the compiled ``rk4_conformal`` kernel. A user-supplied metric callable goes
through a NumPy integrator with finite-difference Christoffel symbols.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import (InvalidParameter, LeftChartDomain, NonUniqueGeodesic,
                     SpeedDriftExceeded)
from .manifolds import Manifold, _dot, _sqnorm

PRESETS = ("flat", "poincare-disk", "stereographic-sphere")

_KIND = {"flat": _kernels._pykernels.FLAT,
         "stereographic-sphere": _kernels._pykernels.STEREOGRAPHIC,
         "poincare-disk": _kernels._pykernels.POINCARE}


class ChartMetric(Manifold):
    """Manifold given by metric coefficients ``g_ij`` on a coordinate chart.

    Parameters
    ----------
    preset : str, optional
        One of :data:`PRESETS`.
    metric : callable, optional
        ``metric(x) -> (..., n, n)`` for a custom chart; mutually exclusive
        with ``preset``.
    dim : int
    radius : float
        Sphere radius for ``stereographic-sphere``.
    curvature : float
        Curvature for ``poincare-disk``.
    steps : int
        RK4 steps used by ``exp`` (time 1).
    drift_tol : float
        Relative speed drift that raises :class:`SpeedDriftExceeded`.
    """

    name = "chart_metric"

    def __init__(self, preset=None, metric=None, dim=2, radius=1.0, curvature=-1.0,
                 steps=1000, drift_tol=1e-6, injectivity_radius=None,
                 curvature_bound_upper=None, finite_volume=False, domain_check=None):
        if (preset is None) == (metric is None):
            raise InvalidParameter("give exactly one of preset or metric")
        self.preset = preset
        self.steps = int(steps)
        self.drift_tol = float(drift_tol)
        self._metric = metric
        self._domain_check = domain_check
        rep = {"kind": "chart_metric", "dim": int(dim)}
        if preset is not None:
            if preset not in PRESETS:
                raise InvalidParameter(f"unknown chart preset {preset!r}")
            rep["preset"] = preset
            if preset == "flat":
                self.param = 1.0
                inj, kmax, fin = np.inf, 0.0, False
            elif preset == "stereographic-sphere":
                self.param = float(radius)
                rep["radius"] = self.param
                inj, kmax, fin = np.pi * self.param, 1.0 / self.param ** 2, True
            else:
                if not curvature < 0:
                    raise InvalidParameter("poincare-disk curvature must be negative")
                self.param = 1.0 / np.sqrt(-float(curvature))
                rep["curvature"] = float(curvature)
                inj, kmax, fin = np.inf, float(curvature), False
            self.kind = _KIND[preset]
        else:
            self.param = None
            self.kind = None
            if injectivity_radius is None or curvature_bound_upper is None:
                raise InvalidParameter(
                    "custom metrics need injectivity_radius and curvature_bound_upper")
            inj, kmax, fin = injectivity_radius, curvature_bound_upper, finite_volume
        if injectivity_radius is not None:
            inj = injectivity_radius
        super().__init__(dim, dim, kmax, inj, fin, None, rep)

    # -- metric -------------------------------------------------------
    def _factor(self, x):
        sq = _sqnorm(x)
        if self.preset == "flat":
            return np.ones(sq.shape)
        if self.preset == "stereographic-sphere":
            return 2.0 * self.param / (1.0 + sq)
        return 2.0 * self.param / (1.0 - sq)

    def metric(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self._metric is not None:
            return np.asarray(self._metric(x), dtype=np.float64)
        f = self._factor(x)
        return (f * f)[..., None, None] * np.eye(self.dim)

    def check_point(self, x):
        x = super().check_point(x)
        if self.preset == "poincare-disk" and np.any(_sqnorm(x) >= 1.0):
            raise LeftChartDomain("poincare-disk chart: point outside the unit disk")
        if self._domain_check is not None and not np.all(self._domain_check(x)):
            raise LeftChartDomain("point outside the chart domain")
        return x

    def inner(self, x, u, v):
        if self._metric is None:
            f = self._factor(np.asarray(x, dtype=np.float64))
            return f * f * _dot(u, v)
        g = self.metric(x)
        return np.einsum("...i,...ij,...j->...", u, g, v)

    def tangent_frame(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self._metric is None:
            f = self._factor(x)
            return np.eye(self.dim) / f[..., None, None]
        w, q = np.linalg.eigh(self.metric(x))
        inv_sqrt = np.einsum("...ij,...j,...kj->...ik", q, 1.0 / np.sqrt(w), q)
        return np.swapaxes(inv_sqrt, -1, -2)

    def rgrad(self, x, egrad):
        if self._metric is None:
            f = self._factor(np.asarray(x, dtype=np.float64))
            return np.asarray(egrad) / (f * f)[..., None]
        return np.linalg.solve(self.metric(x), np.asarray(egrad)[..., None])[..., 0]

    def christoffel(self, x, eps=1e-6):
        """Christoffel symbols ``Gamma[k, i, j]`` by central differences of ``g``."""
        x = np.asarray(x, dtype=np.float64)
        n = self.dim
        dg = np.empty(x.shape[:-1] + (n, n, n))
        for l in range(n):
            e = np.zeros(n)
            e[l] = eps
            dg[..., l, :, :] = (self.metric(x + e) - self.metric(x - e)) / (2 * eps)
        ginv = np.linalg.inv(self.metric(x))
        # dg[l, i, j] = d_l g_ij
        term = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
        # term[i, j, l] = d_j g_il + d_i g_jl - d_l g_ij
        return 0.5 * np.einsum("...kl,...ijl->...kij", ginv, term)

    # -- integration --------------------------------------------------
    def _rk4_generic(self, x, v, dt, steps, record):
        def accel(p, w):
            gam = self.christoffel(p)
            return -np.einsum("...kij,...i,...j->...k", gam, w, w)

        def speed(p, w):
            return np.sqrt(np.maximum(self.inner(p, w, w), 0.0))

        s0 = speed(x, v)
        drift = np.zeros(x.shape[0])
        left = np.zeros(x.shape[0], dtype=bool)
        xs, vs = [x], [v]
        for _ in range(steps):
            k1x, k1v = v, accel(x, v)
            k2x, k2v = v + 0.5 * dt * k1v, accel(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
            k3x, k3v = v + 0.5 * dt * k2v, accel(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
            k4x, k4v = v + dt * k3v, accel(x + dt * k3x, v + dt * k3v)
            x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
            v = v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
            if self._domain_check is not None:
                left |= ~np.asarray(self._domain_check(x), dtype=bool)
            with np.errstate(invalid="ignore", divide="ignore"):
                rel = np.where(s0 > 0, np.abs(speed(x, v) / s0 - 1.0), 0.0)
            drift = np.maximum(drift, rel)
            if record:
                xs.append(x)
                vs.append(v)
        if not record:
            xs, vs = [x], [v]
        return np.stack(xs, axis=1), np.stack(vs, axis=1), drift, left

    def _run(self, x, v, T, steps, record):
        x = np.asarray(x, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        x, v = np.broadcast_arrays(x, v)
        batch = x.shape[:-1]
        xf = np.ascontiguousarray(x.reshape(-1, self.dim))
        vf = np.ascontiguousarray(v.reshape(-1, self.dim)) * T
        dt = 1.0 / steps
        if self.kind is not None:
            xs, vs, drift, left = _kernels.rk4_conformal(
                xf, vf, dt, steps, self.kind, self.param, record)
        else:
            xs, vs, drift, left = self._rk4_generic(xf, vf, dt, steps, record)
        if np.any(left):
            raise LeftChartDomain("geodesic left the chart domain during integration")
        if np.any(drift > self.drift_tol):
            raise SpeedDriftExceeded(
                f"relative speed drift {float(np.max(drift)):.3g} exceeds "
                f"{self.drift_tol:.3g}; increase steps")
        vs = vs / T if T != 0 else vs
        n_rec = xs.shape[1]
        return (xs.reshape(batch + (n_rec, self.dim)),
                vs.reshape(batch + (n_rec, self.dim)))

    def integrate(self, x, v, T, steps):
        """Trajectory of the geodesic from ``(x, v)`` on ``[0, T]``.

        Returns a list of ``steps + 1`` ``(point, velocity)`` pairs.
        """
        x = self.check_point(x)
        v = self.check_tangent(x, v)
        if T == 0:
            return [(x.copy(), v.copy())]
        xs, vs = self._run(x[None], v[None], T, int(steps), True)
        return [(xs[0, i], vs[0, i]) for i in range(xs.shape[1])]

    def exp(self, x, v):
        x = np.asarray(x, dtype=np.float64)
        v = np.asarray(v, dtype=np.float64)
        xs, _ = self._run(x, v, 1.0, self.steps, False)
        return xs[..., 0, :]

    def geodesic_velocity(self, x, v, t):
        x, v = np.broadcast_arrays(np.asarray(x, float), np.asarray(v, float))
        t = np.asarray(t, dtype=np.float64)
        tt = np.broadcast_to(t, x.shape[:-1]) if t.ndim == 0 else t
        if np.all(tt == tt.flat[0]):
            t0 = float(tt.flat[0])
            if t0 == 0.0:
                return np.broadcast_to(v, np.broadcast_shapes(v.shape, tt.shape + (1,))).copy()
            steps = max(1, int(round(self.steps * t0)))
            xb = np.broadcast_to(x, tt.shape + (self.dim,))
            vb = np.broadcast_to(v, tt.shape + (self.dim,))
            _, vs = self._run(xb, vb * t0, 1.0, steps, False)
            return vs[..., 0, :] / t0
        return np.stack([self.geodesic_velocity(x, v, ti) for ti in tt.ravel()]).reshape(
            tt.shape + (self.dim,))

    def log(self, x, y, tol=1e-12, max_iter=50):
        """Inverse of ``exp`` by Newton shooting with a finite-difference Jacobian."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        x, y = np.broadcast_arrays(x, y)
        batch = x.shape[:-1]
        xf = x.reshape(-1, self.dim)
        yf = y.reshape(-1, self.dim)
        n = self.dim
        v = yf - xf
        eps = 1e-7
        for _ in range(max_iter):
            r = self.exp(xf, v) - yf
            err = np.max(np.abs(r)) if r.size else 0.0
            if err <= tol:
                break
            jac = np.empty((len(xf), n, n))
            for j in range(n):
                e = np.zeros(n)
                e[j] = eps
                jac[:, :, j] = (self.exp(xf, v + e) - self.exp(xf, v - e)) / (2 * eps)
            v = v - np.linalg.solve(jac, r[..., None])[..., 0]
        out = v.reshape(batch + (n,))
        if np.isfinite(self.injectivity_radius):
            self._raise_if_nonunique(self.norm(x, out))
        return out

    def dist(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        return self.norm(x, self.log(x, y))


def chart_metric(preset="flat", **kwargs):
    return ChartMetric(preset=preset, **kwargs)


# -- conversions used to cross-check chart presets against analytic backends --

def stereographic_coords(points, radius=1.0):
    """Chart coordinates of embedded sphere points (projection from the south pole)."""
    p = np.asarray(points, dtype=np.float64)
    return (p[..., :-1] / radius) / (1.0 + p[..., -1:] / radius)


def stereographic_point(u, radius=1.0):
    u = np.asarray(u, dtype=np.float64)
    sq = np.sum(u * u, axis=-1, keepdims=True)
    return radius * np.concatenate([2.0 * u, 1.0 - sq], axis=-1) / (1.0 + sq)


def stereographic_pushforward(points, vectors, radius=1.0):
    """Chart components of ambient tangent vectors at embedded sphere points."""
    p = np.asarray(points, dtype=np.float64) / radius
    w = np.asarray(vectors, dtype=np.float64) / radius
    denom = 1.0 + p[..., -1:]
    return w[..., :-1] / denom - p[..., :-1] * w[..., -1:] / denom ** 2
