"""Sampling regions, chord geometry and node grids.

A :class:`Domain` is either the whole (compact) manifold or a geodesic ball.
It supplies random points for the sampled checks, the distance a geodesic
can travel before leaving the region, and a node grid on which iterated
separator passes are stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import norm as _normal
from scipy.stats import qmc

from . import _kernels
from .errors import InvalidParameter
from .manifolds import Euclidean, FlatTorus, PoincareDisk, Sphere

DEFAULT_BALL_FRACTION = 0.4
FALLBACK_BALL_RADIUS = 1.0


@dataclass(frozen=True)
class Domain:
    """Sampling region.

    ``kind`` is ``"whole"`` (compact manifold) or ``"ball"``. ``reach`` caps
    the chord length on each side of a query point for whole domains; balls
    use the exit distance instead.
    """

    kind: str
    center: np.ndarray
    radius: float
    reach: float

    def describe(self):
        out = {"kind": self.kind, "center": np.asarray(self.center).tolist()}
        if self.kind == "ball":
            out["radius"] = self.radius
        else:
            out["reach"] = self.reach
        return out

    def contains(self, m, x, rtol=1e-9):
        if self.kind == "whole":
            return np.ones(np.shape(x)[:-1], dtype=bool)
        return m.dist(self.center, x) <= self.radius * (1.0 + rtol) + 1e-12


def whole_domain(m, reach=None):
    if not m.compact:
        raise InvalidParameter(f"{m.name} is not compact; use a ball domain")
    if reach is None:
        if isinstance(m, Sphere):
            reach = np.pi * m.radius
        else:
            reach = float(np.max(m.periods))
    return Domain("whole", m.origin(), np.inf, float(reach))


def ball_domain(m, center=None, radius=None):
    center = m.origin() if center is None else m.check_point(center)
    if radius is None:
        inj = m.injectivity_radius
        radius = DEFAULT_BALL_FRACTION * inj if np.isfinite(inj) else FALLBACK_BALL_RADIUS
    radius = float(radius)
    if not 0 < radius < m.injectivity_radius:
        raise InvalidParameter("ball radius must lie in (0, injectivity radius)")
    return Domain("ball", center, radius, 2.0 * radius)


def default_domain(m, center=None, radius=None):
    """Whole manifold when compact, otherwise a geodesic ball."""
    if m.compact and center is None and radius is None:
        return whole_domain(m)
    return ball_domain(m, center, radius)


# -- random sampling -----------------------------------------------------

def random_unit_tangents(m, x, rng):
    """One uniformly random unit tangent vector per point of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    frame = m.tangent_frame(x)
    g = rng.standard_normal(x.shape[:-1] + (m.dim,))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return np.einsum("...i,...ij->...j", g, frame)


def sample_points(m, domain, count, rng, include_center=False):
    """Random points of ``domain`` (volume-uniform for whole domains)."""
    count = int(count)
    if domain.kind == "whole":
        if isinstance(m, Sphere):
            g = rng.standard_normal((count, m.coord_dim))
            pts = m.normalize(g)
        elif isinstance(m, FlatTorus):
            pts = rng.uniform(0.0, 1.0, (count, m.dim)) * m.periods
        else:
            raise InvalidParameter(f"cannot sample the whole of {m.name}")
    else:
        c = np.broadcast_to(domain.center, (count, m.coord_dim))
        u = random_unit_tangents(m, c, rng)
        r = domain.radius * rng.uniform(0.0, 1.0, count) ** (1.0 / m.dim)
        pts = m.exp(c, r[:, None] * u)
    if include_center and count > 0:
        pts = np.array(pts, copy=True)
        pts[0] = domain.center
    return pts


def sample_pairs(m, domain, count, seed_stream, partner_stream, max_redraw=100):
    """Point pairs with a unique minimal geodesic between them.

    Returns ``(x, y, redraws)``; only partners are redrawn, so the first
    ``k`` base points coincide with ``sample_points(..., k, ...)``.
    """
    x = sample_points(m, domain, count, seed_stream, include_center=True)
    y = sample_points(m, domain, count, partner_stream)
    redraws = 0
    limit = m.injectivity_radius * (1.0 - 1e-9)
    for _ in range(max_redraw):
        bad = m.dist(x, y) >= limit
        if not np.any(bad):
            break
        k = int(np.sum(bad))
        redraws += k
        y[bad] = sample_points(m, domain, k, partner_stream)
    else:
        keep = m.dist(x, y) < limit
        x, y = x[keep], y[keep]
    return x, y, redraws


# -- chord geometry ---------------------------------------------------------

def direction_coefficients(dim, count):
    """Nested unit directions in frame coordinates, shape ``(D, dim)``.

    ``u`` and ``-u`` give the same chord family, so only a half-sphere is
    needed. Doubling ``count`` keeps every previous direction.
    """
    count = int(count)
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        ang = np.pi * np.arange(count) / count
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    halton = qmc.Halton(d=dim, scramble=False)
    halton.fast_forward(1)
    u = halton.random(count)
    g = _normal.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=-1, keepdims=True)


def length_fractions(count):
    """Geometric grid in ``(0, 1]`` with ratio ``2**(-8/count)``; nested under doubling."""
    count = int(count)
    return 2.0 ** (-np.arange(count) * 8.0 / count)


def exit_lengths(m, domain, x, u):
    """Distance along the unit-speed geodesic ``s -> exp(x, s u)`` to the ball boundary.

    Constant-curvature manifolds use the law of cosines; other manifolds
    fall back to vectorized bisection.
    """
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if domain.kind == "whole":
        return np.full(np.broadcast_shapes(x.shape, u.shape)[:-1], domain.reach)
    x, u = np.broadcast_arrays(x, u)
    R = domain.radius
    c = np.broadcast_to(domain.center, x.shape)
    K = m.constant_curvature
    if K is None:
        return _exit_bisect(m, domain, x, u)
    d0 = m.dist(x, c)
    lg = m.log(x, c)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_a = np.where(d0 > 0, -m.inner(x, u, lg) / d0, 1.0)
    cos_a = np.clip(cos_a, -1.0, 1.0)
    if K == 0:
        disc = R * R - d0 * d0 * (1.0 - cos_a * cos_a)
        s = -d0 * cos_a + np.sqrt(np.maximum(disc, 0.0))
    elif K < 0:
        rho = 1.0 / np.sqrt(-K)
        D0, Rr = d0 / rho, R / rho
        A = np.cosh(D0)
        B = np.sinh(D0) * cos_a
        C = np.cosh(Rr)
        w = (C + np.sqrt(np.maximum(C * C - A * A + B * B, 0.0))) / (A + B)
        s = rho * np.log(w)
    else:
        r = 1.0 / np.sqrt(K)
        D0, Rr = d0 / r, R / r
        A = np.cos(D0)
        B = np.sin(D0) * cos_a
        M = np.hypot(A, B)
        phi = np.arctan2(B, A)
        base = np.arccos(np.clip(np.cos(Rr) / M, -1.0, 1.0))
        cands = np.stack([base - phi, -base - phi], axis=-1)
        cands = np.mod(cands, 2.0 * np.pi)
        s = r * np.min(cands, axis=-1)
    return np.maximum(s, 0.0)


def _exit_bisect(m, domain, x, u, iters=60):
    lo = np.zeros(x.shape[:-1])
    hi = np.full(x.shape[:-1], 2.0 * domain.radius)
    c = np.broadcast_to(domain.center, x.shape)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        inside = m.dist(c, m.exp(x, mid[..., None] * u)) <= domain.radius
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return lo


# -- node grids ---------------------------------------------------------------

class RegularNodes:
    """Tensor grid in chart coordinates, with optional periodic axes.

    ``to_grid`` maps manifold points to grid coordinates and ``from_grid``
    maps back. Values at grid nodes are interpolated multilinearly.
    """

    def __init__(self, lows, steps, shape, periodic, to_grid, from_grid):
        self.lows = np.asarray(lows, dtype=np.float64)
        self.steps = np.asarray(steps, dtype=np.float64)
        self.shape = tuple(int(s) for s in shape)
        self.periodic = np.asarray(periodic, dtype=bool)
        self.to_grid = to_grid
        self.from_grid = from_grid
        axes = [self.lows[i] + self.steps[i] * np.arange(self.shape[i])
                for i in range(len(self.shape))]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.grid_coords = np.stack([g.ravel() for g in mesh], axis=-1)
        self.points = from_grid(self.grid_coords)

    def __len__(self):
        return len(self.points)

    def interpolate(self, node_values, points):
        vals = np.asarray(node_values, dtype=np.float64).reshape(self.shape)
        pts = np.asarray(points, dtype=np.float64)
        flat = pts.reshape(-1, pts.shape[-1])
        q = np.ascontiguousarray(self.to_grid(flat))
        out = _kernels.interp_regular(vals, self.lows, self.steps, self.periodic, q)
        return out.reshape(pts.shape[:-1])

    def neighbor_pairs(self):
        """Index pairs of axis-adjacent nodes."""
        idx = np.arange(len(self.points)).reshape(self.shape)
        pairs = []
        for ax in range(len(self.shape)):
            if self.shape[ax] < 2:
                continue
            if self.periodic[ax]:
                nb = np.roll(idx, -1, axis=ax)
                pairs.append(np.stack([idx.ravel(), nb.ravel()], axis=-1))
            else:
                a = np.take(idx, np.arange(self.shape[ax] - 1), axis=ax)
                b = np.take(idx, np.arange(1, self.shape[ax]), axis=ax)
                pairs.append(np.stack([a.ravel(), b.ravel()], axis=-1))
        return np.concatenate(pairs) if pairs else np.zeros((0, 2), dtype=int)


class ScatteredNodes:
    """Quasi-random nodes with inverse-distance weighting; any dimension."""

    def __init__(self, m, domain, count, k=None):
        rng = np.random.default_rng(12345)
        self.points = sample_points(m, domain, count, rng, include_center=True)
        self.m = m
        self.k = k or min(len(self.points), 2 ** m.dim + 1)
        boxsize = m.periods if isinstance(m, FlatTorus) else None
        self._tree = cKDTree(self.points, boxsize=boxsize)

    def __len__(self):
        return len(self.points)

    def interpolate(self, node_values, points):
        vals = np.asarray(node_values, dtype=np.float64)
        pts = np.asarray(points, dtype=np.float64)
        flat = pts.reshape(-1, pts.shape[-1])
        if isinstance(self.m, FlatTorus):
            flat = self.m.reduce(flat)
        d, idx = self._tree.query(flat, k=self.k)
        d = np.atleast_2d(d.T).T if self.k == 1 else d
        idx = idx[:, None] if self.k == 1 else idx
        w = 1.0 / np.maximum(d, 1e-300) ** 2
        exact = d[:, 0] == 0
        out = np.sum(w * vals[idx], axis=1) / np.sum(w, axis=1)
        out[exact] = vals[idx[exact, 0]]
        return out.reshape(pts.shape[:-1])

    def neighbor_pairs(self):
        _, idx = self._tree.query(self.points, k=min(len(self.points), 2 * self.m.dim + 1))
        i = np.repeat(np.arange(len(self.points)), idx.shape[1] - 1)
        return np.stack([i, idx[:, 1:].ravel()], axis=-1)


def _ball_bbox(m, domain, chart_of):
    """Chart-coordinate bounding box of a ball, from boundary samples."""
    c = domain.center
    if m.dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif m.dim == 2:
        ang = 2 * np.pi * np.arange(720) / 720
        dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    else:
        g = np.random.default_rng(0).standard_normal((4000, m.dim))
        dirs = g / np.linalg.norm(g, axis=-1, keepdims=True)
    frame = m.tangent_frame(c)
    tang = dirs @ frame
    boundary = chart_of(m.exp(np.broadcast_to(c, tang.shape), domain.radius * tang))
    centre = chart_of(c[None])[0]
    lo = np.minimum(boundary.min(axis=0), centre)
    hi = np.maximum(boundary.max(axis=0), centre)
    return lo, hi


def make_nodes(m, domain, resolution):
    """Node set for separator passes; ``resolution`` is nodes per axis."""
    res = int(resolution)
    if res < 2:
        raise InvalidParameter("node resolution must be at least 2")
    if isinstance(m, FlatTorus):
        steps = m.periods / res
        return RegularNodes(np.zeros(m.dim), steps, (res,) * m.dim, [True] * m.dim,
                            lambda p: m.reduce(p), lambda g: m.reduce(g))
    if isinstance(m, Sphere) and m.dim == 2:
        r = m.radius
        n_theta, n_phi = res + 1, 2 * res

        def to_grid(p):
            z = np.clip(p[:, 2] / r, -1.0, 1.0)
            return np.stack([np.arccos(z), np.mod(np.arctan2(p[:, 1], p[:, 0]), 2 * np.pi)],
                            axis=-1)

        def from_grid(g):
            th, ph = g[:, 0], g[:, 1]
            return r * np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph),
                                 np.cos(th)], axis=-1)
        return RegularNodes([0.0, 0.0], [np.pi / res, 2 * np.pi / n_phi], (n_theta, n_phi),
                            [False, True], to_grid, from_grid)
    chart_ok = isinstance(m, (Euclidean, PoincareDisk)) or m.name == "chart_metric"
    if chart_ok and m.dim <= 3 and domain.kind == "ball":
        ident = lambda p: np.asarray(p, dtype=np.float64)  # noqa: E731
        lo, hi = _ball_bbox(m, domain, ident)
        span = np.maximum(hi - lo, 1e-12)
        pad = span / (res - 1)
        lo, hi = lo - pad, hi + pad
        if isinstance(m, PoincareDisk) or getattr(m, "preset", None) == "poincare-disk":
            lo = np.maximum(lo, -1 + 1e-9)
            hi = np.minimum(hi, 1 - 1e-9)
        steps = (hi - lo) / (res - 1)
        return RegularNodes(lo, steps, (res,) * m.dim, [False] * m.dim, ident, ident)
    count = res ** min(m.dim, 3)
    return ScatteredNodes(m, domain, count)
