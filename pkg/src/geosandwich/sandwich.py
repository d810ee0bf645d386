"""Two-function chord inequality, the chord-envelope separator and its corollary checks.

The separator estimate follows the epigraph construction: the value at ``x``
is the lowest height reached at ``x`` by a product-manifold chord between two
epigraph points. Chords are parameterized through the query point: a unit
direction ``u`` and back/forward lengths ``a, b`` give endpoints
``exp_x(-a u)`` and ``exp_x(b u)`` and the height
``(b h(x1) + a h(x2)) / (a + b)``. Using the lowest epigraph height ``h(x_i)``
at each endpoint minimizes the interpolant.

One chord pass need not be geodesically convex when ``dim >= 2``; further
passes re-apply the operator with ``h`` replaced by the previous estimate
(stored on a node grid and interpolated), which only ever lowers values.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .domains import (default_domain, direction_coefficients, exit_lengths,
                      length_fractions, make_nodes, sample_pairs, sample_points)
from .errors import InvalidParameter, NotClosed, NotFiniteVolume
from .rng import stream

DEFAULT_LENGTH_COUNT = 16
DEFAULT_PASSES = 3
SLACK_FACTOR = 2.0
_OUTSIDE_VALUE = 1e300
_CHUNK = 2048


class BudgetTooSmall(UserWarning):
    pass


def default_direction_count(dim):
    return max(8, 4 * dim)


def default_node_resolution(dim):
    return {1: 2001, 2: 97, 3: 25}.get(dim, 9)


def _tolist(x):
    return np.asarray(x, dtype=np.float64).tolist()


@dataclass
class StarCheckReport:
    """Outcome of a sampled inequality check.

    ``passed`` holds exactly when ``max_violation <= tolerance``; here
    ``tolerance`` is the threshold actually applied (requested tolerance
    plus any discretization slack, see ``components``). ``witness`` is set
    only on failure.
    """

    name: str
    passed: bool
    max_violation: float
    tolerance: float
    samples_used: int
    seed: int
    witness: dict | None = None
    budget: dict = field(default_factory=dict)
    components: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"name": self.name, "passed": bool(self.passed),
               "max_violation": float(self.max_violation),
               "tolerance": float(self.tolerance),
               "samples_used": int(self.samples_used), "seed": int(self.seed),
               "budget": self.budget}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.components:
            out["components"] = self.components
        return out


def _finish(name, violations, threshold, seed, witness_fn, budget=None, components=None):
    violations = np.asarray(violations, dtype=np.float64)
    if violations.size == 0:
        return StarCheckReport(name, True, -np.inf, threshold, 0, seed,
                               budget=budget or {}, components=components or {})
    flat = violations.reshape(violations.shape[0], -1) if violations.ndim > 1 else violations
    idx = int(np.argmax(flat))
    worst = float(flat.ravel()[idx])
    passed = worst <= threshold
    witness = None if passed else witness_fn(np.unravel_index(idx, flat.shape))
    return StarCheckReport(name, passed, worst, float(threshold), int(violations.shape[0]),
                           int(seed), witness, budget or {}, components or {})


# -- separator estimate -------------------------------------------------------

class SeparatorEstimate:
    """Sampled estimate of the separating convex function built from ``h``.

    Use :func:`build_separator` to construct one. ``eval`` (also ``__call__``)
    is batched and memoized per queried point.

    Attributes
    ----------
    slack : float
        ``2 * L_h * spacing``: sampled Lipschitz constant of ``h`` times the
        largest node spacing. Pass/fail thresholds add it.
    escaped_chords : int
        Chord endpoints that left the domain and were skipped while
        building node values.
    """

    def __init__(self, manifold, h, domain, direction_count, length_count,
                 envelope_passes, node_resolution, seed):
        if envelope_passes < 1:
            raise InvalidParameter("envelope_passes must be at least 1")
        if direction_count < 1 or length_count < 1:
            raise InvalidParameter("budget entries must be positive")
        m = manifold
        self.manifold = m
        self.h = h
        self.domain = domain
        self.envelope_passes = int(envelope_passes)
        self.seed = int(seed)
        self.direction_count = int(direction_count)
        self.length_count = int(length_count)
        self.node_resolution = int(node_resolution)
        if direction_count < 2 * m.dim:
            warnings.warn(f"direction_count {direction_count} < 2*dim={2 * m.dim}",
                          BudgetTooSmall, stacklevel=3)
        self._coeffs = direction_coefficients(m.dim, direction_count)
        self._fracs = length_fractions(length_count)
        self._memo = {}
        self.escaped_chords = 0

        self.nodes = make_nodes(m, domain, node_resolution)
        pts = self.nodes.points
        self._inside = np.asarray(domain.contains(m, pts), dtype=bool)
        self._node_h = np.where(self._inside, h.eval(pts), _OUTSIDE_VALUE)
        self.lipschitz, self.grid_spacing = self._lipschitz()
        self.slack = SLACK_FACTOR * self.lipschitz * self.grid_spacing
        # node values of passes 1..P-1 feed the endpoint values of later passes
        self.node_values = []
        inside_pts = pts[self._inside]
        for p in range(1, self.envelope_passes):
            vals, _ = self._evaluate(inside_pts, p, count_escapes=(p == 1))
            full = np.full(len(pts), _OUTSIDE_VALUE)
            full[self._inside] = vals[:, -1]
            self.node_values.append(full)

    @property
    def budget(self):
        d_eff = len(self._coeffs)
        return {"direction_count": d_eff, "length_count": self.length_count,
                "endpoint_pairs": d_eff * self.length_count ** 2,
                "envelope_passes": self.envelope_passes,
                "node_resolution": self.node_resolution, "node_count": len(self.nodes)}

    def describe(self):
        return {"budget": self.budget, "slack": self.slack, "lipschitz": self.lipschitz,
                "grid_spacing": self.grid_spacing, "escaped_chords": self.escaped_chords,
                "domain": self.domain.describe(), "seed": self.seed}

    def _lipschitz(self):
        m = self.manifold
        pairs = self.nodes.neighbor_pairs()
        if len(pairs) == 0:
            return 0.0, 0.0
        both = self._inside[pairs[:, 0]] & self._inside[pairs[:, 1]]
        pairs = pairs[both]
        if len(pairs) == 0:
            return 0.0, 0.0
        p, q = self.nodes.points[pairs[:, 0]], self.nodes.points[pairs[:, 1]]
        d = m.dist(p, q)
        dh = np.abs(self._node_h[pairs[:, 0]] - self._node_h[pairs[:, 1]])
        ok = d > 0
        lip = float(np.max(dh[ok] / d[ok])) if np.any(ok) else 0.0
        return lip, float(np.max(d))

    # -- chord search ------------------------------------------------------
    def _endpoints(self, x):
        m = self.manifold
        frame = m.tangent_frame(x)
        U = np.einsum("dn,qnc->qdc", self._coeffs, frame)
        xq = x[:, None, :]
        a_max = exit_lengths(m, self.domain, xq, -U)
        b_max = exit_lengths(m, self.domain, xq, U)
        A = a_max[..., None] * self._fracs
        B = b_max[..., None] * self._fracs
        xe = x[:, None, None, :]
        X1 = m.exp(xe, -A[..., None] * U[:, :, None, :])
        X2 = m.exp(xe, B[..., None] * U[:, :, None, :])
        if self.domain.kind == "ball":
            esc1 = ~self.domain.contains(m, X1)
            esc2 = ~self.domain.contains(m, X2)
        else:
            esc1 = np.zeros(A.shape, dtype=bool)
            esc2 = esc1
        return A, B, X1, X2, esc1, esc2

    def _evaluate(self, x, passes, count_escapes=False):
        """Per-pass values ``(Q, passes + 1)`` (column 0 is ``h``) and provenance."""
        x = np.asarray(x, dtype=np.float64)
        q_total = len(x)
        values = np.empty((q_total, passes + 1))
        prov = {"t": np.zeros(q_total), "a": np.zeros(q_total), "b": np.zeros(q_total),
                "pass": np.zeros(q_total, dtype=int)}
        for lo in range(0, q_total, _CHUNK):
            hi = min(q_total, lo + _CHUNK)
            xc = x[lo:hi]
            A, B, X1, X2, esc1, esc2 = self._endpoints(xc)
            if count_escapes:
                self.escaped_chords += int(np.sum(esc1) + np.sum(esc2))
            h1 = np.where(esc1, np.inf, self.h.eval(X1))
            h2 = np.where(esc2, np.inf, self.h.eval(X2))
            best = self.h.eval(xc)
            values[lo:hi, 0] = best
            for p in range(1, passes + 1):
                if p == 1:
                    vb, vf = h1, h2
                else:
                    nv = self.node_values[p - 2]
                    vb = np.minimum(h1, self.nodes.interpolate(nv, X1))
                    vf = np.minimum(h2, self.nodes.interpolate(nv, X2))
                val, t, a, b, _ = _kernels.chord_min(vb, vf, A, B)
                better = val < best
                best = np.where(better, val, best)
                prov["t"][lo:hi] = np.where(better, t, prov["t"][lo:hi])
                prov["a"][lo:hi] = np.where(better, a, prov["a"][lo:hi])
                prov["b"][lo:hi] = np.where(better, b, prov["b"][lo:hi])
                prov["pass"][lo:hi] = np.where(better, p, prov["pass"][lo:hi])
                values[lo:hi, p] = best
        return values, prov

    def eval_passes(self, x, passes=None):
        """Values after each pass ``0..passes`` at ``x`` (no memoization)."""
        passes = self.envelope_passes if passes is None else int(passes)
        if passes > self.envelope_passes:
            raise InvalidParameter("passes exceeds the built envelope_passes")
        x = self.manifold.check_point(x)
        flat = x.reshape(-1, x.shape[-1])
        vals, _ = self._evaluate(flat, passes)
        return vals.reshape(x.shape[:-1] + (passes + 1,))

    def eval_with_provenance(self, x):
        x = self.manifold.check_point(x)
        flat = x.reshape(-1, x.shape[-1])
        vals, prov = self._evaluate(flat, self.envelope_passes)
        return vals[:, -1], prov

    def eval(self, x):
        x = np.asarray(x, dtype=np.float64)
        flat = np.ascontiguousarray(x.reshape(-1, x.shape[-1]))
        keys = [row.tobytes() for row in flat]
        missing = [i for i, k in enumerate(keys) if k not in self._memo]
        if missing:
            idx = np.array(missing)
            sub = self.manifold.check_point(flat[idx])
            vals, _ = self._evaluate(sub, self.envelope_passes)
            for i, v in zip(missing, vals[:, -1]):
                self._memo.setdefault(keys[i], float(v))
        out = np.array([self._memo[k] for k in keys])
        return out.reshape(x.shape[:-1])

    __call__ = eval

    def samples(self):
        """Node table: coordinates, final value and best chord provenance."""
        pts = self.nodes.points[self._inside]
        vals, prov = self.eval_with_provenance(pts)
        return pts, vals, prov

    def to_csv(self, path):
        pts, vals, prov = self.samples()
        ncoord = pts.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(ncoord)]
                       + ["k_value", "best_chord_t", "best_a", "best_b"])
            for i in range(len(pts)):
                w.writerow([repr(float(c)) for c in pts[i]]
                           + [repr(float(vals[i])), repr(float(prov["t"][i])),
                              repr(float(prov["a"][i])), repr(float(prov["b"][i]))])
        return path

    def refined(self, direction_factor=1, length_factor=1):
        """Same estimate with multiplied budget (nodes and domain unchanged)."""
        return SeparatorEstimate(self.manifold, self.h, self.domain,
                                 self.direction_count * direction_factor,
                                 self.length_count * length_factor,
                                 self.envelope_passes, self.node_resolution, self.seed)


def _parse_budget(m, budget):
    if budget is None:
        return default_direction_count(m.dim), DEFAULT_LENGTH_COUNT
    if isinstance(budget, dict):
        return (int(budget.get("direction_count", default_direction_count(m.dim))),
                int(budget.get("length_count", DEFAULT_LENGTH_COUNT)))
    budget = tuple(budget)
    return int(budget[0]), int(budget[1])


def build_separator(m, h, domain=None, budget=None, envelope_passes=DEFAULT_PASSES, seed=0,
                    node_resolution=None):
    """Chord-envelope estimate of the separating convex function below ``h``.

    Parameters
    ----------
    m : Manifold
    h : ScalarField
    domain : Domain, optional
        Defaults to the whole manifold (compact) or a ball.
    budget : tuple or dict, optional
        ``(direction_count, length_count)``; a third entry is ignored since
        every (back, forward) length pair is examined.
    envelope_passes : int
    seed : int
        Recorded for provenance; the chord family itself is deterministic.
    node_resolution : int, optional
        Nodes per axis of the grid holding intermediate passes.
    """
    domain = default_domain(m) if domain is None else domain
    d_count, l_count = _parse_budget(m, budget)
    res = default_node_resolution(m.dim) if node_resolution is None else node_resolution
    return SeparatorEstimate(m, h, domain, d_count, l_count, envelope_passes, res, seed)


def exhaustive_envelope_1d(xs, hs):
    """Greatest convex minorant on a sorted 1-D grid by enumerating every chord."""
    return _kernels.envelope_1d_exhaustive(np.asarray(xs, float), np.asarray(hs, float))


# -- checks ---------------------------------------------------------------------

def _domain_of(m, domain, k=None):
    if domain is not None:
        return domain
    if k is not None and isinstance(k, SeparatorEstimate):
        return k.domain
    return default_domain(m)


def check_pointwise_dominance(pair, sample_count, seed, tolerance=0.0, domain=None):
    """Sampled ``max f - h``; the ``x == y`` case of the chord inequality."""
    if sample_count < 1:
        raise InvalidParameter("sample_count must be at least 1")
    m = pair.manifold
    dom = _domain_of(m, domain)
    x = sample_points(m, dom, sample_count, stream(seed, "points"), include_center=True)
    viol = pair.f.eval(x) - pair.h.eval(x)
    return _finish("check_pointwise_dominance", viol, tolerance, seed,
                   lambda i: {"x": _tolist(x[i[0]])},
                   budget={"sample_count": int(sample_count)})


def _chord_points(m, x, y, t):
    v = m.log(x, y)
    pts = m.exp(x[:, None, :], t[None, :, None] * v[:, None, :])
    pts[:, t == 0.0] = x[:, None, :]
    pts[:, t == 1.0] = y[:, None, :]
    return pts


def _parse_pairs_budget(budget):
    if isinstance(budget, dict):
        return int(budget["pair_count"]), int(budget["t_grid_size"])
    return int(budget[0]), int(budget[1])


def check_property_star(pair, budget, seed, tolerance, domain=None):
    """Sampled ``max f(sigma_xy(t)) - [(1-t) h(x) + t h(y)]`` over pairs and a t grid."""
    n_pairs, n_t = _parse_pairs_budget(budget)
    if n_pairs < 1 or n_t < 2:
        raise InvalidParameter("budget needs pair_count >= 1 and t_grid_size >= 2")
    m = pair.manifold
    dom = _domain_of(m, domain)
    x, y, redraws = sample_pairs(m, dom, n_pairs, stream(seed, "points"),
                                 stream(seed, "partners"))
    t = np.linspace(0.0, 1.0, n_t)
    pts = _chord_points(m, x, y, t)
    rhs = (1.0 - t)[None, :] * pair.h.eval(x)[:, None] + t[None, :] * pair.h.eval(y)[:, None]
    res = pair.f.eval(pts) - rhs
    rep = _finish("check_property_star", res, tolerance, seed,
                  lambda i: {"x": _tolist(x[i[0]]), "y": _tolist(y[i[0]]),
                             "t": float(t[i[1]])},
                  budget={"pair_count": n_pairs, "t_grid_size": n_t},
                  components={"redrawn_pairs": int(redraws)})
    rep.samples_used = int(len(x) * n_t)
    return rep


def check_geodesic_convex(m, k, budget, seed, tolerance, domain=None):
    """Sampled convexity defect ``k(sigma(t)) - [(1-t) k(x) + t k(y)]``.

    For a :class:`SeparatorEstimate` the threshold is ``tolerance + k.slack``.
    """
    n_pairs, n_t = _parse_pairs_budget(budget)
    dom = _domain_of(m, domain, k)
    slack = float(getattr(k, "slack", 0.0))
    x, y, redraws = sample_pairs(m, dom, n_pairs, stream(seed, "convex-points"),
                                 stream(seed, "convex-partners"))
    t = np.linspace(0.0, 1.0, n_t)
    pts = _chord_points(m, x, y, t)
    kv = k.eval(pts)
    res = kv - ((1.0 - t)[None, :] * kv[:, :1] + t[None, :] * kv[:, -1:])
    rep = _finish("check_geodesic_convex", res, tolerance + slack, seed,
                  lambda i: {"x": _tolist(x[i[0]]), "y": _tolist(y[i[0]]),
                             "t": float(t[i[1]])},
                  budget={"pair_count": n_pairs, "t_grid_size": n_t},
                  components={"requested_tolerance": float(tolerance), "slack": slack,
                              "redrawn_pairs": int(redraws)})
    rep.samples_used = int(len(x) * n_t)
    return rep


def check_sandwich(f, k, h, sample_count, seed, tolerance, domain=None):
    """Sampled ``f <= k <= h`` with the estimate's slack added to the threshold."""
    m = f.manifold
    dom = _domain_of(m, domain, k)
    x = sample_points(m, dom, sample_count, stream(seed, "sandwich"), include_center=True)
    kv = k.eval(x)
    lower = f.eval(x) - kv
    upper = kv - h.eval(x)
    viol = np.maximum(lower, upper)
    slack = float(getattr(k, "slack", 0.0))
    return _finish("check_sandwich", viol, tolerance + slack, seed,
                   lambda i: {"x": _tolist(x[i[0]]), "f": float(f.eval(x[i[0]])),
                              "k": float(kv[i[0]]), "h": float(h.eval(x[i[0]]))},
                   budget={"sample_count": int(sample_count)},
                   components={"max_f_minus_k": float(np.max(lower)),
                               "max_k_minus_h": float(np.max(upper)),
                               "requested_tolerance": float(tolerance), "slack": slack})


def check_constant_separator(m, k, sample_count, seed, tolerance):
    """Spread ``max k - min k`` of the estimate on a finite-volume manifold."""
    if not m.finite_volume:
        raise NotFiniteVolume(f"{m.name} does not have finite volume")
    dom = _domain_of(m, None, k)
    x = sample_points(m, dom, sample_count, stream(seed, "constancy"), include_center=True)
    kv = k.eval(x)
    spread = float(np.max(kv) - np.min(kv))
    slack = float(getattr(k, "slack", 0.0))
    threshold = tolerance + 2.0 * slack
    passed = spread <= threshold
    witness = None if passed else {"argmin": _tolist(x[np.argmin(kv)]),
                                   "argmax": _tolist(x[np.argmax(kv)])}
    return StarCheckReport("check_constant_separator", passed, spread, threshold,
                           int(sample_count), int(seed), witness,
                           {"sample_count": int(sample_count)},
                           {"min_k": float(np.min(kv)), "max_k": float(np.max(kv)),
                            "requested_tolerance": float(tolerance), "slack": slack})


@dataclass
class ClosedGeodesicReport:
    """Constancy of ``k`` and the ``f == h`` claim along a closed geodesic, reported separately."""

    constancy: StarCheckReport
    equality: StarCheckReport

    @property
    def passed(self):
        return self.constancy.passed and self.equality.passed


def closed_geodesic(m, start, velocity):
    """Geodesic segment from initial data, validated to close up."""
    from .manifolds import GeodesicSegment
    seg = GeodesicSegment.from_initial(m, start, velocity)
    ok, gap, vgap = seg.is_closed()
    if not ok:
        raise NotClosed(f"loop does not close: position gap {gap:.3g}, velocity gap {vgap:.3g}")
    return seg


def check_along_closed_geodesic(m, pair, k, loop, t_grid, tolerance):
    ok, gap, vgap = loop.is_closed()
    if not ok:
        raise NotClosed(f"loop does not close: position gap {gap:.3g}, velocity gap {vgap:.3g}")
    t = np.linspace(0.0, 1.0, int(t_grid))
    pts = loop.eval_point(t)
    kv = k.eval(pts)
    slack = float(getattr(k, "slack", 0.0))
    spread = float(np.max(kv) - np.min(kv))
    thr = tolerance + 2.0 * slack
    c_pass = spread <= thr
    constancy = StarCheckReport(
        "check_along_closed_geodesic.k_constancy", c_pass, spread, thr, len(t), 0,
        None if c_pass else {"t_min": float(t[np.argmin(kv)]), "t_max": float(t[np.argmax(kv)])},
        {"t_grid_size": len(t)},
        {"min_k": float(np.min(kv)), "max_k": float(np.max(kv)), "slack": slack,
         "requested_tolerance": float(tolerance)})
    gap_fh = np.abs(pair.f.eval(pts) - pair.h.eval(pts))
    i = int(np.argmax(gap_fh))
    e_pass = float(gap_fh[i]) <= tolerance
    equality = StarCheckReport(
        "check_along_closed_geodesic.f_equals_h", e_pass, float(gap_fh[i]), float(tolerance),
        len(t), 0, None if e_pass else {"t": float(t[i]), "point": _tolist(pts[i])},
        {"t_grid_size": len(t)}, {})
    return ClosedGeodesicReport(constancy, equality)
