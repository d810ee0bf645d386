"""Derivative profiles along geodesics: mean-value and orthogonality parameters.

Along a segment ``sigma`` on ``[0, 1]`` the profile is
``phi(t) = df_{sigma(t)}(sigma'(t))``, the derivative of ``t -> f(sigma(t))``.
Its integral over ``[0, 1]`` is ``f(sigma(1)) - f(sigma(0))``, which is what
guarantees a mean-value parameter for that orientation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import InvalidParameter, NoBracketFound, NumericallyUnstable
from .fields import directional_derivative
from .manifolds import GeodesicSegment

DEFAULT_GRID = 1024
REFINE_FACTOR = 8
BISECTION_TOL = 1e-10
MAX_BISECTION = 200


def _phi(f, segment, t):
    t = np.asarray(t, dtype=np.float64)
    return directional_derivative(f, segment.eval_point(t), segment.eval_velocity(t))


@dataclass
class PhiProfile:
    segment: GeodesicSegment
    t: np.ndarray
    values: np.ndarray

    @property
    def grid_size(self):
        return len(self.t)

    def integral(self):
        """Trapezoidal integral of the profile over ``[0, 1]``."""
        return float(integrate.trapezoid(self.values, self.t))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "phi"])
            for ti, pi in zip(self.t, self.values):
                w.writerow([repr(float(ti)), repr(float(pi))])
        return path


def phi_profile(f, segment, grid_size=DEFAULT_GRID):
    """Sample ``phi`` on a uniform grid covering ``[0, 1]``."""
    if grid_size < 2:
        raise InvalidParameter("grid_size must be at least 2")
    t = np.linspace(0.0, 1.0, int(grid_size))
    return PhiProfile(segment, t, _phi(f, segment, t))


def _find_root(fn, grid_size, tolerance):
    """First root of ``fn`` on ``[0, 1]``: grid hit, else bracket plus bisection.

    Returns ``(t, value, grid)`` with ``t = None`` when no sign change exists
    on the original grid or on one refinement by ``REFINE_FACTOR``.
    """
    sizes = (grid_size, (grid_size - 1) * REFINE_FACTOR + 1)
    for size in sizes:
        t = np.linspace(0.0, 1.0, size)
        v = fn(t)
        hit = np.flatnonzero(np.abs(v) <= tolerance)
        change = np.flatnonzero(np.sign(v[:-1]) * np.sign(v[1:]) < 0)
        first_hit = hit[0] if hit.size else size
        first_change = change[0] if change.size else size
        if first_hit <= first_change and hit.size:
            return float(t[first_hit]), float(v[first_hit]), (t, v)
        if change.size:
            i = first_change
            lo, hi, v_lo = t[i], t[i + 1], v[i]
            mid, v_mid = lo, v_lo
            for _ in range(MAX_BISECTION):
                mid = 0.5 * (lo + hi)
                v_mid = float(fn(np.array([mid]))[0])
                if abs(v_mid) <= tolerance:
                    return float(mid), v_mid, (t, v)
                if np.sign(v_mid) == np.sign(v_lo):
                    lo, v_lo = mid, v_mid
                else:
                    hi = mid
                if hi - lo <= np.spacing(mid):
                    break
            raise NumericallyUnstable(
                f"bisection stalled at t={mid:.17g} with |value|={abs(v_mid):.3g} > {tolerance:g}")
    return None, None, (t, v)


@dataclass
class MeanValuePoint:
    """Mean-value parameter; unpacks as ``(t0, residual)``.

    ``target`` is ``f(q) - f(p)``. When the literal convention was requested,
    ``literal`` holds whether some ``t`` satisfies ``phi(t) = f(p) - f(q)``.
    """

    t0: float
    residual: float
    target: float
    convention: str = "integral"
    literal: dict | None = None

    def __iter__(self):
        return iter((self.t0, self.residual))

    def to_dict(self):
        out = {"t0": self.t0, "residual": self.residual, "target": self.target,
               "convention": self.convention}
        if self.literal is not None:
            out["literal_convention"] = self.literal
        return out


def mvt_point(f, p, q, tolerance=BISECTION_TOL, grid_size=DEFAULT_GRID, check_literal=False):
    """Parameter ``t0`` with ``phi(t0) = f(q) - f(p)`` on the minimal geodesic ``p -> q``.

    Parameters
    ----------
    check_literal : bool
        Also search for ``phi(t) = f(p) - f(q)`` and report the outcome
        (never raises for it).

    Raises
    ------
    NoBracketFound
        No sign change of ``phi - target`` even after one grid refinement.
    """
    m = f.manifold
    p = m.check_point(p)
    q = m.check_point(q)
    if m.dist(p, q) == 0.0:
        raise InvalidParameter("mvt_point needs p != q")
    seg = GeodesicSegment.between(m, p, q)
    fp, fq = float(f.eval(p)), float(f.eval(q))
    target = fq - fp
    t0, val, _ = _find_root(lambda t: _phi(f, seg, t) - target, grid_size, tolerance)
    if t0 is None:
        raise NoBracketFound("phi - (f(q) - f(p)) has no sign change on [0, 1]")
    literal = None
    if check_literal:
        lt, lv, (grid, gv) = _find_root(lambda t: _phi(f, seg, t) + target, grid_size, tolerance)
        if lt is None:
            i = int(np.argmin(np.abs(gv)))
            literal = {"target": -target, "satisfiable": False,
                       "min_abs_residual": float(abs(gv[i])), "t_at_min": float(grid[i])}
        else:
            literal = {"target": -target, "satisfiable": True, "t": lt, "residual": abs(lv)}
    return MeanValuePoint(t0, abs(val), target, "integral", literal)


@dataclass
class OrthogonalPoint:
    xi: float
    phi_at_xi: float
    hypothesis_held: bool
    df_p_u: float
    found: bool = True

    def __iter__(self):
        return iter((self.xi, self.phi_at_xi))

    def to_dict(self):
        return {"found": True, "xi": self.xi, "phi_at_xi": self.phi_at_xi,
                "hypothesis_held": self.hypothesis_held, "df_p_u": self.df_p_u}


@dataclass
class NoRootFound:
    """Structured outcome: ``phi`` has no zero on the scanned grid.

    With ``hypothesis_held`` true this is a counterexample candidate for the
    orthogonality statement.
    """

    min_abs_phi: float
    t_at_min: float
    hypothesis_held: bool
    df_p_u: float
    found: bool = False

    def to_dict(self):
        return {"found": False, "min_abs_phi": self.min_abs_phi, "t_at_min": self.t_at_min,
                "hypothesis_held": self.hypothesis_held, "df_p_u": self.df_p_u,
                "falsification_candidate": bool(self.hypothesis_held)}


def orthogonal_point(f, p, u, segment_length, tolerance=BISECTION_TOL, grid_size=DEFAULT_GRID):
    """First ``xi`` in ``[0, 1]`` where ``phi(xi) = 0`` along ``exp_p(t L u/|u|)``.

    Returns :class:`OrthogonalPoint` or :class:`NoRootFound`; both record
    whether ``df_p(u) >= 0`` held.
    """
    m = f.manifold
    p = m.check_point(p)
    u = m.check_tangent(p, u)
    nu = float(m.norm(p, u))
    if nu == 0.0:
        raise InvalidParameter("direction u must be nonzero")
    seg = GeodesicSegment.from_initial(m, p, (float(segment_length) / nu) * u)
    df_p_u = float(directional_derivative(f, p, u))
    held = df_p_u >= 0.0
    xi, val, (grid, gv) = _find_root(lambda t: _phi(f, seg, t), grid_size, tolerance)
    if xi is None:
        i = int(np.argmin(np.abs(gv)))
        return NoRootFound(float(abs(gv[i])), float(grid[i]), held, df_p_u)
    return OrthogonalPoint(xi, val, held, df_p_u)
