"""NumPy implementations of the hot kernels.

Every function here has a twin with an identical signature in
``_ckernels.pyx``. Arithmetic is written in the same order in both so the
two backends agree bit for bit on the chord search.
"""

import numpy as np

_CHUNK_ELEMENTS = 1 << 22


def chord_min(back_vals, fwd_vals, back_len, fwd_len):
    """Best chord interpolant through each query point.

    All inputs have shape ``(Q, D, L)``: for query ``q``, direction ``d`` and
    length index ``i`` the backward endpoint sits at distance
    ``back_len[q, d, i]`` with value ``back_vals[q, d, i]`` (likewise forward).
    Every pair ``(i, j)`` of a direction is a chord through the query whose
    interpolated height is ``vb + a / (a + b) * (vf - vb)``, which is exact when
    ``vb == vf``.

    Non-finite endpoint values mark skipped chords.

    Returns
    -------
    best, t, a, b : ndarray, shape (Q,)
        Minimal interpolant, its chord parameter ``a / (a + b)`` and the two
        lengths. ``best`` is ``inf`` (and the rest ``nan``) when no chord is
        valid.
    direction : ndarray of int64, shape (Q,)
    """
    back_vals = np.ascontiguousarray(back_vals, dtype=np.float64)
    fwd_vals = np.ascontiguousarray(fwd_vals, dtype=np.float64)
    back_len = np.ascontiguousarray(back_len, dtype=np.float64)
    fwd_len = np.ascontiguousarray(fwd_len, dtype=np.float64)
    q_count, d_count, l_count = back_vals.shape
    best = np.full(q_count, np.inf)
    t_out = np.full(q_count, np.nan)
    a_out = np.full(q_count, np.nan)
    b_out = np.full(q_count, np.nan)
    d_out = np.full(q_count, -1, dtype=np.int64)
    if q_count == 0 or d_count == 0 or l_count == 0:
        return best, t_out, a_out, b_out, d_out

    step = max(1, _CHUNK_ELEMENTS // (d_count * l_count * l_count))
    for lo in range(0, q_count, step):
        hi = min(q_count, lo + step)
        vb = back_vals[lo:hi, :, :, None]
        vf = fwd_vals[lo:hi, :, None, :]
        aa = back_len[lo:hi, :, :, None]
        bb = fwd_len[lo:hi, :, None, :]
        denom = aa + bb
        ok = np.isfinite(vb) & np.isfinite(vf) & (denom > 0.0)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            vals = vb + (aa / denom) * (vf - vb)
        vals = np.where(ok, vals, np.inf)
        flat = vals.reshape(hi - lo, -1)
        idx = np.argmin(flat, axis=1)
        rows = np.arange(hi - lo)
        chunk_best = flat[rows, idx]
        found = np.isfinite(chunk_best)
        d_idx, i_idx, j_idx = np.unravel_index(idx, (d_count, l_count, l_count))
        a_sel = back_len[lo:hi][rows, d_idx, i_idx]
        b_sel = fwd_len[lo:hi][rows, d_idx, j_idx]
        best[lo:hi] = chunk_best
        with np.errstate(invalid="ignore", divide="ignore"):
            t_sel = a_sel / (a_sel + b_sel)
        t_out[lo:hi] = np.where(found, t_sel, np.nan)
        a_out[lo:hi] = np.where(found, a_sel, np.nan)
        b_out[lo:hi] = np.where(found, b_sel, np.nan)
        d_out[lo:hi] = np.where(found, d_idx, -1)
    return best, t_out, a_out, b_out, d_out


def envelope_1d_exhaustive(xs, hs):
    """Lower envelope of all chords on a sorted 1-D grid.

    ``out[i] = min(hs[i], min_{j < i < k} chord_{jk}(xs[i]))``. Cubic in the
    grid size; this is a reference computation, not a fast one.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    hs = np.ascontiguousarray(hs, dtype=np.float64)
    n = xs.shape[0]
    out = hs.copy()
    for i in range(1, n - 1):
        xl = xs[:i, None]
        hl = hs[:i, None]
        xr = xs[None, i + 1:]
        hr = hs[None, i + 1:]
        a = xs[i] - xl
        b = xr - xs[i]
        vals = hl + (a / (a + b)) * (hr - hl)
        m = vals.min()
        if m < out[i]:
            out[i] = m
    return out


MAX_INTERP_DIM = 6


def interp_regular(values, lows, steps, periodic, queries):
    """Multilinear interpolation on a regular grid.

    ``values`` has one axis per coordinate (at most ``MAX_INTERP_DIM``).
    Periodic axes wrap with period ``shape * step``; other axes clamp to the
    grid's edge.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    if values.ndim > MAX_INTERP_DIM:
        raise ValueError(f"interpolation supports at most {MAX_INTERP_DIM} axes")
    queries = np.ascontiguousarray(queries, dtype=np.float64)
    lows = np.asarray(lows, dtype=np.float64)
    steps = np.asarray(steps, dtype=np.float64)
    periodic = np.asarray(periodic, dtype=bool)
    shape = np.asarray(values.shape)
    ndim = values.ndim
    m = queries.shape[0]
    lo_idx = np.empty((m, ndim), dtype=np.int64)
    hi_idx = np.empty((m, ndim), dtype=np.int64)
    frac = np.empty((m, ndim))
    for ax in range(ndim):
        u = (queries[:, ax] - lows[ax]) / steps[ax]
        n_ax = shape[ax]
        if periodic[ax]:
            u = np.mod(u, n_ax)
            i0 = np.floor(u).astype(np.int64)
            i0 = np.where(i0 >= n_ax, n_ax - 1, i0)
            fr = u - i0
            i1 = (i0 + 1) % n_ax
        else:
            if n_ax == 1:
                i0 = np.zeros(m, dtype=np.int64)
                i1 = i0
                fr = np.zeros(m)
            else:
                u = np.clip(u, 0.0, n_ax - 1.0)
                i0 = np.minimum(np.floor(u).astype(np.int64), n_ax - 2)
                fr = u - i0
                i1 = i0 + 1
        lo_idx[:, ax] = i0
        hi_idx[:, ax] = i1
        frac[:, ax] = fr
    corners = np.empty((m, 1 << ndim))
    for corner in range(1 << ndim):
        idx = tuple(hi_idx[:, ax] if (corner >> ax) & 1 else lo_idx[:, ax]
                    for ax in range(ndim))
        corners[:, corner] = values[idx]
    # nested lerps, axis 0 first; exact on constant data
    for ax in range(ndim):
        c0 = corners[:, 0::2]
        corners = c0 + frac[:, ax:ax + 1] * (corners[:, 1::2] - c0)
    return corners[:, 0]


FLAT, STEREOGRAPHIC, POINCARE = 0, 1, 2


def _conformal_grad(kind, param, x):
    # gradient of the conformal exponent phi, g = exp(2 phi) * identity
    if kind == FLAT:
        return np.zeros_like(x)
    sq = np.sum(x * x, axis=-1, keepdims=True)
    if kind == STEREOGRAPHIC:
        return -2.0 * x / (1.0 + sq)
    return 2.0 * x / (1.0 - sq)


def _conformal_factor(kind, param, x):
    if kind == FLAT:
        return np.ones(x.shape[:-1])
    sq = np.sum(x * x, axis=-1)
    if kind == STEREOGRAPHIC:
        return 2.0 * param / (1.0 + sq)
    return 2.0 * param / (1.0 - sq)


def _conformal_accel(kind, param, x, v):
    g = _conformal_grad(kind, param, x)
    gv = np.sum(g * v, axis=-1, keepdims=True)
    vv = np.sum(v * v, axis=-1, keepdims=True)
    return -2.0 * gv * v + vv * g


def rk4_conformal(x0, v0, dt, steps, kind, param, record):
    """Fixed-step RK4 for geodesics of a conformal chart metric.

    Parameters
    ----------
    x0, v0 : ndarray, shape (N, n)
    dt : float
    steps : int
    kind : int
        0 flat, 1 stereographic sphere of radius ``param``, 2 Poincare disk
        with length scale ``param``.
    record : bool
        Keep the whole trajectory instead of only the endpoint.

    Returns
    -------
    xs, vs : ndarray, shape (N, steps + 1, n) or (N, 1, n)
    drift : ndarray, shape (N,)
        Largest relative deviation of the metric speed from its initial value.
    left : ndarray of bool, shape (N,)
        True where the trajectory left the chart (Poincare disk only); such
        trajectories are frozen at their last interior state.
    """
    x = np.array(x0, dtype=np.float64, copy=True)
    v = np.array(v0, dtype=np.float64, copy=True)
    n_traj = x.shape[0]
    speed0 = _conformal_factor(kind, param, x) * np.sqrt(np.sum(v * v, axis=-1))
    drift = np.zeros(n_traj)
    left = np.zeros(n_traj, dtype=bool)
    if record:
        xs = np.empty((n_traj, steps + 1, x.shape[1]))
        vs = np.empty_like(xs)
        xs[:, 0] = x
        vs[:, 0] = v
    half = 0.5 * dt
    for s in range(steps):
        k1x = v
        k1v = _conformal_accel(kind, param, x, v)
        x2 = x + half * k1x
        v2 = v + half * k1v
        k2x = v2
        k2v = _conformal_accel(kind, param, x2, v2)
        x3 = x + half * k2x
        v3 = v + half * k2v
        k3x = v3
        k3v = _conformal_accel(kind, param, x3, v3)
        x4 = x + dt * k3x
        v4 = v + dt * k3v
        k4x = v4
        k4v = _conformal_accel(kind, param, x4, v4)
        xn = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        vn = v + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        if kind == POINCARE:
            out = np.sum(xn * xn, axis=-1) >= 1.0
            left |= out
            xn = np.where(left[:, None], x, xn)
            vn = np.where(left[:, None], v, vn)
        x, v = xn, vn
        speed = _conformal_factor(kind, param, x) * np.sqrt(np.sum(v * v, axis=-1))
        with np.errstate(invalid="ignore", divide="ignore"):
            rel = np.where(speed0 > 0.0, np.abs(speed / speed0 - 1.0), 0.0)
        drift = np.maximum(drift, rel)
        if record:
            xs[:, s + 1] = x
            vs[:, s + 1] = v
    if not record:
        xs = x[:, None, :]
        vs = v[:, None, :]
    return xs, vs, drift, left
