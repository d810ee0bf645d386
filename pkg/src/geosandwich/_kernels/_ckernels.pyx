# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of ``_pykernels``; see that module for the contracts."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, floor, fmod, INFINITY, NAN, isfinite

cnp.import_array()


def chord_min(back_vals, fwd_vals, back_len, fwd_len):
    cdef double[:, :, ::1] vb = np.ascontiguousarray(back_vals, dtype=np.float64)
    cdef double[:, :, ::1] vf = np.ascontiguousarray(fwd_vals, dtype=np.float64)
    cdef double[:, :, ::1] la = np.ascontiguousarray(back_len, dtype=np.float64)
    cdef double[:, :, ::1] lb = np.ascontiguousarray(fwd_len, dtype=np.float64)
    cdef Py_ssize_t q_count = vb.shape[0], d_count = vb.shape[1], l_count = vb.shape[2]
    best_arr = np.full(q_count, np.inf)
    t_arr = np.full(q_count, np.nan)
    a_arr = np.full(q_count, np.nan)
    b_arr = np.full(q_count, np.nan)
    d_arr = np.full(q_count, -1, dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef double[::1] t_out = t_arr
    cdef double[::1] a_out = a_arr
    cdef double[::1] b_out = b_arr
    cdef long long[::1] d_out = d_arr
    cdef Py_ssize_t q, d, i, j
    cdef double cur, val, a, b, denom, x_b, x_f
    cdef double ba, bb
    cdef long long bd
    with nogil:
        for q in range(q_count):
            cur = INFINITY
            ba = NAN
            bb = NAN
            bd = -1
            for d in range(d_count):
                for i in range(l_count):
                    x_b = vb[q, d, i]
                    if not isfinite(x_b):
                        continue
                    a = la[q, d, i]
                    for j in range(l_count):
                        x_f = vf[q, d, j]
                        if not isfinite(x_f):
                            continue
                        b = lb[q, d, j]
                        denom = a + b
                        if not (denom > 0.0):
                            continue
                        val = x_b + (a / denom) * (x_f - x_b)
                        if val < cur:
                            cur = val
                            ba = a
                            bb = b
                            bd = d
            best[q] = cur
            if bd >= 0:
                t_out[q] = ba / (ba + bb)
                a_out[q] = ba
                b_out[q] = bb
                d_out[q] = bd
    return best_arr, t_arr, a_arr, b_arr, d_arr


def envelope_1d_exhaustive(xs, hs):
    cdef double[::1] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef double[::1] h = np.ascontiguousarray(hs, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0]
    out_arr = np.array(h, copy=True)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j, k
    cdef double a, b, val, cur
    with nogil:
        for i in range(1, n - 1):
            cur = out[i]
            for j in range(i):
                a = x[i] - x[j]
                for k in range(i + 1, n):
                    b = x[k] - x[i]
                    val = h[j] + (a / (a + b)) * (h[k] - h[j])
                    if val < cur:
                        cur = val
            out[i] = cur
    return out_arr


MAX_INTERP_DIM = 6


def interp_regular(values, lows, steps, periodic, queries):
    vals = np.ascontiguousarray(values, dtype=np.float64)
    if vals.ndim > MAX_INTERP_DIM:
        raise ValueError(f"interpolation supports at most {MAX_INTERP_DIM} axes")
    cdef double[::1] flat = vals.reshape(-1)
    cdef double[:, ::1] q = np.ascontiguousarray(queries, dtype=np.float64)
    cdef double[::1] lo = np.ascontiguousarray(lows, dtype=np.float64)
    cdef double[::1] st = np.ascontiguousarray(steps, dtype=np.float64)
    cdef unsigned char[::1] per = np.ascontiguousarray(periodic, dtype=np.uint8)
    cdef Py_ssize_t ndim = vals.ndim
    cdef long long[::1] shape = np.asarray(vals.shape, dtype=np.int64)
    cdef long long[::1] stride = np.asarray(
        [s // 8 for s in vals.strides], dtype=np.int64)
    cdef Py_ssize_t m = q.shape[0]
    out_arr = np.zeros(m)
    cdef double[::1] out = out_arr
    cdef long long[:, ::1] i0 = np.empty((m, ndim), dtype=np.int64)
    cdef long long[:, ::1] i1 = np.empty((m, ndim), dtype=np.int64)
    cdef double[:, ::1] fr = np.empty((m, ndim))
    cdef Py_ssize_t r, ax, corner, j, size, n_corner = 1 << ndim
    cdef double u
    cdef double buf[64]
    cdef long long n_ax, a0, off
    with nogil:
        for r in range(m):
            for ax in range(ndim):
                u = (q[r, ax] - lo[ax]) / st[ax]
                n_ax = shape[ax]
                if per[ax]:
                    u = fmod(u, <double>n_ax)
                    if u < 0.0:
                        u = u + n_ax
                    a0 = <long long>floor(u)
                    if a0 >= n_ax:
                        a0 = n_ax - 1
                    fr[r, ax] = u - a0
                    i0[r, ax] = a0
                    i1[r, ax] = (a0 + 1) % n_ax
                elif n_ax == 1:
                    i0[r, ax] = 0
                    i1[r, ax] = 0
                    fr[r, ax] = 0.0
                else:
                    if u < 0.0:
                        u = 0.0
                    if u > n_ax - 1.0:
                        u = n_ax - 1.0
                    a0 = <long long>floor(u)
                    if a0 > n_ax - 2:
                        a0 = n_ax - 2
                    fr[r, ax] = u - a0
                    i0[r, ax] = a0
                    i1[r, ax] = a0 + 1
            for corner in range(n_corner):
                off = 0
                for ax in range(ndim):
                    if (corner >> ax) & 1:
                        off = off + i1[r, ax] * stride[ax]
                    else:
                        off = off + i0[r, ax] * stride[ax]
                buf[corner] = flat[off]
            size = n_corner
            for ax in range(ndim):
                size = size >> 1
                for j in range(size):
                    buf[j] = buf[2 * j] + fr[r, ax] * (buf[2 * j + 1] - buf[2 * j])
            out[r] = buf[0]
    return out_arr


cdef inline void _grad_phi(int kind, double *x, Py_ssize_t n, double *g) noexcept nogil:
    cdef Py_ssize_t i
    cdef double sq = 0.0
    for i in range(n):
        sq += x[i] * x[i]
    for i in range(n):
        if kind == 0:
            g[i] = 0.0
        elif kind == 1:
            g[i] = -2.0 * x[i] / (1.0 + sq)
        else:
            g[i] = 2.0 * x[i] / (1.0 - sq)


cdef inline double _factor(int kind, double param, double *x, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    cdef double sq = 0.0
    if kind == 0:
        return 1.0
    for i in range(n):
        sq += x[i] * x[i]
    if kind == 1:
        return 2.0 * param / (1.0 + sq)
    return 2.0 * param / (1.0 - sq)


cdef inline void _accel(int kind, double *x, double *v, Py_ssize_t n,
                        double *g, double *out) noexcept nogil:
    cdef Py_ssize_t i
    cdef double gv = 0.0, vv = 0.0
    _grad_phi(kind, x, n, g)
    for i in range(n):
        gv += g[i] * v[i]
        vv += v[i] * v[i]
    for i in range(n):
        out[i] = -2.0 * gv * v[i] + vv * g[i]


def rk4_conformal(x0, v0, double dt, Py_ssize_t steps, int kind, double param, bint record):
    cdef double[:, ::1] xin = np.ascontiguousarray(x0, dtype=np.float64)
    cdef double[:, ::1] vin = np.ascontiguousarray(v0, dtype=np.float64)
    cdef Py_ssize_t n_traj = xin.shape[0], n = xin.shape[1]
    cdef Py_ssize_t n_rec = steps + 1 if record else 1
    xs_arr = np.empty((n_traj, n_rec, n))
    vs_arr = np.empty((n_traj, n_rec, n))
    drift_arr = np.zeros(n_traj)
    left_arr = np.zeros(n_traj, dtype=np.uint8)
    cdef double[:, :, ::1] xs = xs_arr
    cdef double[:, :, ::1] vs = vs_arr
    cdef double[::1] drift = drift_arr
    cdef unsigned char[::1] left = left_arr
    work_arr = np.zeros(14 * n)
    cdef double[::1] work = work_arr
    cdef double *x = &work[0]
    cdef double *v = &work[n]
    cdef double *k1v = &work[2 * n]
    cdef double *k2v = &work[3 * n]
    cdef double *k3v = &work[4 * n]
    cdef double *k4v = &work[5 * n]
    cdef double *x2 = &work[6 * n]
    cdef double *v2 = &work[7 * n]
    cdef double *x3 = &work[8 * n]
    cdef double *v3 = &work[9 * n]
    cdef double *x4 = &work[10 * n]
    cdef double *v4 = &work[11 * n]
    cdef double *g = &work[12 * n]
    cdef double *xn = &work[13 * n]
    cdef Py_ssize_t p, s, i
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef double speed0, speed, rel, vn_i, sq, vv
    cdef bint is_out
    with nogil:
        for p in range(n_traj):
            for i in range(n):
                x[i] = xin[p, i]
                v[i] = vin[p, i]
                xs[p, 0, i] = x[i]
                vs[p, 0, i] = v[i]
            vv = 0.0
            for i in range(n):
                vv += v[i] * v[i]
            speed0 = _factor(kind, param, x, n) * sqrt(vv)
            for s in range(steps):
                _accel(kind, x, v, n, g, k1v)
                for i in range(n):
                    x2[i] = x[i] + half * v[i]
                    v2[i] = v[i] + half * k1v[i]
                _accel(kind, x2, v2, n, g, k2v)
                for i in range(n):
                    x3[i] = x[i] + half * v2[i]
                    v3[i] = v[i] + half * k2v[i]
                _accel(kind, x3, v3, n, g, k3v)
                for i in range(n):
                    x4[i] = x[i] + dt * v3[i]
                    v4[i] = v[i] + dt * k3v[i]
                _accel(kind, x4, v4, n, g, k4v)
                sq = 0.0
                for i in range(n):
                    xn[i] = x[i] + sixth * (v[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i])
                    sq += xn[i] * xn[i]
                is_out = kind == 2 and sq >= 1.0
                if is_out:
                    left[p] = 1
                if not left[p]:
                    for i in range(n):
                        vn_i = v[i] + sixth * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i])
                        v[i] = vn_i
                        x[i] = xn[i]
                vv = 0.0
                for i in range(n):
                    vv += v[i] * v[i]
                speed = _factor(kind, param, x, n) * sqrt(vv)
                if speed0 > 0.0:
                    rel = speed / speed0 - 1.0
                    if rel < 0.0:
                        rel = -rel
                    if rel > drift[p]:
                        drift[p] = rel
                if record:
                    for i in range(n):
                        xs[p, s + 1, i] = x[i]
                        vs[p, s + 1, i] = v[i]
            if not record:
                for i in range(n):
                    xs[p, 0, i] = x[i]
                    vs[p, 0, i] = v[i]
    return xs_arr, vs_arr, drift_arr, left_arr.astype(bool)
