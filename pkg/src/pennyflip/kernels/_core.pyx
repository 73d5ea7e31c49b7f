# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernels for piecewise-constant Lindblad dynamics.

Same entry points and semantics as ``_python``; all 2x2 complex algebra is
unrolled onto scalars. Matrices travel as length-4 row-major buffers
(00, 01, 10, 11).
"""

import numpy as np


cdef inline void _mm(const double complex* a, const double complex* b,
                     double complex* out) noexcept nogil:
    out[0] = a[0] * b[0] + a[1] * b[2]
    out[1] = a[0] * b[1] + a[1] * b[3]
    out[2] = a[2] * b[0] + a[3] * b[2]
    out[3] = a[2] * b[1] + a[3] * b[3]


cdef void _forward_rhs(const double complex* h, const double complex* y,
                       int n_ch, const double complex* lops,
                       const double complex* ldags, const double complex* gops,
                       const double* rates, double complex* out) noexcept nogil:
    cdef double complex t1[4]
    cdef double complex t2[4]
    cdef double complex t3[4]
    cdef int c, k
    _mm(h, y, t1)
    _mm(y, h, t2)
    for k in range(4):
        out[k] = -1j * (t1[k] - t2[k])
    for c in range(n_ch):
        _mm(lops + 4 * c, y, t1)
        _mm(t1, ldags + 4 * c, t2)      # L y L^dag
        _mm(gops + 4 * c, y, t1)        # (L^dag L) y
        _mm(y, gops + 4 * c, t3)        # y (L^dag L)
        for k in range(4):
            out[k] = out[k] + rates[c] * (t2[k] - 0.5 * (t1[k] + t3[k]))


cdef void _adjoint_rhs(const double complex* h, const double complex* y,
                       int n_ch, const double complex* lops,
                       const double complex* ldags, const double complex* gops,
                       const double* rates, double complex* out) noexcept nogil:
    # d(lam)/dt = -i[H, lam] - sum_j gamma_j (Lj^dag lam Lj - 1/2 {Lj^dag Lj, lam})
    cdef double complex t1[4]
    cdef double complex t2[4]
    cdef double complex t3[4]
    cdef int c, k
    _mm(h, y, t1)
    _mm(y, h, t2)
    for k in range(4):
        out[k] = -1j * (t1[k] - t2[k])
    for c in range(n_ch):
        _mm(ldags + 4 * c, y, t1)
        _mm(t1, lops + 4 * c, t2)       # L^dag y L
        _mm(gops + 4 * c, y, t1)
        _mm(y, gops + 4 * c, t3)
        for k in range(4):
            out[k] = out[k] - rates[c] * (t2[k] - 0.5 * (t1[k] + t3[k]))


cdef void _propagate(const double complex* hs, const double* durations, int n_seg,
                     int n_ch, const double complex* lops, const double complex* ldags,
                     const double complex* gops, const double* rates,
                     int steps, bint record, double complex* out) noexcept nogil:
    cdef double complex y[4]
    cdef double complex k1[4]
    cdef double complex k2[4]
    cdef double complex k3[4]
    cdef double complex k4[4]
    cdef double complex tmp[4]
    cdef int s, i, k, idx
    cdef double dt
    for k in range(4):
        y[k] = out[k]
    idx = 0
    for s in range(n_seg):
        dt = durations[s] / steps
        for i in range(steps):
            _forward_rhs(hs + 4 * s, y, n_ch, lops, ldags, gops, rates, k1)
            for k in range(4):
                tmp[k] = y[k] + 0.5 * dt * k1[k]
            _forward_rhs(hs + 4 * s, tmp, n_ch, lops, ldags, gops, rates, k2)
            for k in range(4):
                tmp[k] = y[k] + 0.5 * dt * k2[k]
            _forward_rhs(hs + 4 * s, tmp, n_ch, lops, ldags, gops, rates, k3)
            for k in range(4):
                tmp[k] = y[k] + dt * k3[k]
            _forward_rhs(hs + 4 * s, tmp, n_ch, lops, ldags, gops, rates, k4)
            for k in range(4):
                y[k] = y[k] + (dt / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
            idx += 1
            if record:
                for k in range(4):
                    out[4 * idx + k] = y[k]
    if not record:
        for k in range(4):
            out[k] = y[k]


cdef void _adjoint(const double complex* hs, const double* durations, int n_seg,
                   int n_ch, const double complex* lops, const double complex* ldags,
                   const double complex* gops, const double* rates,
                   int steps, double complex* out) noexcept nogil:
    cdef double complex y[4]
    cdef double complex k1[4]
    cdef double complex k2[4]
    cdef double complex k3[4]
    cdef double complex k4[4]
    cdef double complex tmp[4]
    cdef int s, i, k, idx
    cdef double dt
    idx = n_seg * steps
    for k in range(4):
        y[k] = out[4 * idx + k]
    for s in range(n_seg - 1, -1, -1):
        dt = -durations[s] / steps
        for i in range(steps):
            _adjoint_rhs(hs + 4 * s, y, n_ch, lops, ldags, gops, rates, k1)
            for k in range(4):
                tmp[k] = y[k] + 0.5 * dt * k1[k]
            _adjoint_rhs(hs + 4 * s, tmp, n_ch, lops, ldags, gops, rates, k2)
            for k in range(4):
                tmp[k] = y[k] + 0.5 * dt * k2[k]
            _adjoint_rhs(hs + 4 * s, tmp, n_ch, lops, ldags, gops, rates, k3)
            for k in range(4):
                tmp[k] = y[k] + dt * k3[k]
            _adjoint_rhs(hs + 4 * s, tmp, n_ch, lops, ldags, gops, rates, k4)
            for k in range(4):
                y[k] = y[k] + (dt / 6.0) * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k])
            idx -= 1
            for k in range(4):
                out[4 * idx + k] = y[k]


def _pack(l_ops, rates):
    l_arr = np.ascontiguousarray(l_ops, dtype=np.complex128).reshape(-1, 2, 2)
    ldags = np.ascontiguousarray(l_arr.conj().transpose(0, 2, 1))
    gops = np.ascontiguousarray(ldags @ l_arr)
    r_arr = np.ascontiguousarray(rates, dtype=np.float64)
    return l_arr, ldags, gops, r_arr


def propagate_rk4(rho0, hs, durations, l_ops, rates, int steps, bint record=True):
    """Integrate the master equation through piecewise-constant Hamiltonians.

    Returns (n_seg*steps + 1, 2, 2) samples when recording, else (1, 2, 2)
    with the final state.
    """
    hs_c = np.ascontiguousarray(hs, dtype=np.complex128)
    dur_c = np.ascontiguousarray(durations, dtype=np.float64)
    l_arr, ldags, gops, r_arr = _pack(l_ops, rates)
    cdef int n_seg = hs_c.shape[0]
    cdef int n_ch = l_arr.shape[0]
    cdef int n_total = n_seg * steps + 1 if record else 1
    out = np.empty((n_total, 2, 2), dtype=np.complex128)
    out[0] = rho0

    cdef double complex[:, :, ::1] hs_mv = hs_c
    cdef double[::1] dur_mv = dur_c
    cdef double complex[:, :, ::1] out_mv = out
    cdef double complex[:, :, ::1] l_mv = l_arr
    cdef double complex[:, :, ::1] ldag_mv = ldags
    cdef double complex[:, :, ::1] g_mv = gops
    cdef double[::1] r_mv = r_arr
    cdef const double complex* lptr = NULL
    cdef const double complex* ldptr = NULL
    cdef const double complex* gptr = NULL
    cdef const double* rptr = NULL
    if n_ch > 0:
        lptr = &l_mv[0, 0, 0]
        ldptr = &ldag_mv[0, 0, 0]
        gptr = &g_mv[0, 0, 0]
        rptr = &r_mv[0]
    with nogil:
        _propagate(&hs_mv[0, 0, 0], &dur_mv[0], n_seg, n_ch,
                   lptr, ldptr, gptr, rptr, steps, record, &out_mv[0, 0, 0])
    return out


def adjoint_rk4(lam_final, hs, durations, l_ops, rates, int steps):
    """Integrate the adjoint state backward from t = T; samples share the forward grid."""
    hs_c = np.ascontiguousarray(hs, dtype=np.complex128)
    dur_c = np.ascontiguousarray(durations, dtype=np.float64)
    l_arr, ldags, gops, r_arr = _pack(l_ops, rates)
    cdef int n_seg = hs_c.shape[0]
    cdef int n_ch = l_arr.shape[0]
    cdef int n_total = n_seg * steps + 1
    out = np.empty((n_total, 2, 2), dtype=np.complex128)
    out[n_total - 1] = lam_final

    cdef double complex[:, :, ::1] hs_mv = hs_c
    cdef double[::1] dur_mv = dur_c
    cdef double complex[:, :, ::1] out_mv = out
    cdef double complex[:, :, ::1] l_mv = l_arr
    cdef double complex[:, :, ::1] ldag_mv = ldags
    cdef double complex[:, :, ::1] g_mv = gops
    cdef double[::1] r_mv = r_arr
    cdef const double complex* lptr = NULL
    cdef const double complex* ldptr = NULL
    cdef const double complex* gptr = NULL
    cdef const double* rptr = NULL
    if n_ch > 0:
        lptr = &l_mv[0, 0, 0]
        ldptr = &ldag_mv[0, 0, 0]
        gptr = &g_mv[0, 0, 0]
        rptr = &r_mv[0]
    with nogil:
        _adjoint(&hs_mv[0, 0, 0], &dur_mv[0], n_seg, n_ch,
                 lptr, ldptr, gptr, rptr, steps, &out_mv[0, 0, 0])
    return out
