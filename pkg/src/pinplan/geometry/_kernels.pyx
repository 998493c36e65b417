# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled geometry kernels: early-exit twins of _kernels_py."""

from libc.math cimport fabs, sqrt

BACKEND = "compiled"

cdef double _DET_EPS = 1e-14
cdef double _BTOL = 1e-9


cdef inline void _cross(const double* a, const double* b, double* out) nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double _dot(const double* a, const double* b) nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef int _mt_one(const double* a, const double* d,
                 const double* p0, const double* p1, const double* p2,
                 double* t_out, double* u_out, double* v_out) nogil:
    """Segment/triangle test; returns 1 on hit with params filled."""
    cdef double e1[3], e2[3], p[3], s[3], q[3]
    cdef double det, inv, u, v, t
    cdef int k
    for k in range(3):
        e1[k] = p1[k] - p0[k]
        e2[k] = p2[k] - p0[k]
    _cross(d, e2, p)
    det = _dot(e1, p)
    if fabs(det) <= _DET_EPS:
        return 0
    inv = 1.0 / det
    for k in range(3):
        s[k] = a[k] - p0[k]
    u = _dot(s, p) * inv
    if u < -_BTOL:
        return 0
    _cross(s, e1, q)
    v = _dot(d, q) * inv
    if v < -_BTOL or u + v > 1.0 + _BTOL:
        return 0
    t = _dot(e2, q) * inv
    if t < -_BTOL or t > 1.0 + _BTOL:
        return 0
    t_out[0] = t
    u_out[0] = u
    v_out[0] = v
    return 1


def segment_hits_triangles(a, b, double[:, ::1] v0, double[:, ::1] v1,
                           double[:, ::1] v2, exclude_center=None,
                           double exclude_radius=0.0):
    cdef double pa[3], d[3], c[3]
    cdef double t, u, v, hx, hy, hz, dist2, r2
    cdef int has_excl = 0
    cdef Py_ssize_t i, m = v0.shape[0]
    cdef int k
    for k in range(3):
        pa[k] = a[k]
        d[k] = b[k] - a[k]
    if exclude_center is not None and exclude_radius > 0.0:
        has_excl = 1
        for k in range(3):
            c[k] = exclude_center[k]
        r2 = exclude_radius * exclude_radius
    for i in range(m):
        if _mt_one(pa, d, &v0[i, 0], &v1[i, 0], &v2[i, 0], &t, &u, &v):
            if not has_excl:
                return True
            hx = pa[0] + t * d[0] - c[0]
            hy = pa[1] + t * d[1] - c[1]
            hz = pa[2] + t * d[2] - c[2]
            dist2 = hx * hx + hy * hy + hz * hz
            if dist2 > r2:
                return True
    return False


def segment_crossings(a, b, double[:, ::1] v0, double[:, ::1] v1,
                      double[:, ::1] v2):
    cdef double pa[3], d[3]
    cdef double t, u, v
    cdef double g = 1e-7
    cdef Py_ssize_t i, m = v0.shape[0]
    cdef int k, count = 0, clean = 1
    for k in range(3):
        pa[k] = a[k]
        d[k] = b[k] - a[k]
    for i in range(m):
        if _mt_one(pa, d, &v0[i, 0], &v1[i, 0], &v2[i, 0], &t, &u, &v):
            count += 1
            if (u < g or v < g or u + v > 1.0 - g or t < g or t > 1.0 - g):
                clean = 0
    return count, bool(clean)


cdef int _box_tri_overlap(const double* q0, const double* q1, const double* q2,
                          const double* h) nogil:
    """SAT overlap for a triangle already in box-local coordinates."""
    cdef double eps = 1e-12
    cdef double lo, hi, d, r
    cdef double n[3], e[3][3], L[3]
    cdef const double* qs[3]
    cdef double p0, p1, p2
    cdef int k, fk, ax
    qs[0] = q0
    qs[1] = q1
    qs[2] = q2

    for k in range(3):
        lo = q0[k]
        if q1[k] < lo: lo = q1[k]
        if q2[k] < lo: lo = q2[k]
        hi = q0[k]
        if q1[k] > hi: hi = q1[k]
        if q2[k] > hi: hi = q2[k]
        if not (lo < h[k] - eps and hi > -h[k] + eps):
            return 0

    for k in range(3):
        e[0][k] = q1[k] - q0[k]
        e[1][k] = q2[k] - q1[k]
        e[2][k] = q0[k] - q2[k]
    _cross(e[0], e[1], n)
    d = _dot(n, q0)
    r = fabs(n[0]) * h[0] + fabs(n[1]) * h[1] + fabs(n[2]) * h[2]
    if not (fabs(d) < r - eps):
        return 0

    for fk in range(3):
        for ax in range(3):
            if ax == 0:
                L[0] = 0.0; L[1] = -e[fk][2]; L[2] = e[fk][1]
            elif ax == 1:
                L[0] = e[fk][2]; L[1] = 0.0; L[2] = -e[fk][0]
            else:
                L[0] = -e[fk][1]; L[1] = e[fk][0]; L[2] = 0.0
            if _dot(L, L) <= 1e-20:
                continue  # edge parallel to a box axis: degenerate axis
            p0 = _dot(qs[0], L)
            p1 = _dot(qs[1], L)
            p2 = _dot(qs[2], L)
            lo = p0
            if p1 < lo: lo = p1
            if p2 < lo: lo = p2
            hi = p0
            if p1 > hi: hi = p1
            if p2 > hi: hi = p2
            r = fabs(L[0]) * h[0] + fabs(L[1]) * h[1] + fabs(L[2]) * h[2]
            if not (lo < r - eps and hi > -r + eps):
                return 0
    return 1


def box_hits_triangles(center, axes, half, double[:, ::1] v0,
                       double[:, ::1] v1, double[:, ::1] v2):
    cdef double c[3], hh[3], ax[3][3]
    cdef double q0[3], q1[3], q2[3], w[3]
    cdef Py_ssize_t i, m = v0.shape[0]
    cdef int k, j
    for k in range(3):
        c[k] = center[k]
        hh[k] = half[k]
        for j in range(3):
            ax[k][j] = axes[k][j]
    for i in range(m):
        for k in range(3):
            w[k] = v0[i, k] - c[k]
        for k in range(3):
            q0[k] = _dot(ax[k], w)
        for k in range(3):
            w[k] = v1[i, k] - c[k]
        for k in range(3):
            q1[k] = _dot(ax[k], w)
        for k in range(3):
            w[k] = v2[i, k] - c[k]
        for k in range(3):
            q2[k] = _dot(ax[k], w)
        if _box_tri_overlap(q0, q1, q2, hh):
            return True
    return False
