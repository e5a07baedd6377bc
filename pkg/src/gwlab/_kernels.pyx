# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused pointwise kernels for quaternion / su(2) fields.

Same contract as ``_kernels_np``; the loops avoid the intermediate
temporaries the vectorized numpy versions allocate, which matters inside
the group integrator and holonomy transport where these are the inner loop.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()

BACKEND = "cython"


def quat_mul(a, b):
    """Hamilton product of two quaternion arrays of shape (4, ...)."""
    if a.shape == b.shape:
        shape = a.shape
        af = np.ascontiguousarray(a, dtype=np.float64).reshape(4, -1)
        bf = np.ascontiguousarray(b, dtype=np.float64).reshape(4, -1)
    else:
        shape = np.broadcast_shapes(a.shape, b.shape)
        af = np.ascontiguousarray(np.broadcast_to(a, shape), dtype=np.float64).reshape(4, -1)
        bf = np.ascontiguousarray(np.broadcast_to(b, shape), dtype=np.float64).reshape(4, -1)
    out = np.empty_like(af)
    cdef const double[:, ::1] av = af, bv = bf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, K = af.shape[1]
    cdef double aw, ax, ay, az, bw, bx, by, bz
    with nogil:
        for i in range(K):
            aw = av[0, i]; ax = av[1, i]; ay = av[2, i]; az = av[3, i]
            bw = bv[0, i]; bx = bv[1, i]; by = bv[2, i]; bz = bv[3, i]
            ov[0, i] = aw * bw - ax * bx - ay * by - az * bz
            ov[1, i] = aw * bx + ax * bw + ay * bz - az * by
            ov[2, i] = aw * by - ax * bz + ay * bw + az * bx
            ov[3, i] = aw * bz + ax * by - ay * bx + az * bw
    return out.reshape(shape)


def quat_conj(q):
    qf = np.ascontiguousarray(q, dtype=np.float64).reshape(4, -1)
    out = np.empty_like(qf)
    cdef const double[:, ::1] qv = qf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, K = qf.shape[1]
    with nogil:
        for i in range(K):
            ov[0, i] = qv[0, i]
            ov[1, i] = -qv[1, i]
            ov[2, i] = -qv[2, i]
            ov[3, i] = -qv[3, i]
    return out.reshape(q.shape)


def quat_normalize(q):
    qf = np.ascontiguousarray(q, dtype=np.float64).reshape(4, -1)
    out = np.empty_like(qf)
    cdef const double[:, ::1] qv = qf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, K = qf.shape[1]
    cdef double m
    with nogil:
        for i in range(K):
            m = sqrt(qv[0, i] * qv[0, i] + qv[1, i] * qv[1, i]
                     + qv[2, i] * qv[2, i] + qv[3, i] * qv[3, i])
            ov[0, i] = qv[0, i] / m
            ov[1, i] = qv[1, i] / m
            ov[2, i] = qv[2, i] / m
            ov[3, i] = qv[3, i] / m
    return out.reshape(q.shape)


def su2_exp(c):
    """exp(sum c_i X_i) with X_i = e_i/2: (cos(|c|/2), sin(|c|/2) c/|c|)."""
    cf = np.ascontiguousarray(c, dtype=np.float64).reshape(3, -1)
    out = np.empty((4, cf.shape[1]), dtype=np.float64)
    cdef const double[:, ::1] cv = cf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, K = cf.shape[1]
    cdef double t, f
    with nogil:
        for i in range(K):
            t = sqrt(cv[0, i] * cv[0, i] + cv[1, i] * cv[1, i] + cv[2, i] * cv[2, i])
            if t < 1e-30:
                f = 0.5
            else:
                f = sin(0.5 * t) / t
            ov[0, i] = cos(0.5 * t)
            ov[1, i] = f * cv[0, i]
            ov[2, i] = f * cv[1, i]
            ov[3, i] = f * cv[2, i]
    return out.reshape((4,) + c.shape[1:])


def su2_bracket(x, y):
    if x.shape == y.shape:
        shape = x.shape
        xf = np.ascontiguousarray(x, dtype=np.float64).reshape(3, -1)
        yf = np.ascontiguousarray(y, dtype=np.float64).reshape(3, -1)
    else:
        shape = np.broadcast_shapes(x.shape, y.shape)
        xf = np.ascontiguousarray(np.broadcast_to(x, shape), dtype=np.float64).reshape(3, -1)
        yf = np.ascontiguousarray(np.broadcast_to(y, shape), dtype=np.float64).reshape(3, -1)
    out = np.empty_like(xf)
    cdef const double[:, ::1] xv = xf, yv = yf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, K = xf.shape[1]
    with nogil:
        for i in range(K):
            ov[0, i] = xv[1, i] * yv[2, i] - xv[2, i] * yv[1, i]
            ov[1, i] = xv[2, i] * yv[0, i] - xv[0, i] * yv[2, i]
            ov[2, i] = xv[0, i] * yv[1, i] - xv[1, i] * yv[0, i]
    return out.reshape(shape)


def ad_action(q, c):
    """g X g^{-1} on su(2) components: v + 2w (u x v) + 2 u x (u x v)."""
    qf = np.ascontiguousarray(q, dtype=np.float64).reshape(4, -1)
    cf = np.ascontiguousarray(c, dtype=np.float64).reshape(3, -1)
    out = np.empty_like(cf)
    cdef const double[:, ::1] qv = qf
    cdef const double[:, ::1] cv = cf
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, K = cf.shape[1]
    cdef double w, ux, uy, uz, vx, vy, vz, ax, ay, az, bx, by, bz
    with nogil:
        for i in range(K):
            w = qv[0, i]; ux = qv[1, i]; uy = qv[2, i]; uz = qv[3, i]
            vx = cv[0, i]; vy = cv[1, i]; vz = cv[2, i]
            ax = uy * vz - uz * vy
            ay = uz * vx - ux * vz
            az = ux * vy - uy * vx
            bx = uy * az - uz * ay
            by = uz * ax - ux * az
            bz = ux * ay - uy * ax
            ov[0, i] = vx + 2.0 * (w * ax + bx)
            ov[1, i] = vy + 2.0 * (w * ay + by)
            ov[2, i] = vz + 2.0 * (w * az + bz)
    return out.reshape(c.shape)


def quat_to_algebra(q):
    qf = np.ascontiguousarray(q, dtype=np.float64)
    return 2.0 * qf[1:]
