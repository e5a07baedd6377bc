"""Pure-numpy pointwise kernels for quaternion / su(2) fields.

Component layout: quaternions are arrays of shape (4, ...) ordered
(w, x, y, z); su(2) elements are arrays of shape (3, ...) holding the
coefficients in the fixed basis with [X1, X2] = X3 (cyclic), where X_i is
identified with the pure quaternion e_i / 2.

The compiled extension in ``_kernels.pyx`` implements the same contract
with fused loops; this module is the fallback and the reference for the
backend-equivalence tests.
"""

import numpy as np

BACKEND = "numpy"


def quat_mul(a, b):
    """Hamilton product of two quaternion arrays."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_conj(q):
    out = q.copy()
    out[1:] *= -1.0
    return out


def quat_normalize(q):
    mag = np.sqrt((q * q).sum(axis=0))
    return q / mag


def su2_exp(c):
    """Exponential of the su(2) element with components c, as a unit quaternion.

    With X_i = e_i / 2 the closed form is
    exp(sum c_i X_i) = (cos(|c|/2), sin(|c|/2) * c / |c|).
    """
    theta = np.sqrt((c * c).sum(axis=0))
    half = 0.5 * theta
    # sin(t/2)/t, continuous at t = 0 with value 1/2
    small = theta < 1e-30
    denom = np.where(small, 1.0, theta)
    factor = np.where(small, 0.5, np.sin(half) / denom)
    out = np.empty((4,) + c.shape[1:], dtype=c.dtype)
    out[0] = np.cos(half)
    out[1:] = factor * c
    return out


def su2_bracket(x, y):
    """Lie bracket in components: the structure constants give a cross product."""
    out = np.empty(np.broadcast_shapes(x.shape, y.shape), dtype=np.result_type(x, y))
    out[0] = x[1] * y[2] - x[2] * y[1]
    out[1] = x[2] * y[0] - x[0] * y[2]
    out[2] = x[0] * y[1] - x[1] * y[0]
    return out


def ad_action(q, c):
    """Conjugation g X g^{-1} acting on su(2) components (a rotation)."""
    w = q[0]
    u = q[1:]
    uv = su2_bracket(u, c)
    uuv = su2_bracket(u, uv)
    return c + 2.0 * (w * uv + uuv)


def quat_to_algebra(q):
    """Twice the vector part: the su(2) components of a near-pure quaternion."""
    return 2.0 * q[1:]
