"""su(2)- and SU(2)-valued fields on the torus and their pointwise/spectral ops.

Conventions fixed here once:

* su(2) basis {X1, X2, X3} with [X1, X2] = X3 cyclic and |X_i| = 1; the
  quaternion identification is X_i = (0, e_i/2), so the bracket acts on
  component triples as the cross product and the exponential has the
  closed form implemented in the kernel backend.
* Fields are immutable values: component arrays are marked read-only and
  the spectral representation is a lazy cache that is never invalidated
  because nothing mutates in place.
* forward transform: Fourier-series coefficients c_k with
  f(x) = sum_k c_k exp(2 pi i k . x / L); a single cosine mode
  cos(2 pi x_1) therefore has two coefficients of magnitude 1/2.
"""

import os
from functools import lru_cache

import numpy as np
import scipy.fft as _fft

from gwlab.backend import kernels
from gwlab.grid import Grid

_WORKERS = min(os.cpu_count() or 1, 8)


# ---------------------------------------------------------------------------
# raw spectral helpers (trailing n axes are the spatial block)


def to_spectral(grid: Grid, arr):
    return _fft.fftn(arr, axes=grid.spatial_axes, norm="forward", workers=_WORKERS)


def from_spectral(grid: Grid, hat):
    out = _fft.ifftn(hat, axes=grid.spatial_axes, norm="forward", workers=_WORKERS)
    return np.ascontiguousarray(out.real)


def derivative_multiplier(grid: Grid, axis: int):
    """2 pi i xi_axis with the Nyquist line zeroed.

    An odd multiplier at the unpaired frequency -N/2 produces imaginary
    samples that realification silently drops; zeroing it keeps d/dx
    skew-adjoint and makes composed first derivatives agree with the
    even-multiplier Laplacian on everything the grid can represent.
    """
    return _deriv_mult(grid.n, grid.N, grid.L, axis)


@lru_cache(maxsize=64)
def _deriv_mult(n, N, L, axis):
    k = np.fft.fftfreq(N) * N
    k[N // 2] = 0.0
    shape = [1] * n
    shape[axis - 1] = N
    out = (2j * np.pi * k / L).reshape(shape)
    out.flags.writeable = False
    return out


def laplacian_multiplier(grid: Grid):
    """-4 pi^2 |xi|^2 (even: the Nyquist mode is kept)."""
    return -4.0 * np.pi**2 * grid.freq_norm**2


def diff_array(grid: Grid, arr, axis: int):
    """Spectral d/dx_axis of a real array (axis is 1-based)."""
    return from_spectral(grid, to_spectral(grid, arr) * derivative_multiplier(grid, axis))


# ---------------------------------------------------------------------------
# field types


class LieAlgebraField:
    """su(2)-valued function: 3 real component arrays over the spatial grid."""

    __slots__ = ("grid", "c", "_hat")

    def __init__(self, grid: Grid, c):
        c = np.asarray(c, dtype=np.float64)
        if c.shape != (3,) + grid.shape:
            raise ValueError(f"expected components of shape {(3,) + grid.shape}, got {c.shape}")
        c.flags.writeable = False
        self.grid = grid
        self.c = c
        self._hat = None

    @classmethod
    def zero(cls, grid: Grid):
        return cls(grid, np.zeros((3,) + grid.shape))

    @classmethod
    def constant(cls, grid: Grid, coeffs):
        c = np.zeros((3,) + grid.shape)
        for i in range(3):
            c[i] = coeffs[i]
        return cls(grid, c)

    @classmethod
    def from_spectral(cls, grid: Grid, hat):
        return cls(grid, from_spectral(grid, hat))

    @property
    def hat(self):
        if self._hat is None:
            hat = to_spectral(self.grid, self.c)
            hat.flags.writeable = False
            self._hat = hat
        return self._hat

    def __add__(self, other):
        self._check(other)
        return LieAlgebraField(self.grid, self.c + other.c)

    def __sub__(self, other):
        self._check(other)
        return LieAlgebraField(self.grid, self.c - other.c)

    def __mul__(self, scalar):
        return LieAlgebraField(self.grid, self.c * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return LieAlgebraField(self.grid, -self.c)

    def _check(self, other):
        if self.grid != other.grid:
            raise ValueError("grid mismatch")

    def l2(self) -> float:
        return float(np.sqrt((self.c**2).sum() * self.grid.cell_volume))

    def linf(self) -> float:
        return float(np.abs(self.c).max(initial=0.0))

    def mean(self):
        return self.c.mean(axis=tuple(range(1, self.c.ndim)))


class GroupField:
    """SU(2)-valued function stored as unit quaternions (w, x, y, z)."""

    __slots__ = ("grid", "q")

    def __init__(self, grid: Grid, q, normalize: bool = False):
        q = np.asarray(q, dtype=np.float64)
        if q.shape != (4,) + grid.shape:
            raise ValueError(f"expected quaternions of shape {(4,) + grid.shape}, got {q.shape}")
        if normalize:
            q = kernels.quat_normalize(q)
        q.flags.writeable = False
        self.grid = grid
        self.q = q

    @classmethod
    def identity(cls, grid: Grid):
        q = np.zeros((4,) + grid.shape)
        q[0] = 1.0
        return cls(grid, q)

    def unit_norm_defect(self) -> float:
        return float(np.abs(np.sqrt((self.q**2).sum(axis=0)) - 1.0).max())


class OneForm:
    """(n+1) su(2)-valued components indexed mu = 0..n (mu = 0 is time)."""

    __slots__ = ("grid", "comps")

    def __init__(self, grid: Grid, comps):
        comps = np.asarray(comps, dtype=np.float64)
        if comps.shape != (grid.n + 1, 3) + grid.shape:
            raise ValueError(
                f"expected shape {(grid.n + 1, 3) + grid.shape}, got {comps.shape}"
            )
        comps.flags.writeable = False
        self.grid = grid
        self.comps = comps

    @classmethod
    def zero(cls, grid: Grid):
        return cls(grid, np.zeros((grid.n + 1, 3) + grid.shape))

    @classmethod
    def from_entries(cls, entries):
        grid = entries[0].grid
        return cls(grid, np.stack([e.c for e in entries]))

    def entry(self, mu: int) -> LieAlgebraField:
        return LieAlgebraField(self.grid, self.comps[mu])

    @property
    def spatial(self):
        return [self.entry(j) for j in range(1, self.grid.n + 1)]

    def __add__(self, other):
        return OneForm(self.grid, self.comps + other.comps)

    def __sub__(self, other):
        return OneForm(self.grid, self.comps - other.comps)

    def __mul__(self, scalar):
        return OneForm(self.grid, self.comps * float(scalar))

    __rmul__ = __mul__

    def l2(self) -> float:
        return float(np.sqrt((self.comps**2).sum() * self.grid.cell_volume))


def form_pairs(n: int):
    """Upper-triangle index pairs (mu, nu), mu < nu, of an antisymmetric table."""
    return [(mu, nu) for mu in range(n + 1) for nu in range(mu + 1, n + 1)]


class TwoForm:
    """Antisymmetric (n+1) x (n+1) table of su(2) fields; upper triangle stored."""

    __slots__ = ("grid", "comps", "pairs")

    def __init__(self, grid: Grid, comps):
        pairs = form_pairs(grid.n)
        comps = np.asarray(comps, dtype=np.float64)
        if comps.shape != (len(pairs), 3) + grid.shape:
            raise ValueError(
                f"expected shape {(len(pairs), 3) + grid.shape}, got {comps.shape}"
            )
        comps.flags.writeable = False
        self.grid = grid
        self.comps = comps
        self.pairs = pairs

    @classmethod
    def zero(cls, grid: Grid):
        return cls(grid, np.zeros((len(form_pairs(grid.n)), 3) + grid.shape))

    def index(self, mu: int, nu: int) -> int:
        return self.pairs.index((mu, nu) if mu < nu else (nu, mu))

    def entry(self, mu: int, nu: int) -> LieAlgebraField:
        """F_{mu nu}; antisymmetry is exact because only mu < nu is stored."""
        if mu == nu:
            return LieAlgebraField.zero(self.grid)
        sign = 1.0 if mu < nu else -1.0
        return LieAlgebraField(self.grid, sign * self.comps[self.index(mu, nu)])

    def __add__(self, other):
        return TwoForm(self.grid, self.comps + other.comps)

    def __sub__(self, other):
        return TwoForm(self.grid, self.comps - other.comps)

    def __mul__(self, scalar):
        return TwoForm(self.grid, self.comps * float(scalar))

    __rmul__ = __mul__

    def l2(self) -> float:
        # the stored triangle counts each unordered pair once
        return float(np.sqrt(2.0 * (self.comps**2).sum() * self.grid.cell_volume))


class SpaceTimeField:
    """Uniformly time-sampled field with a co-stored exact time derivative.

    ``vals`` and ``dots`` have shape (M+1, C, N, ..., N); the channel axis C
    carries whatever component structure the caller needs (3 for an su(2)
    field, 3(n+1) for a one-form, ...), and norms treat channels jointly
    through the pointwise Euclidean magnitude.
    """

    __slots__ = ("grid", "vals", "dots", "label")

    def __init__(self, grid: Grid, vals, dots=None, label: str = ""):
        vals = np.asarray(vals, dtype=np.float64)
        if dots is not None:
            dots = np.asarray(dots, dtype=np.float64)
            if vals.shape != dots.shape:
                raise ValueError("value and derivative channels must match")
        if vals.shape[0] != grid.M + 1 or vals.shape[2:] != grid.shape:
            raise ValueError(f"expected (M+1, C, grid...) arrays, got {vals.shape}")
        self.grid = grid
        self.vals = vals
        self.dots = dots
        self.label = label

    @classmethod
    def zeros(cls, grid: Grid, channels: int, label: str = ""):
        shape = (grid.M + 1, channels) + grid.shape
        return cls(grid, np.zeros(shape), np.zeros(shape), label)

    @property
    def channels(self) -> int:
        return self.vals.shape[1]

    def __sub__(self, other):
        return SpaceTimeField(self.grid, self.vals - other.vals, self.dots - other.dots)

    def __add__(self, other):
        return SpaceTimeField(self.grid, self.vals + other.vals, self.dots + other.dots)

    def __mul__(self, scalar):
        s = float(scalar)
        return SpaceTimeField(self.grid, self.vals * s, self.dots * s, self.label)

    __rmul__ = __mul__

    def slice_oneform(self, m: int) -> OneForm:
        n = self.grid.n
        return OneForm(self.grid, self.vals[m].reshape((n + 1, 3) + self.grid.shape))


# ---------------------------------------------------------------------------
# operations


def spectral_transform(f, direction: str = "forward", grid: Grid | None = None):
    """Forward: field -> complex coefficient array indexed by lattice frequency.

    Backward inverts exactly up to round-off; it accepts the coefficient
    array together with the grid it lives on.
    """
    if direction == "forward":
        return np.array(f.hat) if isinstance(f, LieAlgebraField) else to_spectral(grid or f.grid, f)
    if direction == "backward":
        if grid is None:
            raise ValueError("backward transform needs the target grid")
        return LieAlgebraField(grid, from_spectral(grid, f))
    raise ValueError(f"unknown direction {direction!r}")


def differentiate(f: LieAlgebraField, axis: int) -> LieAlgebraField:
    """Spectral d/dx_axis (axis in 1..n): multiplication by 2 pi i xi_axis."""
    return LieAlgebraField.from_spectral(
        f.grid, f.hat * derivative_multiplier(f.grid, axis)
    )


def laplacian(f: LieAlgebraField) -> LieAlgebraField:
    return LieAlgebraField.from_spectral(f.grid, f.hat * laplacian_multiplier(f.grid))


def bracket(X: LieAlgebraField, Y: LieAlgebraField) -> LieAlgebraField:
    if X.grid != Y.grid:
        raise ValueError("grid mismatch")
    return LieAlgebraField(X.grid, kernels.su2_bracket(X.c, Y.c))


def group_exp(X: LieAlgebraField) -> GroupField:
    return GroupField(X.grid, kernels.su2_exp(X.c), normalize=True)


def group_mul(g: GroupField, h: GroupField) -> GroupField:
    if g.grid != h.grid:
        raise ValueError("grid mismatch")
    return GroupField(g.grid, kernels.quat_mul(g.q, h.q), normalize=True)


def group_inv(g: GroupField) -> GroupField:
    # unit quaternions: the inverse is the conjugate
    return GroupField(g.grid, kernels.quat_conj(g.q))


def adjoint(g: GroupField, X: LieAlgebraField) -> LieAlgebraField:
    """g X g^{-1}: a pointwise isometry of su(2)."""
    if g.grid != X.grid:
        raise ValueError("grid mismatch")
    return LieAlgebraField(X.grid, kernels.ad_action(g.q, X.c))


def maurer_cartan(s: GroupField, axis: int) -> LieAlgebraField:
    """s^{-1} d_axis s as an su(2) field (axis in 1..n).

    The quaternion product conj(s) * d s is pure up to discretization; the
    scalar part is dropped and the vector part carries the factor 2 from
    the X_i = e_i/2 identification.
    """
    ds = diff_array(s.grid, s.q, axis)
    prod = kernels.quat_mul(kernels.quat_conj(s.q), ds)
    return LieAlgebraField(s.grid, kernels.quat_to_algebra(prod))


def left_translate_derivative(g_new: GroupField, g_old: GroupField, dt: float) -> LieAlgebraField:
    """Algebra components of (g_new g_old^{-1} - 1)/dt style finite rotation rate."""
    rel = kernels.quat_mul(g_new.q, kernels.quat_conj(g_old.q))
    return LieAlgebraField(g_new.grid, kernels.quat_to_algebra(rel) / dt)
