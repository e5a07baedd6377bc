"""Dyadic frequency calculus: ball/shell projections and inverse multipliers.

The radial low-pass profile is the polynomial smoothstep in r^2

    m(r) = 1                     for r <= 1
    m(r) = S((4 - r^2) / 3)      for 1 < r < 2,   S(u) = u^3 (10 - 15 u + 6 u^2)
    m(r) = 0                     for r >= 2

which is C^2, exactly reproducible, and satisfies the support constraints
bit-identically.  The shell profile is psi(r) = m(r) - m(2r), supported in
[1/2, 2] with sum_k psi(2^{-k} r) = 1 for every r > 0.

Zero-mode policy (the single place that owns it): homogeneous multipliers
(1/|xi|, 1/|xi|^2, Riesz) send the zero mode to 0.  The lumped low
projector keeps the zero mode, so the ladder reconstructs the identity;
norm aggregation drops it via ``low_block(..., drop_zero_mode=True)``
because the flat-space analogue decays at infinity and has none.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from gwlab.fields import LieAlgebraField, from_spectral, to_spectral
from gwlab.grid import Grid


def lowpass_profile(r):
    """Radial low-pass bump m(r)."""
    r = np.asarray(r, dtype=np.float64)
    u = np.clip((4.0 - r * r) / 3.0, 0.0, 1.0)
    s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, s))


def shell_profile(r):
    """psi(r) = m(r) - m(2r), supported on the annulus [1/2, 2]."""
    r = np.asarray(r, dtype=np.float64)
    return lowpass_profile(r) - lowpass_profile(2.0 * r)


@dataclass(frozen=True)
class MultiplierProfile:
    """Profile pair (m, psi); the default instance is the smoothstep above."""

    def m(self, r):
        return lowpass_profile(r)

    def psi(self, r):
        return shell_profile(r)


@dataclass(frozen=True)
class DyadicLadder:
    """Shell index range for a grid, in physical frequency units (base 1/L).

    The lowest projector lumps all |xi| <= 2^{k_min}; shells k_min < k <=
    k_max tile the rest of the represented spectrum, so

        lumped_low + sum_k Q_k = identity

    on every field the grid holds.
    """

    grid: Grid
    k_min: int
    k_max: int

    @classmethod
    def for_grid(cls, grid: Grid) -> "DyadicLadder":
        k_min = int(round(math.log2(1.0 / grid.L)))
        top = float(grid.freq_norm.max())
        k_max = int(math.ceil(math.log2(top) - 1e-12))
        return cls(grid, k_min, k_max)

    @property
    def shells(self):
        return list(range(self.k_min + 1, self.k_max + 1))

    @property
    def blocks(self):
        """(key, is_low) pairs: the lumped-low block then each shell."""
        return [(self.k_min, True)] + [(k, False) for k in self.shells]

    def low_mask(self, drop_zero_mode: bool = False):
        return _low_mask(self.grid.n, self.grid.N, self.grid.L, self.k_min, drop_zero_mode)

    def shell_mask(self, k: int):
        return _shell_mask(self.grid.n, self.grid.N, self.grid.L, k)

    def block_mask(self, key: int, is_low: bool, drop_zero_mode: bool = False):
        return self.low_mask(drop_zero_mode) if is_low else self.shell_mask(key)


@lru_cache(maxsize=256)
def _shell_mask(n, N, L, k):
    out = shell_profile(_freq(n, N, L) / 2.0**k)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=64)
def _low_mask(n, N, L, k_min, drop_zero_mode):
    out = lowpass_profile(_freq(n, N, L) / 2.0**k_min)
    if drop_zero_mode:
        out = out.copy()
        out[(0,) * n] = 0.0
    out.flags.writeable = False
    return out


def _freq(n, N, L):
    return Grid(n, N, L).freq_norm


# ---------------------------------------------------------------------------
# projections


def project_low(f: LieAlgebraField, k: int) -> LieAlgebraField:
    """Frequency-ball projection: multiply coefficients by m(2^{-k} |xi|)."""
    mask = lowpass_profile(f.grid.freq_norm / 2.0**k)
    return LieAlgebraField.from_spectral(f.grid, f.hat * mask)


def project_shell(f: LieAlgebraField, k: int) -> LieAlgebraField:
    """Annulus projection: multiplier psi(2^{-k} |xi|), support 2^{k-1} <= |xi| <= 2^{k+1}."""
    mask = shell_profile(f.grid.freq_norm / 2.0**k)
    return LieAlgebraField.from_spectral(f.grid, f.hat * mask)


def lumped_low(f: LieAlgebraField, ladder: DyadicLadder | None = None) -> LieAlgebraField:
    ladder = ladder or DyadicLadder.for_grid(f.grid)
    return LieAlgebraField.from_spectral(f.grid, f.hat * ladder.low_mask())


# ---------------------------------------------------------------------------
# homogeneous inverse multipliers (zero mode -> 0)


def inverse_gradient_multiplier(grid: Grid):
    return _inv_grad_mult(grid.n, grid.N, grid.L)


@lru_cache(maxsize=32)
def _inv_grad_mult(n, N, L):
    g = Grid(n, N, L)
    out = 1.0 / g.freq_norm_safe
    out = out.copy()
    out[(0,) * n] = 0.0
    out.flags.writeable = False
    return out


@lru_cache(maxsize=32)
def _inv_lap_mult(n, N, L):
    g = Grid(n, N, L)
    out = -1.0 / (4.0 * np.pi**2 * g.freq_norm_safe**2)
    out = out.copy()
    out[(0,) * n] = 0.0
    out.flags.writeable = False
    return out


@lru_cache(maxsize=32)
def _riesz_mult(n, N, L, axis):
    g = Grid(n, N, L)
    out = 1j * np.broadcast_to(g.freq(axis), g.shape) / g.freq_norm_safe
    out = out.copy()
    out[(0,) * n] = 0.0
    out.flags.writeable = False
    return out


def inverse_gradient(f: LieAlgebraField) -> LieAlgebraField:
    """Scalar multiplier 1/|xi| (zero mode killed)."""
    return LieAlgebraField.from_spectral(
        f.grid, f.hat * inverse_gradient_multiplier(f.grid)
    )


def inverse_laplacian(f: LieAlgebraField) -> LieAlgebraField:
    """True inverse Laplacian: multiplier -1/(4 pi^2 |xi|^2), zero mode killed."""
    return LieAlgebraField.from_spectral(
        f.grid, f.hat * _inv_lap_mult(f.grid.n, f.grid.N, f.grid.L)
    )


def riesz(f: LieAlgebraField, axis: int) -> LieAlgebraField:
    """Riesz transform i xi_axis / |xi| (zero mode killed)."""
    return LieAlgebraField.from_spectral(
        f.grid, f.hat * _riesz_mult(f.grid.n, f.grid.N, f.grid.L, axis)
    )


def inverse_laplacian_array(grid: Grid, arr):
    return from_spectral(grid, to_spectral(grid, arr) * _inv_lap_mult(grid.n, grid.N, grid.L))


def shell_kernel_l1(grid: Grid, k: int) -> float:
    """L^1 mass of the discrete convolution kernel realizing one shell.

    With coefficients c_xi(K) = psi(2^{-k}|xi|)/L^n the operator Q_k is
    convolution against K; the Riemann L^1 sum reduces to the mean of the
    synthesized profile.
    """
    mask = _shell_mask(grid.n, grid.N, grid.L, k).astype(complex)
    return float(np.abs(from_spectral(grid, mask)).mean())
