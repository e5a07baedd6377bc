"""Space-time grid for the periodic pseudo-spectral calculus.

The spatial domain is the torus [0, L)^n sampled at N points per axis;
time is the uniform lattice t_m = m T / M.  Spectral coefficients are the
Fourier-series coefficients in the basis exp(2 pi i k . x / L), so the
physical frequency of lattice mode k is xi = k / L and a derivative is
multiplication by 2 pi i xi.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def _is_power_of_two(m: int) -> bool:
    return m >= 2 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class Grid:
    n: int
    N: int
    L: float = 1.0
    M: int = 1
    T: float = 1.0

    def __post_init__(self):
        if not 2 <= self.n <= 5:
            raise ValueError(f"spatial dimension must be in 2..5, got {self.n}")
        if not _is_power_of_two(self.N):
            raise ValueError(f"points per axis must be a power of two >= 2, got {self.N}")
        if self.L <= 0 or self.T <= 0:
            raise ValueError("period length and final time must be positive")
        if self.M < 1:
            raise ValueError("need at least one time step")

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def shape(self):
        return (self.N,) * self.n

    @property
    def npoints(self) -> int:
        return self.N**self.n

    @property
    def cell_volume(self) -> float:
        return (self.L / self.N) ** self.n

    @property
    def spatial_axes(self):
        # axes of the trailing spatial block in a (..., N, ..., N) array
        return tuple(range(-self.n, 0))

    @property
    def times(self):
        return np.linspace(0.0, self.T, self.M + 1)

    def coords(self, axis: int):
        """Coordinate array of spatial axis (1-based), broadcastable over the grid."""
        if not 1 <= axis <= self.n:
            raise ValueError(f"axis must be in 1..{self.n}")
        x = np.arange(self.N) * (self.L / self.N)
        shape = [1] * self.n
        shape[axis - 1] = self.N
        return x.reshape(shape)

    def freq(self, axis: int):
        """Physical frequency xi = k / L of spatial axis (1-based), broadcastable."""
        if not 1 <= axis <= self.n:
            raise ValueError(f"axis must be in 1..{self.n}")
        k = np.fft.fftfreq(self.N) * self.N
        shape = [1] * self.n
        shape[axis - 1] = self.N
        return (k / self.L).reshape(shape)

    @property
    def freq_norm(self):
        """|xi| on the full spectral grid (shape (N,)*n)."""
        return _freq_norm(self.n, self.N, self.L)

    @property
    def freq_norm_safe(self):
        """|xi| with the zero mode replaced by 1 (safe divisor)."""
        return _freq_norm_safe(self.n, self.N, self.L)

    def zero_mode_index(self):
        return (0,) * self.n

    def with_resolution(self, N=None, M=None):
        return Grid(self.n, N or self.N, self.L, M or self.M, self.T)

    def rescaled(self, factor: float = 0.5):
        """Same lattice data seen at period factor*L and horizon factor*T.

        Reinterpreting a field on this grid carries every physical frequency
        to xi / factor, which for factor = 1/2 is exactly one dyadic step up:
        the discrete realization of the invariant rescaling.
        """
        return Grid(self.n, self.N, self.L * factor, self.M, self.T * factor)


@lru_cache(maxsize=32)
def _freq_norm(n: int, N: int, L: float):
    k = np.fft.fftfreq(N) * N / L
    sq = np.zeros((N,) * n)
    for axis in range(n):
        shape = [1] * n
        shape[axis] = N
        sq = sq + k.reshape(shape) ** 2
    out = np.sqrt(sq)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=32)
def _freq_norm_safe(n: int, N: int, L: float):
    out = _freq_norm(n, N, L).copy()
    out[(0,) * n] = 1.0
    out.flags.writeable = False
    return out
