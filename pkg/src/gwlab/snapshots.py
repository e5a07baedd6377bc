"""Binary snapshot format (magic "GWF1").

Layout, all little-endian:

    bytes 0..3   magic b"GWF1"
    u32          n   (spatial dimension)
    u32          N   (points per axis)
    f64          L   (period length)
    u32          C   (component count)
    C arrays     row-major float64 of shape (N,)*n each

A LieAlgebraField stores C = 3, a one-form C = 3 (n+1), a group field
C = 4; readers get the raw channel stack plus the grid geometry.
"""

import struct

import numpy as np

from gwlab.grid import Grid

MAGIC = b"GWF1"
_HEADER = struct.Struct("<4sIIdI")


def write_snapshot(path, grid: Grid, channels) -> None:
    """Write a (C, N, ..., N) channel stack; row-major f64 per component."""
    arr = np.ascontiguousarray(channels, dtype="<f8")
    if arr.shape[1:] != grid.shape:
        raise ValueError(f"channel stack {arr.shape} does not match grid {grid.shape}")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.n, grid.N, float(grid.L), arr.shape[0]))
        fh.write(arr.tobytes())


def read_snapshot(path):
    """Returns (grid, channel stack)."""
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, n, N, L, C = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"not a GWF1 snapshot: magic {magic!r}")
        grid = Grid(int(n), int(N), float(L))
        count = C * N**n
        data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    return grid, data.reshape((C,) + grid.shape).copy()
