"""Pseudo-spectral laboratory for gauge-fixed wave fields on the torus.

Core layers: grids and su(2)/SU(2) fields with exact spectral calculus;
dyadic frequency projections; mixed space-time and frequency-block norms;
a spectral wave propagator with Duhamel forcing; the divergence-free
connection fixed point and Coulomb gauge flow; the coupled
potential/connection solver; round-trip map reconstruction through flat
connections; and an estimate-verification harness.
"""

from gwlab.backend import KERNEL_BACKEND
from gwlab.grid import Grid

__all__ = ["Grid", "KERNEL_BACKEND"]
__version__ = "0.1.0"
