import numpy as np
import pytest

from gwlab.grid import Grid
from gwlab.fields import (LieAlgebraField, OneForm, SpaceTimeField, TwoForm,
                          form_pairs)
from gwlab.wave import (BilinearSpec, WaveStepper, assemble_b, bilinear_B,
                        duhamel_solve, free_wave, hodge_initial_data,
                        wave_energy, duhamel_residual)
from conftest import random_field


def test_free_wave_plane_wave(grid2):
    x1 = np.broadcast_to(grid2.coords(1), grid2.shape)
    c = np.zeros((3,) + grid2.shape)
    c[0] = np.cos(2 * np.pi * x1)
    f0 = LieAlgebraField(grid2, c)
    g0 = LieAlgebraField.zero(grid2)
    for t in (0.1, 0.35, 1.0):
        v, vd = free_wave(f0, g0, t)
        assert np.abs(v.c[0] - np.cos(2 * np.pi * t) * np.cos(2 * np.pi * x1)).max() <= 1e-12
        assert np.abs(vd.c[0] + 2 * np.pi * np.sin(2 * np.pi * t) * np.cos(2 * np.pi * x1)).max() <= 1e-11


def test_free_wave_zero_mode(grid2):
    g0 = LieAlgebraField.constant(grid2, [3.0, 0, 0])
    v, vd = free_wave(LieAlgebraField.zero(grid2), g0, 0.7)
    assert np.abs(v.c[0] - 2.1).max() <= 1e-13
    assert np.abs(vd.c[0] - 3.0).max() <= 1e-13


def test_free_energy_conserved_256_steps(rng):
    grid = Grid(2, 16, M=256, T=2.0)
    f0 = rng.standard_normal((3,) + grid.shape)
    g0 = rng.standard_normal((3,) + grid.shape)
    st = duhamel_solve(f0, g0, None, grid)
    E = wave_energy(st)
    assert np.abs(E / E[0] - 1.0).max() <= 1e-12


def test_duhamel_zero_forcing_matches_free(grid2, rng):
    f0, g0 = random_field(grid2, rng), random_field(grid2, rng)
    forcing = SpaceTimeField.zeros(grid2, 3)
    a = duhamel_solve(f0.c, g0.c, forcing, grid2)
    b = duhamel_solve(f0.c, g0.c, None, grid2)
    assert np.abs(a.vals - b.vals).max() <= 1e-12
    assert np.abs(a.dots - b.dots).max() <= 1e-12


def test_duhamel_constant_forcing_zero_mode():
    grid = Grid(2, 8, M=16, T=1.0)
    forc = np.zeros((grid.M + 1, 3) + grid.shape)
    forc[:, 0] = 3.0
    v = duhamel_solve(np.zeros((3,) + grid.shape), np.zeros((3,) + grid.shape), forc, grid)
    # zero-mode ODE: v = c t^2/2, exactly integrated by the trapezoid scheme
    assert np.abs(v.vals[-1, 0] - 1.5).max() <= 1e-13


def closed_form_forced_error(M):
    grid = Grid(2, 16, M=M, T=1.0)
    om = 2 * np.pi
    Om = 3.7
    x1 = np.broadcast_to(grid.coords(1), grid.shape)
    prof = np.cos(2 * np.pi * x1)
    forc = np.zeros((M + 1, 3) + grid.shape)
    for m, t in enumerate(grid.times):
        forc[m, 0] = np.sin(Om * t) * prof
    v = duhamel_solve(np.zeros((3,) + grid.shape), np.zeros((3,) + grid.shape), forc, grid)
    exact = (np.sin(Om * grid.T) - (Om / om) * np.sin(om * grid.T)) / (om**2 - Om**2) * prof
    return np.abs(v.vals[-1, 0] - exact).max()


def test_duhamel_convergence_order():
    # closed-form non-resonant forced mode oracle
    e1, e2 = closed_form_forced_error(32), closed_form_forced_error(64)
    assert np.log2(e1 / e2) >= 1.9


def test_duhamel_superposition(grid3, rng):
    shape = (3,) + grid3.shape
    fa, ga = rng.standard_normal(shape), rng.standard_normal(shape)
    fb, gb = rng.standard_normal(shape), rng.standard_normal(shape)
    Fa = rng.standard_normal((grid3.M + 1,) + shape)
    Fb = rng.standard_normal((grid3.M + 1,) + shape)
    va = duhamel_solve(fa, ga, Fa, grid3)
    vb = duhamel_solve(fb, gb, Fb, grid3)
    vab = duhamel_solve(fa + fb, ga + gb, Fa + Fb, grid3)
    scale = max(np.abs(va.vals).max(), np.abs(vb.vals).max())
    assert np.abs(vab.vals - va.vals - vb.vals).max() <= 1e-11 * scale
    assert np.abs(vab.dots - va.dots - vb.dots).max() <= 1e-11 * scale * 10


def test_duhamel_residual_second_order(rng):
    # the discrete wave-operator defect is quadrature error: second order in dt
    from gwlab.lp import project_low

    def residual(M):
        grid = Grid(2, 16, M=M, T=1.0)
        prof = project_low(random_field(grid, np.random.default_rng(7)), 1).c
        forc = np.stack([np.cos(3.0 * t) * prof for t in grid.times])
        v = duhamel_solve(np.zeros_like(prof), np.zeros_like(prof), forc, grid)
        return duhamel_residual(v, SpaceTimeField(grid, forc))

    r1, r2 = residual(16), residual(32)
    assert np.log2(r1 / r2) >= 1.8


# ---------------------------------------------------------------------------
# potential layout and b assembly


def test_hodge_initial_data_zero(grid3):
    pv, pd, sv, sd = hodge_initial_data(OneForm.zero(grid3))
    assert np.abs(pv).max() == np.abs(pd).max() == 0.0
    assert np.abs(sv).max() == np.abs(sd).max() == 0.0


def test_hodge_initial_data_time_component(grid3):
    n = grid3.n
    comps = np.zeros((n + 1, 3) + grid3.shape)
    comps[0, 0] = 1.0
    pv, pd, sv, sd = hodge_initial_data(OneForm(grid3, comps))
    assert np.abs(pd[0] - 1.0).max() == 0.0
    assert np.abs(sd).max() == 0.0


def test_hodge_initial_data_spatial_component(grid3):
    n = grid3.n
    comps = np.zeros((n + 1, 3) + grid3.shape)
    comps[1, 1] = 1.0  # b_1 = X2
    pv, pd, sv, sd = hodge_initial_data(OneForm(grid3, comps))
    pairs = form_pairs(n)
    idx = pairs.index((0, 1))
    assert np.abs(sd[idx, 1] - 1.0).max() == 0.0
    rest = np.delete(sd, idx, axis=0)
    assert np.abs(rest).max() == 0.0
    assert np.abs(pd).max() == 0.0


def test_assemble_b_zero(grid3):
    npairs = len(form_pairs(grid3.n))
    b = assemble_b(SpaceTimeField.zeros(grid3, 3), SpaceTimeField.zeros(grid3, 3 * npairs))
    assert np.abs(b.vals).max() == 0.0


def test_assemble_b_linear_phi(grid3):
    # phi = t X1, psi = 0 -> b_0 = X1, b_j = 0
    n = grid3.n
    npairs = len(form_pairs(n))
    vals = np.zeros((grid3.M + 1, 3) + grid3.shape)
    dots = np.zeros_like(vals)
    for m, t in enumerate(grid3.times):
        vals[m, 0] = t
        dots[m, 0] = 1.0
    b = assemble_b(SpaceTimeField(grid3, vals, dots), SpaceTimeField.zeros(grid3, 3 * npairs))
    bv = b.vals.reshape(grid3.M + 1, n + 1, 3, *grid3.shape)
    assert np.abs(bv[:, 0, 0] - 1.0).max() <= 1e-13
    assert np.abs(bv[:, 1:]).max() <= 1e-13


def test_assemble_b_roundtrip_free_evolution(grid3, rng):
    # manufactured-solution oracle: data -> potentials -> b reproduces the
    # free evolution of its own initial pair exactly (all multipliers commute)
    from gwlab.lp import project_low
    n = grid3.n
    comps = np.stack([project_low(random_field(grid3, rng, 0.01), 1).c
                      for _ in range(n + 1)])
    b0 = OneForm(grid3, comps)
    pv, pd, sv, sd = hodge_initial_data(b0)
    phi = duhamel_solve(pv, pd, None, grid3)
    psi = duhamel_solve(sv.reshape(-1, *grid3.shape), sd.reshape(-1, *grid3.shape),
                        None, grid3)
    b = assemble_b(phi, psi)
    assert np.abs(b.vals[0].reshape(n + 1, 3, *grid3.shape) - comps).max() <= 1e-14
    free = duhamel_solve(b.vals[0], b.dots[0], None, grid3)
    assert np.abs(free.vals - b.vals).max() <= 1e-13


# ---------------------------------------------------------------------------
# bilinear couplings


def test_bilinear_zero_connection(grid3, rng):
    n = grid3.n
    a = OneForm.zero(grid3)
    b = OneForm(grid3, rng.standard_normal((n + 1, 3) + grid3.shape))
    assert np.abs(bilinear_B(BilinearSpec.preset("mwm_phi"), a, b).c).max() == 0.0
    assert np.abs(bilinear_B(BilinearSpec.preset("mwm_psi"), a, b).comps).max() == 0.0


def test_bilinear_commuting_components(grid3, rng):
    # all components parallel to X1: every bracket vanishes
    n = grid3.n
    ac = np.zeros((n + 1, 3) + grid3.shape)
    bc = np.zeros((n + 1, 3) + grid3.shape)
    ac[:, 0] = rng.standard_normal((n + 1,) + grid3.shape)
    bc[:, 0] = rng.standard_normal((n + 1,) + grid3.shape)
    a, b = OneForm(grid3, ac), OneForm(grid3, bc)
    assert np.abs(bilinear_B(BilinearSpec.preset("mwm_phi"), a, b).c).max() == 0.0
    assert np.abs(bilinear_B(BilinearSpec.preset("mwm_psi"), a, b).comps).max() == 0.0


def test_bilinear_structure_constants(grid3):
    # a_0 = X1, b_0 = X2 constants: the contraction gives X3, the wedge nothing
    n = grid3.n
    ac = np.zeros((n + 1, 3) + grid3.shape)
    bc = np.zeros((n + 1, 3) + grid3.shape)
    ac[0, 0] = 1.0
    bc[0, 1] = 1.0
    a, b = OneForm(grid3, ac), OneForm(grid3, bc)
    phi_f = bilinear_B(BilinearSpec.preset("mwm_phi"), a, b)
    assert np.abs(phi_f.c[2] - 1.0).max() == 0.0
    psi_f = bilinear_B(BilinearSpec.preset("mwm_psi"), a, b)
    assert np.abs(psi_f.comps).max() == 0.0


def test_bilinear_is_bilinear(grid3, rng):
    n = grid3.n
    spec = BilinearSpec.preset("mwm_phi")
    a1 = OneForm(grid3, rng.standard_normal((n + 1, 3) + grid3.shape))
    a2 = OneForm(grid3, rng.standard_normal((n + 1, 3) + grid3.shape))
    b = OneForm(grid3, rng.standard_normal((n + 1, 3) + grid3.shape))
    lhs = bilinear_B(spec, OneForm(grid3, a1.comps + 2.0 * a2.comps), b).c
    rhs = bilinear_B(spec, a1, b).c + 2.0 * bilinear_B(spec, a2, b).c
    assert np.abs(lhs - rhs).max() <= 1e-12 * max(np.abs(rhs).max(), 1.0)


def test_bilinear_generic_and_errors(grid3, rng):
    n = grid3.n
    a = OneForm(grid3, rng.standard_normal((n + 1, 3) + grid3.shape))
    b = OneForm(grid3, rng.standard_normal((n + 1, 3) + grid3.shape))
    spec = BilinearSpec(name="generic", coeffs=((0, 0, 1.0), (1, 1, -1.0)))
    out = bilinear_B(spec, a, b)
    from gwlab.backend import kernels
    expect = kernels.su2_bracket(a.comps[0], b.comps[0]) - kernels.su2_bracket(a.comps[1], b.comps[1])
    assert np.abs(out.c - expect).max() == 0.0
    with pytest.raises(ValueError):
        bilinear_B(BilinearSpec(name="nope"), a, b)
    with pytest.raises(ValueError):
        bilinear_B(BilinearSpec(name="generic"), a, b)
    with pytest.raises(ValueError):
        BilinearSpec.preset("unknown")
