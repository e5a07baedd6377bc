import numpy as np
import pytest

from gwlab.grid import Grid
from gwlab.errors import ConfigurationError, FlatnessError, ReconstructionError
from gwlab.fields import (GroupField, LieAlgebraField, SpaceTimeField,
                          group_exp, group_mul, group_inv)
from gwlab.gauge import (RECONSTRUCTION_COMPOSITION, _COMPOSITIONS,
                         constraint_residual, direct_integrate,
                         gauge_roundtrip, group_distance, integrate_flat,
                         plaquette_residual, prepare_initial_gauge,
                         random_near_identity_map, reconstruct_map)
from gwlab.lp import project_shell
from conftest import random_field


def oneform_series(grid, comps_fn):
    """Constant-in-time one-form series from per-component arrays."""
    n = grid.n
    vals = np.zeros((grid.M + 1, 3 * (n + 1)) + grid.shape)
    comps = comps_fn()
    for m in range(grid.M + 1):
        vals[m] = comps.reshape(3 * (n + 1), *grid.shape)
    return SpaceTimeField(grid, vals)


# ---------------------------------------------------------------------------
# initial gauge preparation


def test_prepare_homogeneous_velocity(grid3):
    s0 = GroupField.identity(grid3)
    v0 = LieAlgebraField.constant(grid3, [1.0, 0, 0])
    prep = prepare_initial_gauge(s0, v0)
    assert np.abs(prep.b.comps[0, 0] - 0.5).max() <= 1e-14
    assert np.abs(prep.b.comps[1:]).max() <= 1e-14
    assert np.abs(prep.a.comps).max() <= 1e-12
    assert np.abs(prep.g.q[0] - 1.0).max() <= 1e-14


def test_prepare_zero_velocity(grid3):
    prep = prepare_initial_gauge(GroupField.identity(grid3), LieAlgebraField.zero(grid3))
    assert np.abs(prep.b.comps).max() == 0.0
    assert np.abs(prep.a.comps).max() == 0.0


def test_prepare_random_small_constraints():
    grid = Grid(3, 16, M=4, T=0.25)
    s0, v0 = random_near_identity_map(grid, 3, 5e-3)
    prep = prepare_initial_gauge(s0, v0, coulomb_rtol=0.0, coulomb_tol=1e-10)
    from gwlab.connection import divergence
    assert divergence(prep.a).l2() <= 1e-9
    # curvature relation of the prepared pair
    res = constraint_residual(prep.a, prep.b)
    assert res <= 1e-6


def test_prepare_gauge_isometry_relation():
    # 2 |b| = |pullback| exactly (conjugation is a pointwise isometry)
    grid = Grid(3, 16, M=4, T=0.25)
    s0, v0 = random_near_identity_map(grid, 4, 1e-2)
    prep = prepare_initial_gauge(s0, v0)
    from gwlab.fields import maurer_cartan
    pull = np.zeros((grid.n + 1, 3) + grid.shape)
    pull[0] = v0.c
    for j in range(1, grid.n + 1):
        pull[j] = maurer_cartan(s0, j).c
    norm_pull = np.sqrt((pull**2).sum() * grid.cell_volume)
    assert abs(2.0 * prep.b.l2() - norm_pull) <= 1e-10 * norm_pull


# ---------------------------------------------------------------------------
# flat transport


def test_integrate_flat_zero_connection(grid3):
    c = SpaceTimeField(grid3, np.zeros((grid3.M + 1, 3 * (grid3.n + 1)) + grid3.shape))
    hs = integrate_flat(c)
    for h in hs:
        assert np.abs(h.q[0] - 1.0).max() <= 1e-14


def test_integrate_flat_constant_time_component(grid3):
    n = grid3.n
    vals = np.zeros((grid3.M + 1, 3 * (n + 1)) + grid3.shape)
    vals[:, 0] = 0.5  # c_0 = X1/2
    hs = integrate_flat(SpaceTimeField(grid3, vals))
    t = grid3.times[-1]
    expect = group_exp(LieAlgebraField.constant(grid3, [-0.5 * t, 0, 0]))
    assert group_distance(hs[-1], expect) <= 1e-9


def test_integrate_flat_pure_gauge_recovers_map(rng):
    # pure-gauge oracle: c = -(dh) h^{-1} transports back to h up to the origin factor
    grid = Grid(3, 16, M=2, T=0.1)
    n = grid.n
    from gwlab.connection import algebra_from_group_derivative
    h = group_exp(3e-3 * project_shell(random_field(grid, rng), 1))
    comps = np.zeros((n + 1, 3) + grid.shape)
    for j in range(1, n + 1):
        comps[j] = -algebra_from_group_derivative(h, j).c
    series = oneform_series(grid, lambda: comps)
    got = integrate_flat(series, flatness_gate=1e-3)[0]
    # align at the origin: the transported value is h(x) h(0)^{-1}
    from gwlab.backend import kernels
    origin = (slice(None),) + (0,) * n
    h0 = h.q[origin].reshape(4, *([1] * n))
    aligned = GroupField(grid, kernels.quat_mul(
        h.q, kernels.quat_conj(np.broadcast_to(h0, h.q.shape).copy())), normalize=True)
    assert group_distance(got, aligned) <= 1e-6


def test_integrate_flat_gate(grid3, rng):
    n = grid3.n
    comps = np.zeros((n + 1, 3) + grid3.shape)
    for mu in range(n + 1):
        comps[mu] = project_shell(random_field(grid3, rng), 1).c
    series = oneform_series(grid3, lambda: comps)
    with pytest.raises(FlatnessError):
        integrate_flat(series, flatness_gate=1e-12)


def test_plaquette_residual_zero_for_flat_constant(grid3):
    n = grid3.n
    vals = np.zeros((grid3.M + 1, 3 * (n + 1)) + grid3.shape)
    vals[:, 0] = 0.3  # constant abelian: exactly flat
    assert plaquette_residual(SpaceTimeField(grid3, vals)) <= 1e-12


# ---------------------------------------------------------------------------
# reconstruction


def test_reconstruct_zero_is_identity(grid3):
    zeros = SpaceTimeField(grid3, np.zeros((grid3.M + 1, 3 * (grid3.n + 1)) + grid3.shape))
    out = reconstruct_map(zeros, zeros)
    for s in out:
        assert np.abs(s.q[0] - 1.0).max() <= 1e-14


def test_reconstruct_homogeneous_calibration(grid3):
    # homogeneous geodesic oracle: the hard-coded composition must match
    # exp(t X1) from data a = 0, b_0 = X1/2, and must be the unique winner
    n = grid3.n
    avals = np.zeros((grid3.M + 1, 3 * (n + 1)) + grid3.shape)
    bvals = np.zeros_like(avals)
    bvals[:, 0] = 0.5
    a_st = SpaceTimeField(grid3, avals)
    b_st = SpaceTimeField(grid3, bvals)
    t = grid3.times[-1]
    target = group_exp(LieAlgebraField.constant(grid3, [t, 0, 0]))
    winners = []
    for name in _COMPOSITIONS:
        out = reconstruct_map(a_st, b_st, composition=name)
        if group_distance(out[-1], target) <= 1e-8:
            winners.append(name)
    assert winners == [RECONSTRUCTION_COMPOSITION]


def test_reconstruct_unknown_composition(grid3):
    zeros = SpaceTimeField(grid3, np.zeros((grid3.M + 1, 3 * (grid3.n + 1)) + grid3.shape))
    with pytest.raises(ReconstructionError):
        reconstruct_map(zeros, zeros, composition="bogus")


# ---------------------------------------------------------------------------
# direct integrator


def test_direct_homogeneous_geodesic(grid3):
    s0 = GroupField.identity(grid3)
    v0 = LieAlgebraField.constant(grid3, [1.0, 0, 0])
    res = direct_integrate(s0, v0)
    exact = group_exp(grid3.T * v0)
    assert group_distance(res.snapshots[-1], exact) <= 1e-13


def test_direct_rest_stays_identity(grid3):
    res = direct_integrate(GroupField.identity(grid3), LieAlgebraField.zero(grid3))
    for s in res.snapshots:
        assert np.abs(s.q[0] - 1.0).max() == 0.0


def test_direct_cfl_guard():
    grid = Grid(3, 16, M=4, T=1.0)   # dt = 0.25 > dx/2 = 1/32
    with pytest.raises(ConfigurationError):
        direct_integrate(GroupField.identity(grid), LieAlgebraField.zero(grid))


def test_direct_energy_drift_small():
    grid = Grid(2, 16, M=256, T=0.25)
    s0, v0 = random_near_identity_map(grid, 11, 1e-2, shells=(1,))
    res = direct_integrate(s0, v0)
    drift = np.abs(res.energy / res.energy[0] - 1.0).max()
    assert drift <= 1e-4


def test_direct_group_constraint():
    grid = Grid(2, 16, M=64, T=0.25)
    s0, v0 = random_near_identity_map(grid, 12, 5e-2, shells=(1,))
    res = direct_integrate(s0, v0)
    assert max(s.unit_norm_defect() for s in res.snapshots) <= 1e-10


# ---------------------------------------------------------------------------
# full round trip


def test_roundtrip_reference_quality():
    grid = Grid(3, 16, M=16, T=0.25)
    s0, v0 = random_near_identity_map(grid, 42, 1e-3)
    rep = gauge_roundtrip(s0, v0, flatness_gate=1e-3)
    assert rep.sup_error <= 1e-4
    assert rep.plaquette_plus <= 1e-5
    assert rep.constraint_growth <= 10.0
    assert max(s.unit_norm_defect() for s in
               direct_integrate(s0, v0).snapshots) <= 1e-10


def test_roundtrip_convergence_rate():
    errs, hs = [], []
    for (N, M) in ((8, 8), (16, 16), (32, 32)):
        grid = Grid(3, N, M=M, T=0.25)
        s0, v0 = random_near_identity_map(grid, 42, 1e-3)
        rep = gauge_roundtrip(s0, v0, flatness_gate=1e-2)
        errs.append(rep.sup_error)
        hs.append(1.0 / N)
    rate = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert rate >= 1.8
