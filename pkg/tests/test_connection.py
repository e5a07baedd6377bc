import numpy as np
import pytest

from gwlab.grid import Grid
from gwlab.connection import (ConnectionResult, connection_residual,
                              coulomb_fix_slice, curvature, curvature_spatial,
                              divergence, gauge_transform_spatial,
                              solve_connection, solve_connection_rate,
                              algebra_from_group_derivative)
from gwlab.errors import ContractionError, GateError, NonConvergenceError
from gwlab.fields import (GroupField, LieAlgebraField, OneForm, SpaceTimeField,
                          adjoint, group_exp, group_mul)
from gwlab.lp import project_shell
from conftest import random_field


def shell_oneform(grid, rng, amplitude, shells=(1, 2)):
    n = grid.n
    comps = np.zeros((n + 1, 3) + grid.shape)
    for mu in range(n + 1):
        acc = np.zeros((3,) + grid.shape)
        for k in shells:
            acc += project_shell(random_field(grid, rng), k).c
        size = np.sqrt((acc**2).sum() * grid.cell_volume)
        comps[mu] = amplitude * acc / max(size, 1e-300)
    return OneForm(grid, comps)


def pure_gauge(grid, h: GroupField) -> OneForm:
    comps = np.zeros((grid.n + 1, 3) + grid.shape)
    for j in range(1, grid.n + 1):
        comps[j] = -algebra_from_group_derivative(h, j).c
    return OneForm(grid, comps)


# ---------------------------------------------------------------------------
# curvature


def test_curvature_zero_connection(grid3):
    F = curvature_spatial(OneForm.zero(grid3))
    assert np.abs(F.comps).max() == 0.0


def test_curvature_constant_commuting(grid3):
    comps = np.zeros((grid3.n + 1, 3) + grid3.shape)
    comps[:, 0] = 0.7  # all components along X1
    F = curvature_spatial(OneForm(grid3, comps))
    assert np.abs(F.comps).max() <= 1e-14


def test_curvature_pure_gauge_flat(rng):
    # flatness-of-pure-gauge oracle; N = 32 keeps the exponential's harmonics
    # representable so the cancellation is exact to round-off
    grid = Grid(3, 32)
    h = group_exp(1e-2 * project_shell(random_field(grid, rng), 1))
    A = pure_gauge(grid, h)
    F = curvature_spatial(A)
    dg_scale = A.l2() ** 2
    assert F.l2() <= 1e-8 * max(dg_scale, 1e-12) + 1e-12


def test_curvature_gauge_covariance(rng):
    grid = Grid(3, 32)
    A = shell_oneform(grid, rng, 5e-2, shells=(1,))
    h = group_exp(1e-2 * project_shell(random_field(grid, rng), 1))
    F = curvature_spatial(A)
    F_t = curvature_spatial(gauge_transform_spatial(h, A))
    # conjugated curvature table
    conj = np.stack([adjoint(h, LieAlgebraField(grid, F.comps[i])).c
                     for i in range(F.comps.shape[0])])
    assert np.abs(F_t.comps - conj).max() <= 1e-9


def test_curvature_series_time_rows(grid3, rng):
    # manufactured series: A_j(t) = t * C_j with A_0 = 0 gives F_{0j} = C_j + t^2 [.,.] terms
    n = grid3.n
    C = shell_oneform(grid3, rng, 1e-2)
    vals = np.zeros((grid3.M + 1, 3 * (n + 1)) + grid3.shape)
    dots = np.zeros_like(vals)
    flat = C.comps.reshape(3 * (n + 1), *grid3.shape)
    for m, t in enumerate(grid3.times):
        vals[m] = t * flat
        dots[m] = flat
    vals[:, :3] = 0.0
    dots[:, :3] = 0.0  # zero time component
    series = SpaceTimeField(grid3, vals, dots)
    Fs = curvature(series)
    F0 = Fs[0]
    for j in range(1, n + 1):
        assert np.abs(F0.entry(0, j).c - C.comps[j]).max() <= 1e-12


# ---------------------------------------------------------------------------
# elliptic fixed point


def test_solve_connection_zero(grid3):
    res = solve_connection(OneForm.zero(grid3))
    assert np.abs(res.a.comps).max() == 0.0
    assert res.trace.converged


def test_solve_connection_abelian(grid3, rng):
    comps = np.zeros((grid3.n + 1, 3) + grid3.shape)
    comps[:, 0] = 1e-2 * rng.standard_normal((grid3.n + 1,) + grid3.shape)
    res = solve_connection(OneForm(grid3, comps))
    assert np.abs(res.a.comps).max() <= 1e-15


def test_solve_connection_small_data_contraction(grid4, rng):
    # iterate-by-iterate comparison against an independent fixed-point oracle
    b = shell_oneform(grid4, rng, 1e-2, shells=(2, 3))
    res = solve_connection(b, tol=1e-13)
    a = res.a
    updates = [u for _, u, _ in res.trace.iterations]
    ratios = [updates[i + 1] / updates[i] for i in range(len(updates) - 1) if updates[i] > 0]
    assert all(r <= 0.1 for r in ratios)
    assert connection_residual(a, b) <= 1e-10

    # brute-force oracle: plain numpy fixed point, no shared machinery
    oracle = _oracle_connection(grid4, b.comps, iters=len(res.trace.iterations) + 1)
    assert np.abs(oracle - a.comps).max() <= 1e-12


def _oracle_connection(grid, bc, iters):
    n, N, L = grid.n, grid.N, grid.L
    k = np.fft.fftfreq(N) * N / L
    k[N // 2] = 0.0
    mults = []
    for ax in range(n):
        shape = [1] * n
        shape[ax] = N
        mults.append(2j * np.pi * k.reshape(shape))
    ksq = np.zeros((N,) * n)
    kfull = np.fft.fftfreq(N) * N / L
    for ax in range(n):
        shape = [1] * n
        shape[ax] = N
        ksq = ksq + kfull.reshape(shape) ** 2
    invlap = np.zeros_like(ksq)
    nz = ksq > 0
    invlap[nz] = -1.0 / (4 * np.pi**2 * ksq[nz])

    def cross(x, y):
        return np.stack([x[1] * y[2] - x[2] * y[1],
                         x[2] * y[0] - x[0] * y[2],
                         x[0] * y[1] - x[1] * y[0]])

    w = np.zeros_like(bc)
    for _ in range(iters):
        new = np.zeros_like(bc)
        for j in range(n + 1):
            acc = np.zeros((3,) + grid.shape, dtype=complex)
            for kk in range(1, n + 1):
                src = cross(w[kk], w[j]) + cross(bc[kk], bc[j])
                acc += mults[kk - 1] * np.fft.fftn(src, axes=tuple(range(1, n + 1)))
            new[j] = -np.fft.ifftn(acc * invlap, axes=tuple(range(1, n + 1))).real
        w = new
    return w


def test_solve_connection_divergence_free(grid4, rng):
    b = shell_oneform(grid4, rng, 1e-2, shells=(2, 3))
    a = solve_connection(b, tol=1e-13).a
    assert divergence(a).l2() <= 1e-11 * a.l2()


def test_solve_connection_quadratic_scaling(grid4, rng):
    b = shell_oneform(grid4, rng, 1e-2, shells=(2, 3))
    a1 = solve_connection(b, tol=1e-13).a
    a2 = solve_connection(2.0 * b, tol=1e-13).a
    exponent = np.log2(a2.l2() / a1.l2())
    assert 1.9 <= exponent <= 2.1


def test_solve_connection_smallness_gate(grid3, rng):
    b = shell_oneform(grid3, rng, 1.0)
    with pytest.raises(GateError):
        solve_connection(b, smallness_gate=1e-1)


def test_solve_connection_nonconvergence_budget(grid3, rng):
    b = shell_oneform(grid3, rng, 1e-2)
    with pytest.raises(NonConvergenceError):
        solve_connection(b, tol=1e-30, max_iter=2)


def test_solve_connection_rate_consistency(grid3, rng):
    # finite-difference oracle: a(b + eps bdot) - a(b) ~ eps * adot
    b = shell_oneform(grid3, rng, 1e-2)
    bdot = shell_oneform(grid3, rng, 1e-2)
    a = solve_connection(b, tol=1e-14).a
    adot = solve_connection_rate(a, b, bdot, tol=1e-14)
    eps = 1e-6
    b_eps = OneForm(grid3, b.comps + eps * bdot.comps)
    a_eps = solve_connection(b_eps, tol=1e-14).a
    fd = (a_eps.comps - a.comps) / eps
    assert np.abs(fd - adot.comps).max() <= 1e-4 * max(np.abs(adot.comps).max(), 1e-12)


# ---------------------------------------------------------------------------
# Coulomb gauge flow


def test_coulomb_already_divergence_free(grid3, rng):
    b = shell_oneform(grid3, rng, 1e-2)
    a = solve_connection(b, tol=1e-13).a  # divergence-free by construction
    out = coulomb_fix_slice(a, tol=1e-9)
    assert out.iterations == 0
    assert np.abs(out.A_fixed.comps - a.comps).max() == 0.0
    assert np.abs(out.g.q[0] - 1.0).max() == 0.0


def test_coulomb_pure_gauge_reduced(grid4, rng):
    h = group_exp(3e-4 * project_shell(random_field(grid4, rng), 1))
    A = pure_gauge(grid4, h)
    out = coulomb_fix_slice(A, tol=1e-11, max_iter=50)
    assert out.A_fixed.l2() <= 1e-6
    assert divergence(out.A_fixed).l2() <= 1e-11


def test_coulomb_gate(grid3, rng):
    A = shell_oneform(grid3, rng, 10.0)
    with pytest.raises(GateError):
        coulomb_fix_slice(A, curvature_gate=1e-6)


def test_coulomb_random_small_ensemble():
    grid = Grid(3, 16)
    ratios = []
    for seed in range(8):
        rng = np.random.default_rng(seed)
        A = shell_oneform(grid, rng, 3e-3, shells=(1,))
        out = coulomb_fix_slice(A, tol=1e-9, max_iter=100)
        assert out.residuals[-1] <= 1e-9
        ratios.append(out.ratio)
    assert max(ratios) / min(ratios) <= 10.0
