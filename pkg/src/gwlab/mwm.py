"""Successive-approximation solver for the coupled potential/connection system,
plus the difference-energy stability experiment and higher-regularity tracking.

One sweep turns the current iterate v = (phi, psi) into the next: the
differential b is assembled slice by slice, the divergence-free connection
a is solved on each slice, the bilinear couplings provide the wave
forcings, and the spectral propagator produces the new iterate with the
same initial data.  The stopping norm is the ell^2-over-shells aggregate
of frequency-block norms (default sharp family, weight index 0) of the
iterate difference.
"""

from dataclasses import dataclass, field

import numpy as np

from gwlab.connection import solve_connection, solve_connection_rate
from gwlab.errors import ContractionError
from gwlab.fields import (LieAlgebraField, OneForm, SpaceTimeField, TwoForm,
                          form_pairs)
from gwlab.grid import Grid
from gwlab.norms import ShellNormEngine, s_norm, s_plus_norm, sobolev_norm, forcing_block_norm
from gwlab.pairs import enumerate_pairs
from gwlab.wave import BilinearSpec, assemble_b_slice, bilinear_B, duhamel_solve


@dataclass(frozen=True)
class HodgeData:
    """Initial datum for the potential pair (a scalar part and a two-form part)."""
    phi: LieAlgebraField
    psi: TwoForm

    @classmethod
    def zero(cls, grid: Grid):
        return cls(LieAlgebraField.zero(grid), TwoForm.zero(grid))

    def sobolev(self, s: float) -> float:
        return float(np.hypot(sobolev_norm(self.phi, s),
                              sobolev_norm(self.psi.comps, s, grid=self.phi.grid)))


@dataclass
class PicardTrace:
    rows: list = field(default_factory=list)
    converged: bool = False
    smallness: float = 0.0
    gate: float = 0.0

    def add(self, j, diff, a_norm, b_norm, forcing_norm):
        self.rows.append({"iter": j, "diff": diff, "a_norm": a_norm,
                          "b_norm": b_norm, "forcing_norm": forcing_norm})

    @property
    def diffs(self):
        return [r["diff"] for r in self.rows]

    def ratios(self):
        d = self.diffs
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]


@dataclass
class MwmResult:
    phi: SpaceTimeField
    psi: SpaceTimeField
    trace: PicardTrace
    phi_forcing: np.ndarray | None = None
    psi_forcing: np.ndarray | None = None
    b: SpaceTimeField | None = None
    a: SpaceTimeField | None = None
    forcing_constant: float | None = None


def _free_evolution(grid, data_f: HodgeData, data_g: HodgeData):
    phi = duhamel_solve(data_f.phi.c, data_g.phi.c, None, grid)
    npairs = len(form_pairs(grid.n))
    psi = duhamel_solve(data_f.psi.comps.reshape(3 * npairs, *grid.shape),
                        data_g.psi.comps.reshape(3 * npairs, *grid.shape),
                        None, grid)
    return phi, psi


def _sweep(grid, phi_now, psi_now, phi_force_now, psi_force_now, conn_tol,
           collect=None):
    """Assemble (b, a, forcings) from the current iterate, slice by slice."""
    n = grid.n
    npairs = len(form_pairs(n))
    phi_force = np.empty((grid.M + 1, 3) + grid.shape)
    psi_force = np.empty((grid.M + 1, 3 * npairs) + grid.shape)
    spec_phi = BilinearSpec.preset("mwm_phi")
    spec_psi = BilinearSpec.preset("mwm_psi")
    a_sup = b_sup = 0.0
    for m in range(grid.M + 1):
        bv, bd = assemble_b_slice(
            grid, phi_now.vals[m], phi_now.dots[m],
            psi_now.vals[m].reshape((npairs, 3) + grid.shape),
            psi_now.dots[m].reshape((npairs, 3) + grid.shape),
            None if phi_force_now is None else phi_force_now[m],
            None if psi_force_now is None else
            psi_force_now[m].reshape((npairs, 3) + grid.shape),
        )
        b_of = OneForm(grid, bv)
        a_of = solve_connection(b_of, tol=conn_tol).a
        phi_force[m] = -bilinear_B(spec_phi, a_of, b_of).c
        psi_force[m] = -bilinear_B(spec_psi, a_of, b_of).comps.reshape(
            3 * npairs, *grid.shape)
        a_sup = max(a_sup, a_of.l2())
        b_sup = max(b_sup, b_of.l2())
        if collect is not None:
            collect(m, b_of, bd, a_of)
    return phi_force, psi_force, a_sup, b_sup


def _stack_hodge(grid, phi: SpaceTimeField, psi: SpaceTimeField) -> SpaceTimeField:
    return SpaceTimeField(grid,
                          np.concatenate([phi.vals, psi.vals], axis=1),
                          np.concatenate([phi.dots, psi.dots], axis=1))


def _s_proxy(grid, phi_a, psi_a, phi_b, psi_b, stopping_weight, family) -> float:
    diff = SpaceTimeField(grid,
                          np.concatenate([phi_a.vals - phi_b.vals, psi_a.vals - psi_b.vals], axis=1),
                          np.concatenate([phi_a.dots - phi_b.dots, psi_a.dots - psi_b.dots], axis=1))
    return s_norm(diff, stopping_weight, family)


def picard_solve(f: HodgeData, g: HodgeData, tol: float = 1e-9, max_iter: int = 30,
                 stopping_weight: int = 0, conn_tol: float = 1e-12,
                 smallness_gate: float = 0.5, final_norms: bool = False) -> MwmResult:
    """Iterate the linear wave solve against the quadratically coupled forcing.

    The smallness of the data is reported on the trace (gate exceeded is a
    report, not a hard failure: the discrete threshold is empirical); a
    difference ratio >= 1 on two consecutive iterations raises
    ContractionError carrying the trace.
    """
    grid = f.phi.grid
    family = enumerate_pairs(grid.n, "sharp")
    trace = PicardTrace()
    trace.smallness = float(np.hypot(f.sobolev(grid.n / 2.0), g.sobolev(grid.n / 2.0 - 1.0)))
    trace.gate = smallness_gate

    phi_now, psi_now = _free_evolution(grid, f, g)
    phi_force = psi_force = None
    prev_diff = None
    worse = 0
    for j in range(1, max_iter + 1):
        phi_force_next, psi_force_next, a_sup, b_sup = _sweep(
            grid, phi_now, psi_now, phi_force, psi_force, conn_tol)
        phi_next = duhamel_solve(f.phi.c, g.phi.c, phi_force_next, grid)
        psi_next = duhamel_solve(f.psi.comps.reshape(-1, *grid.shape),
                                 g.psi.comps.reshape(-1, *grid.shape),
                                 psi_force_next, grid)
        forcing_norm = forcing_block_norm(
            SpaceTimeField(grid, np.concatenate([phi_force_next, psi_force_next], axis=1)),
            grid.n / 2.0 - 1.0)
        diff = _s_proxy(grid, phi_next, psi_next, phi_now, psi_now, stopping_weight, family)
        trace.add(j, diff, a_sup, b_sup, forcing_norm)
        phi_now, psi_now = phi_next, psi_next
        phi_force, psi_force = phi_force_next, psi_force_next
        if diff < tol:
            trace.converged = True
            break
        if prev_diff is not None and prev_diff > 0 and diff / prev_diff >= 1.0:
            worse += 1
            if worse >= 2:
                raise ContractionError(
                    f"iteration difference stopped contracting (ratio {diff / prev_diff:.3f})",
                    ratio=diff / prev_diff, trace=trace)
        else:
            worse = 0
        prev_diff = diff
    result = MwmResult(phi_now, psi_now, trace, phi_force, psi_force)
    if final_norms:
        attach_final_series(result)
    return result


def attach_final_series(result: MwmResult, conn_tol: float = 1e-12,
                        with_rates: bool = True) -> MwmResult:
    """Recompute the (b, a) series of the converged iterate, with analytic
    time-derivative channels (the connection rate solves the differentiated
    fixed point), and measure the forcing-estimate constant."""
    grid = result.phi.grid
    n = grid.n
    npairs = len(form_pairs(n))
    C = 3 * (n + 1)
    b_st = SpaceTimeField.zeros(grid, C, label="b")
    a_st = SpaceTimeField.zeros(grid, C, label="a")
    for m in range(grid.M + 1):
        bv, bd = assemble_b_slice(
            grid, result.phi.vals[m], result.phi.dots[m],
            result.psi.vals[m].reshape((npairs, 3) + grid.shape),
            result.psi.dots[m].reshape((npairs, 3) + grid.shape),
            None if result.phi_forcing is None else result.phi_forcing[m],
            None if result.psi_forcing is None else
            result.psi_forcing[m].reshape((npairs, 3) + grid.shape),
        )
        b_st.vals[m] = bv.reshape(C, *grid.shape)
        b_st.dots[m] = bd.reshape(C, *grid.shape)
        b_of = OneForm(grid, bv)
        a_of = solve_connection(b_of, tol=conn_tol).a
        a_st.vals[m] = a_of.comps.reshape(C, *grid.shape)
        if with_rates:
            adot = solve_connection_rate(a_of, b_of, OneForm(grid, bd), tol=conn_tol)
            a_st.dots[m] = adot.comps.reshape(C, *grid.shape)
    result.b = b_st
    result.a = a_st

    spec_phi = BilinearSpec.preset("mwm_phi")
    spec_psi = BilinearSpec.preset("mwm_psi")
    Bv = np.empty((grid.M + 1, 3 + 3 * npairs) + grid.shape)
    for m in range(grid.M + 1):
        a_of = OneForm(grid, a_st.vals[m].reshape((n + 1, 3) + grid.shape))
        b_of = OneForm(grid, b_st.vals[m].reshape((n + 1, 3) + grid.shape))
        Bv[m, :3] = bilinear_B(spec_phi, a_of, b_of).c
        Bv[m, 3:] = bilinear_B(spec_psi, a_of, b_of).comps.reshape(3 * npairs, *grid.shape)
    lhs = forcing_block_norm(SpaceTimeField(grid, Bv), grid.n / 2.0 - 1.0)
    rhs = s_plus_norm(a_st) * s_norm(b_st, 1)
    result.forcing_constant = lhs / rhs if rhs > 0 else 0.0
    return result


# ---------------------------------------------------------------------------
# stability and regularity experiments


def difference_energy(phi1, psi1, phi2, psi2) -> np.ndarray:
    """E(t) = (integral |grad dv|^2 + |d_t dv|^2 dx)^{1/2} of the iterate difference."""
    from gwlab.fields import to_spectral
    grid = phi1.grid
    om2 = (2.0 * np.pi * grid.freq_norm) ** 2
    out = np.zeros(grid.M + 1)
    for m in range(grid.M + 1):
        dv = np.concatenate([phi1.vals[m] - phi2.vals[m], psi1.vals[m] - psi2.vals[m]])
        dd = np.concatenate([phi1.dots[m] - phi2.dots[m], psi1.dots[m] - psi2.dots[m]])
        hv = to_spectral(grid, dv)
        hd = to_spectral(grid, dd)
        out[m] = np.sqrt(((np.abs(hd) ** 2).sum() + (om2 * np.abs(hv) ** 2).sum())
                         * grid.L**grid.n)
    return out


@dataclass
class StabilityReport:
    energy: np.ndarray
    sup_energy: float
    gronwall_a: float      # L^1_t L^infty_x budget of the first connection
    gronwall_b: list       # L^2_t L^{2n}_x of both differentials


def stability_experiment(data1, data2, tol: float = 1e-9, max_iter: int = 30,
                         conn_tol: float = 1e-12) -> StabilityReport:
    """Difference-energy curve of two solves, with the budget terms that
    control it (time-integrated sup of a, mixed L^2_t L^{2n}_x of the b's)."""
    f1, g1 = data1
    f2, g2 = data2
    r1 = picard_solve(f1, g1, tol=tol, max_iter=max_iter, conn_tol=conn_tol)
    r2 = picard_solve(f2, g2, tol=tol, max_iter=max_iter, conn_tol=conn_tol)
    E = difference_energy(r1.phi, r1.psi, r2.phi, r2.psi)
    grid = f1.phi.grid
    attach_final_series(r1, with_rates=False)
    attach_final_series(r2, with_rates=False)
    from gwlab.norms import mixed_norm, spatial_lr_series, temporal_lq
    from gwlab.pairs import INF
    a_sup_series = spatial_lr_series(grid, r1.a.vals, INF)
    gron_a = temporal_lq(grid, a_sup_series, 1.0)
    gron_b = [mixed_norm(r.b, 2.0, 2.0 * grid.n) for r in (r1, r2)]
    return StabilityReport(E, float(E.max()), gron_a, gron_b)


@dataclass
class RegularityReport:
    ratio: float
    curve: np.ndarray
    data_norm: float


def regularity_track(f: HodgeData, g: HodgeData, tol: float = 1e-9,
                     max_iter: int = 30, conn_tol: float = 1e-12) -> RegularityReport:
    """sup_t of the one-higher Sobolev norm of the solution, against the data."""
    grid = f.phi.grid
    s_hi = grid.n / 2.0 + 1.0
    data_norm = float(np.hypot(f.sobolev(s_hi), g.sobolev(s_hi - 1.0)))
    res = picard_solve(f, g, tol=tol, max_iter=max_iter, conn_tol=conn_tol)
    curve = np.zeros(grid.M + 1)
    for m in range(grid.M + 1):
        arr = np.concatenate([res.phi.vals[m], res.psi.vals[m]])
        curve[m] = sobolev_norm(arr, s_hi, grid=grid)
    if data_norm == 0.0:
        return RegularityReport(0.0, curve, 0.0)
    return RegularityReport(float(curve.max() / data_norm), curve, data_norm)
