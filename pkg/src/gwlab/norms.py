"""Mixed space-time, dyadic Sobolev/Besov, and frequency-block norms.

All spatial integrals are Riemann sums with cell volume (L/N)^n; temporal
integrals use the composite trapezoid rule on the uniform time lattice;
L^infty is the max over samples.  Pointwise magnitudes are Euclidean over
every channel a field carries.

Suprema over exponent pairs are maxima over the finite default lattices of
:mod:`gwlab.pairs`; every report records which family was used, since a
finite lattice is what replaces the unbounded pair set.
"""

from dataclasses import dataclass, field

import numpy as np

from gwlab.fields import LieAlgebraField, SpaceTimeField, to_spectral, from_spectral
from gwlab.grid import Grid
from gwlab.lp import DyadicLadder
from gwlab.pairs import INF, AdmissiblePairFamily, enumerate_pairs, inv

_MASS_EPS = 1e-60


def _check_exponent(x, name):
    if not (x == INF or x >= 1.0):
        raise ValueError(f"{name} must be in [1, inf], got {x}")


def spatial_lr_series(grid: Grid, arr, r) -> np.ndarray:
    """Spatial L^r of each time slice of a (T, C, spatial...) array."""
    mag_sq = (arr * arr).sum(axis=1)
    axes = tuple(range(1, 1 + grid.n))
    if r == INF:
        return np.sqrt(mag_sq.max(axis=axes))
    if r == 2.0:
        return np.sqrt(mag_sq.sum(axis=axes) * grid.cell_volume)
    return (mag_sq ** (r / 2.0)).sum(axis=axes) ** (1.0 / r) * grid.cell_volume ** (1.0 / r)


def temporal_lq(grid: Grid, series, q) -> float:
    """Composite-trapezoid L^q over [0, T] of per-slice values."""
    series = np.asarray(series, dtype=np.float64)
    if q == INF:
        return float(series.max(initial=0.0))
    w = np.ones_like(series)
    w[0] = w[-1] = 0.5
    return float(((series**q) * w).sum() * grid.dt) ** (1.0 / q)


def mixed_norm(F: SpaceTimeField, q, r, which: str = "val") -> float:
    """L^q in time of the spatial L^r norm."""
    _check_exponent(q, "q")
    _check_exponent(r, "r")
    arr = F.vals if which == "val" else F.dots
    return temporal_lq(F.grid, spatial_lr_series(F.grid, arr, r), q)


# ---------------------------------------------------------------------------
# shell-block engine


class ShellNormEngine:
    """Per-(dyadic block, exponent r) tables of spatial norms over time.

    One pass per batch of requested exponents: each time slice is
    transformed once, each block with spectral mass is synthesized once,
    and every requested L^r reduction is read off the same magnitudes.
    """

    def __init__(self, F: SpaceTimeField, ladder: DyadicLadder | None = None,
                 drop_zero_mode: bool = True):
        self.F = F
        self.grid = F.grid
        self.ladder = ladder or DyadicLadder.for_grid(F.grid)
        self.drop_zero_mode = drop_zero_mode
        self._tables = {}  # (block_key, r) -> (val_series, dot_series)
        self._done_rs = set()

    def request(self, rs):
        rs = sorted(set(float(r) for r in rs) - self._done_rs)
        if not rs:
            return
        grid, ladder = self.grid, self.ladder
        blocks = ladder.blocks
        nt = grid.M + 1
        tables = {(key, r): (np.zeros(nt), np.zeros(nt)) for key, _ in blocks for r in rs}
        has_dots = self.F.dots is not None
        vol = grid.L**grid.n
        rs_real = [r for r in rs if r != 2.0]

        def reduce_lr(arr):
            """One magnitude pass serving every requested exponent."""
            mag_sq = (arr * arr).sum(axis=0)
            out = {}
            finite = [r for r in rs_real if r != INF]
            if finite:
                log_mag = 0.5 * np.log(mag_sq + 1e-300)
                for r in finite:
                    out[r] = float(np.exp(r * log_mag).sum() * grid.cell_volume) ** (1.0 / r)
            if INF in rs_real:
                out[INF] = float(np.sqrt(mag_sq.max(initial=0.0)))
            return out

        for m in range(nt):
            hat_v = to_spectral(grid, self.F.vals[m])
            hat_d = to_spectral(grid, self.F.dots[m]) if has_dots else None
            for key, is_low in blocks:
                mask = ladder.block_mask(key, is_low, self.drop_zero_mode)
                hv = hat_v * mask
                hd = hat_d * mask if has_dots else None
                vmass = (np.abs(hv) ** 2).sum()
                dmass = (np.abs(hd) ** 2).sum() if has_dots else 0.0
                if 2.0 in rs:
                    # Plancherel: no synthesis needed for the L^2 table
                    tables[(key, 2.0)][0][m] = np.sqrt(vmass * vol)
                    tables[(key, 2.0)][1][m] = np.sqrt(dmass * vol)
                if not rs_real or (vmass < _MASS_EPS and dmass < _MASS_EPS):
                    continue
                vr = reduce_lr(from_spectral(grid, hv))
                dr = reduce_lr(from_spectral(grid, hd)) if has_dots else {}
                for r in rs_real:
                    tables[(key, r)][0][m] = vr[r]
                    if has_dots:
                        tables[(key, r)][1][m] = dr[r]
        self._tables.update(tables)
        self._done_rs.update(rs)

    def block_series(self, key, r):
        r = float(r)
        if r not in self._done_rs:
            self.request([r])
        return self._tables[(key, r)]

    def block_mixed(self, key, q, r, which: str = "val") -> float:
        val, dot = self.block_series(key, r)
        return temporal_lq(self.grid, val if which == "val" else dot, q)


@dataclass
class NormReport:
    name: str
    value: float
    rows: list = field(default_factory=list)  # (block, q, r, block_value)
    meta: dict = field(default_factory=dict)

    def add(self, block, q, r, value):
        self.rows.append((block, q, r, value))


def _aggregate(blocks, ell: float) -> float:
    arr = np.asarray(blocks, dtype=np.float64)
    if ell == INF:
        return float(arr.max(initial=0.0))
    if ell == 1.0:
        return float(arr.sum())
    return float((arr**ell).sum() ** (1.0 / ell))


# ---------------------------------------------------------------------------
# dyadic Sobolev norm (purely spectral, time-independent fields)


def _dyadic_l2_blocks(grid: Grid, hat, ladder: DyadicLadder):
    """L^2 mass of each dyadic block, computed by Plancherel in one pass."""
    power = (np.abs(hat) ** 2).sum(axis=tuple(range(hat.ndim - grid.n)))
    out = []
    for key, is_low in ladder.blocks:
        mask = ladder.block_mask(key, is_low, drop_zero_mode=True)
        out.append((key, float(np.sqrt((mask**2 * power).sum() * grid.L**grid.n))))
    return out


def sobolev_norm(f, s: float, grid: Grid | None = None) -> float:
    """Homogeneous dyadic Sobolev norm (ell^2 of 2^{ks}-weighted shell L^2 blocks)."""
    if isinstance(f, LieAlgebraField):
        grid, hat = f.grid, f.hat
    else:
        hat = to_spectral(grid, np.asarray(f))
    ladder = DyadicLadder.for_grid(grid)
    blocks = _dyadic_l2_blocks(grid, hat, ladder)
    return _aggregate([2.0 ** (k * s) * v for k, v in blocks], 2.0)


def besov_norm(F: SpaceTimeField, s: float, p, q_t, engine: ShellNormEngine | None = None,
               which: str = "val") -> float:
    """(sum_k 2^{2ks} |Q_k F|^2_{L^{q_t}_t L^p_x})^{1/2} with the lumped-low block."""
    engine = engine or ShellNormEngine(F)
    engine.request([p])
    blocks = [2.0 ** (k * s) * engine.block_mixed(k, q_t, p, which)
              for k, _ in engine.ladder.blocks]
    return _aggregate(blocks, 2.0)


# ---------------------------------------------------------------------------
# frequency-block Strichartz norms


def strichartz_block_norm(F_or_engine, k: int, j: int,
                          family: AdmissiblePairFamily | None = None,
                          report: NormReport | None = None) -> float:
    """sup over the family of 2^{k(1/q + n/r - j)} (|F|_{L^q L^r} + 2^{-k}|dF/dt|_{L^q L^r}).

    The caller is responsible for F being the k-th dyadic block (project
    first); the engine variant evaluates the block tables directly.
    """
    engine = F_or_engine if isinstance(F_or_engine, ShellNormEngine) else ShellNormEngine(F_or_engine)
    n = engine.grid.n
    if family is None:
        family = enumerate_pairs(n, "sharp")
    if len(family) == 0:
        raise ValueError("empty exponent-pair family")
    engine.request([p.r for p in family])
    best, best_pair = 0.0, None
    for p in family:
        w = 2.0 ** (k * p.weight_exponent(n, j))
        val = w * (engine.block_mixed(k, p.q, p.r, "val")
                   + 2.0 ** (-k) * engine.block_mixed(k, p.q, p.r, "dot"))
        if val > best or best_pair is None:
            best, best_pair = val, p
    if report is not None:
        report.add(k, best_pair.q, best_pair.r, best)
    return best


def s_norm(F: SpaceTimeField, j: int, family: AdmissiblePairFamily | None = None,
           engine: ShellNormEngine | None = None, report: NormReport | None = None) -> float:
    """ell^2 over dyadic blocks of the frequency-block norms."""
    engine = engine or ShellNormEngine(F)
    if family is None:
        family = enumerate_pairs(engine.grid.n, "sharp")
    blocks = [strichartz_block_norm(engine, k, j, family, report)
              for k, _ in engine.ladder.blocks]
    total = _aggregate(blocks, 2.0)
    if report is not None:
        report.value = total
        report.meta.setdefault("family", family.describe())
    return total


def s_plus_norm(F: SpaceTimeField, engine: ShellNormEngine | None = None,
                family_val: AdmissiblePairFamily | None = None,
                family_dot: AdmissiblePairFamily | None = None,
                report: NormReport | None = None) -> float:
    """ell^1 over blocks; value part over the good family, derivative part over good_t."""
    engine = engine or ShellNormEngine(F)
    n = engine.grid.n
    family_val = family_val or enumerate_pairs(n, "good")
    family_dot = family_dot or enumerate_pairs(n, "good_t")
    engine.request([p.r for p in family_val] + [p.r for p in family_dot])
    blocks = []
    for k, _ in engine.ladder.blocks:
        best_v = max(
            ((2.0 ** (k * p.weight_exponent(n, 1)) * engine.block_mixed(k, p.q, p.r, "val"), p)
             for p in family_val), key=lambda t: t[0])
        best_d = max(
            ((2.0 ** (k * p.weight_exponent(n, 1)) * 2.0 ** (-k)
              * engine.block_mixed(k, p.q, p.r, "dot"), p)
             for p in family_dot), key=lambda t: t[0])
        blocks.append(best_v[0] + best_d[0])
        if report is not None:
            report.add(k, best_v[1].q, best_v[1].r, best_v[0] + best_d[0])
    total = _aggregate(blocks, 1.0)
    if report is not None:
        report.value = total
        report.meta.setdefault("family", family_val.describe())
        report.meta.setdefault("family_dot", family_dot.describe())
    return total


def bp_norm(F: SpaceTimeField, p: float, engine: ShellNormEngine | None = None) -> float:
    """ell^p over blocks of |Q_k F|_{L^1_t L^infty_x}."""
    _check_exponent(p, "p")
    engine = engine or ShellNormEngine(F)
    blocks = [engine.block_mixed(k, 1.0, INF, "val") for k, _ in engine.ladder.blocks]
    return _aggregate(blocks, p)


def forcing_block_norm(F: SpaceTimeField, weight_s: float,
                       engine: ShellNormEngine | None = None) -> float:
    """(sum_k 2^{2 k s} |Q_k F|^2_{L^1_t L^2_x})^{1/2}: the source-term norm."""
    engine = engine or ShellNormEngine(F)
    blocks = [2.0 ** (k * weight_s) * engine.block_mixed(k, 1.0, 2.0, "val")
              for k, _ in engine.ladder.blocks]
    return _aggregate(blocks, 2.0)
