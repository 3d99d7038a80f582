"""BMO norms, window-family BMO^q bounds and Carleson functionals.

Intervals are grid-aligned subintervals of W given by integer coordinates
(a, b], so (1/|I|) int_I |phi - phi_I|^2 comes straight from prefix sums of
phi and phi* phi.  Fields are shifted by their first cell value first, which
makes constant fields give exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import matcore
from .gridfn import GridSpec, MatrixField, RatInterval
from .halfplane import gradient_many

REVERSE_CONSTANT = 4 * np.sqrt(3.0)
_BATCH = 1 << 16


@dataclass
class BmoReport:
    value: float | None
    lower: float
    upper: float
    interval: RatInterval | None
    mode: str
    exact: bool = True

    def __post_init__(self):
        if self.lower > self.upper * (1 + 1e-12) + 1e-300:
            raise ValueError("bound out of order")


def _prefix(phi: MatrixField):
    v = phi.values - phi.values[0]
    z = np.zeros((1, phi.d, phi.d), complex)
    p1 = np.concatenate([z, np.cumsum(v, axis=0)])
    p2 = np.concatenate([z, np.cumsum(matcore.adjoint(v) @ v, axis=0)])
    return p1, p2


def interval_sharp(phi: MatrixField, lo, hi, prefix=None) -> np.ndarray:
    """(1/|I|) int_I |phi - phi_I|^2 for intervals (lo, hi] in coordinates, as psd matrices."""
    lo = np.asarray(lo, np.int64)
    hi = np.asarray(hi, np.int64)
    if np.any(lo < 0) or np.any(hi > phi.n) or np.any(hi <= lo):
        raise ValueError("intervals must be nonempty and inside W")
    p1, p2 = _prefix(phi) if prefix is None else prefix
    L = (hi - lo).astype(float)[:, None, None]
    s1 = (p1[hi] - p1[lo]) / L
    s2 = (p2[hi] - p2[lo]) / L
    out = s2 - matcore.adjoint(s1) @ s1
    return (out + matcore.adjoint(out)) / 2


def _top_eig(m: np.ndarray) -> np.ndarray:
    if m.shape[-1] == 1:
        return m[:, 0, 0].real
    return np.linalg.eigvalsh(m)[:, -1]


def _all_intervals(n: int, batch: int = _BATCH):
    """Yield (lo, hi) coordinate arrays covering every subinterval, grouped by length."""
    lens, los = [], []
    count = 0
    for length in range(1, n + 1):
        a = np.arange(0, n - length + 1, dtype=np.int64)
        los.append(a)
        lens.append(np.full(a.size, length, np.int64))
        count += a.size
        if count >= batch:
            lo = np.concatenate(los)
            yield lo, lo + np.concatenate(lens)
            lens, los, count = [], [], 0
    if los:
        lo = np.concatenate(los)
        yield lo, lo + np.concatenate(lens)


def _sup_over(phi: MatrixField, batches, mode: str) -> BmoReport:
    prefix = _prefix(phi)
    best, arg = -1.0, None
    for lo, hi in batches:
        if lo.size == 0:
            continue
        top = _top_eig(interval_sharp(phi, lo, hi, prefix))
        i = int(np.argmax(top))
        if top[i] > best:
            best, arg = float(top[i]), (int(lo[i]), int(hi[i]))
    v = float(np.sqrt(max(best, 0.0)))
    iv = RatInterval(phi.grid.point(arg[0]), phi.grid.point(arg[1])) if arg else None
    return BmoReport(value=v, lower=v, upper=v, interval=iv, mode=mode)


def dyadic_pair_intervals(grid: GridSpec):
    """Coordinates of all D and D' atoms lying inside W, levels -J .. K."""
    from .dyadic import Filtration, atoms_inside, levels_inside

    los, his = [], []
    for filt in (Filtration.D, Filtration.DPRIME):
        for n in levels_inside(grid):
            lo, hi = atoms_inside(grid, filt, n)
            los.append(lo)
            his.append(hi)
    return np.concatenate(los), np.concatenate(his)


def bmo_norm(phi: MatrixField, side: str = "c", mode: str = "all", max_cells: int = 3 * 2**11) -> BmoReport:
    """sup over intervals I in W of ||(1/|I|) int_I |phi - phi_I|^2||^(1/2).

    mode "all": every grid-aligned subinterval (exact).  mode "dyadic":
    atoms of D and D' inside W; the value is a lower bound for the full norm,
    and 4 sqrt(3) times it an upper bound.
    """
    if side == "r":
        phi = phi.adjoint()
    elif side != "c":
        raise ValueError("side must be 'c' or 'r'")
    if mode == "all":
        if phi.n > max_cells:
            raise ValueError(f"{phi.n} cells exceed the all-interval cap {max_cells}")
        return _sup_over(phi, _all_intervals(phi.n), "all-grid-intervals")
    if mode == "dyadic":
        lo, hi = dyadic_pair_intervals(phi.grid)
        r = _sup_over(phi, [(lo, hi)], "dyadic-pair")
        return BmoReport(value=r.value, lower=r.value, upper=REVERSE_CONSTANT * r.value, interval=r.interval,
                         mode="dyadic-pair", exact=False)
    raise ValueError(f"unknown mode {mode!r}")


def bmo_cr_norm(phi: MatrixField, mode: str = "all") -> float:
    return max(bmo_norm(phi, "c", mode).value, bmo_norm(phi, "r", mode).value)


# window family ----------------------------------------------------------

def window_levels(grid: GridSpec) -> range:
    """n with 2^n a whole number of cells and 2^n <= |W|."""
    return range(1 - grid.K, grid.J + 2)


def window_sharp_fields(phi: MatrixField):
    """phi_n^#(t) = (1/2^n) int over (t - 2^(n-1), t + 2^(n-1)] of |phi - phi_I|^2.

    t runs over the right endpoints of the cells; windows leaving W are
    skipped (value 0).  Returns (levels, array (levels, cells, d, d)).
    """
    grid = phi.grid
    prefix = _prefix(phi)
    levels = list(window_levels(grid))
    out = np.zeros((len(levels), phi.n, phi.d, phi.d), complex)
    for k, n in enumerate(levels):
        half = 3 * 2 ** (grid.K + n - 1)
        t = np.arange(1, phi.n + 1, dtype=np.int64)
        lo, hi = t - half, t + half
        ok = (lo >= 0) & (hi <= phi.n)
        if ok.any():
            out[k, ok] = interval_sharp(phi, lo[ok], hi[ok], prefix)
    return levels, out


def bmo_q_norm(phi: MatrixField, q: float, side: str = "c", ascent_iters: int = 200) -> BmoReport:
    """Bound pair for ||sup_n phi_n^#||_{q/2}^{1/2} over the symmetric window family."""
    from .maximal import ncsup_bounds

    if not q > 2:
        raise ValueError("q must be > 2")
    if side == "r":
        phi = phi.adjoint()
    elif side != "c":
        raise ValueError("side must be 'c' or 'r'")
    levels, vals = window_sharp_fields(phi)
    nb = ncsup_bounds(list(vals), q / 2, h=phi.grid.h, iters=ascent_iters)
    lo, up = float(np.sqrt(max(nb.lower, 0.0))), float(np.sqrt(max(nb.upper, 0.0)))
    return BmoReport(value=lo if nb.exact else None, lower=lo, upper=up, interval=None, mode="window-family",
                     exact=nb.exact)


# Carleson functionals ---------------------------------------------------

@dataclass(frozen=True)
class CarlesonRows:
    """Row quadrature of |grad phi|^2 y over W x (0, y_top].

    Row r covers heights (y0[r], y1[r]]; each function-grid cell is split into
    sub[r] columns so that columns are narrower than the row height.
    """

    y0: np.ndarray
    y1: np.ndarray
    sub: np.ndarray
    refinement: int


@lru_cache(maxsize=16)
def carleson_rows(J: int, K: int, refine: int = 1, per_octave: int = 8) -> CarlesonRows:
    y_lo, y_hi = 2.0 ** -(K + 4), 2.0 ** (J + 1)
    n = int(round(per_octave * np.log2(y_hi / y_lo)))
    e = y_lo * 2.0 ** (np.arange(n + 1) / per_octave)
    h = 2.0**-K / 3
    y0, y1 = np.concatenate([[0.0], e[:-1]]), e
    height = np.maximum(y1, y_lo)
    sub = np.maximum(1, 2 ** np.ceil(np.log2(h * 2**refine / height))).astype(np.int64)
    return CarlesonRows(y0, y1, sub, refine)


def carleson_density(phi: MatrixField, rows: CarlesonRows | None = None) -> np.ndarray:
    """Per (row, cell) integrals of |grad phi|^2 y dx dy, shape (rows, cells, d, d).

    The bottom row (0, y_lo] is integrated with the height y_lo / 2 midpoint.
    """
    grid = phi.grid
    rows = carleson_rows(grid.J, grid.K) if rows is None else rows
    e = grid.edges()
    h = grid.h
    out = np.zeros((rows.y0.size, phi.n, phi.d, phi.d), complex)
    for r in range(rows.y0.size):
        s = int(rows.sub[r])
        ym = 0.5 * (rows.y0[r] + rows.y1[r]) if rows.y0[r] == 0 else np.sqrt(rows.y0[r] * rows.y1[r])
        dy = rows.y1[r] - rows.y0[r]
        xs = (e[:-1, None] + h * (np.arange(s) + 0.5)[None, :] / s).ravel()
        acc = np.zeros((phi.n, phi.d, phi.d), complex)
        for a in range(0, xs.size, _BATCH):
            xb = xs[a:a + _BATCH]
            g = gradient_many(phi, xb, np.full(xb.size, ym))
            sq = np.einsum("nsji,nsjl->nil", g.conj(), g)
            idx = np.arange(a, a + xb.size) // s
            np.add.at(acc, idx, sq)
        out[r] = acc * (h / s) * ym * dy
    return out


class CarlesonTable:
    """Prefix sums of the row density: Carleson box integrals for any grid interval."""

    def __init__(self, phi: MatrixField, refine: int = 1):
        self.grid = phi.grid
        self.rows = carleson_rows(phi.grid.J, phi.grid.K, refine)
        dens = carleson_density(phi, self.rows)
        z = np.zeros((dens.shape[0], 1, phi.d, phi.d), complex)
        self.prefix = np.concatenate([z, np.cumsum(dens, axis=1)], axis=1)

    def functional(self, lo, hi) -> np.ndarray:
        """(1/|I|) int over T(I) of |grad phi|^2 y for intervals (lo, hi] in coordinates."""
        lo = np.atleast_1d(np.asarray(lo, np.int64))
        hi = np.atleast_1d(np.asarray(hi, np.int64))
        length = (hi - lo) * self.grid.h
        box = self.prefix[:, hi] - self.prefix[:, lo]  # (rows, m, d, d)
        y0, y1 = self.rows.y0[:, None], self.rows.y1[:, None]
        # fraction of each row below the box top (linear inside the straddling row)
        frac = np.clip((length[None, :] - y0) / (y1 - y0), 0.0, 1.0)
        tot = np.einsum("rm,rmij->mij", frac, box)
        tot = tot / length[:, None, None]
        return (tot + matcore.adjoint(tot)) / 2


def carleson_functional(phi: MatrixField, interval: RatInterval, refine: int = 1,
                        table: CarlesonTable | None = None) -> np.ndarray:
    """(1/|I|) int over I x (0, |I|] of |grad phi|^2 y dx dy, a psd matrix."""
    grid = phi.grid
    a, b = grid.coord(interval.lo), grid.coord(interval.hi)
    if a < 0 or b > grid.n_cells:
        raise ValueError(f"interval {interval} is not inside W")
    table = CarlesonTable(phi, refine) if table is None else table
    return table.functional([a], [b])[0]


def carleson_sup(phi: MatrixField, mode: str = "dyadic", refine: int = 1) -> BmoReport:
    """sup over the interval family of ||carleson_functional||."""
    table = CarlesonTable(phi, refine)
    if mode == "dyadic":
        batches = [dyadic_pair_intervals(phi.grid)]
    elif mode == "all":
        batches = _all_intervals(phi.n, batch=1 << 13)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    best, arg = -1.0, None
    for lo, hi in batches:
        top = _top_eig(table.functional(lo, hi))
        i = int(np.argmax(top))
        if top[i] > best:
            best, arg = float(top[i]), (int(lo[i]), int(hi[i]))
    v = max(best, 0.0)
    iv = RatInterval(phi.grid.point(arg[0]), phi.grid.point(arg[1]))
    return BmoReport(value=v, lower=v, upper=v, interval=iv, mode=f"carleson-{mode}", exact=False)
