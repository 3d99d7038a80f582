"""The dyadic filtration D and its shifted companion D'.

D_n^k = (k 2^-n, (k+1) 2^-n].  D' shifts the level-n atoms by 2^-n / 3 for
even n and by 2 * 2^-n / 3 for odd n.  In integer grid coordinates (cells of
width 2^-K / 3) every atom endpoint of level n <= K is an integer, which is
what makes covering and conditional expectations exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .gridfn import GridSpec, MatrixField, RatInterval

MAX_LEVEL = 40


class Filtration(str, Enum):
    D = "D"
    DPRIME = "D'"


def _offset(filtration: Filtration, n: int) -> Fraction:
    if filtration == Filtration.D:
        return Fraction(0)
    return Fraction(1, 3) if n % 2 == 0 else Fraction(2, 3)


def _check_level(n: int) -> None:
    if abs(n) > MAX_LEVEL:
        raise ValueError(f"level {n} outside |n| <= {MAX_LEVEL}")


@dataclass(frozen=True)
class AtomRef:
    filtration: Filtration
    n: int
    k: int

    @property
    def interval(self) -> RatInterval:
        o = _offset(self.filtration, self.n)
        s = Fraction(2) ** -self.n
        return RatInterval((self.k + o) * s, (self.k + 1 + o) * s)

    @property
    def length(self) -> Fraction:
        return Fraction(2) ** -self.n


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def atom_at(filtration: Filtration, n: int, t) -> AtomRef:
    """The level-n atom (lo, hi] containing t."""
    _check_level(n)
    filtration = Filtration(filtration)
    t = Fraction(t)
    k = _ceil(t * Fraction(2) ** n - _offset(filtration, n)) - 1
    return AtomRef(filtration, n, k)


def cover_level(length: Fraction) -> int:
    """N with 2^(-N-1)/3 <= |I| < 2^(-N)/3."""
    length = Fraction(length)
    if length <= 0:
        raise ValueError("interval length must be positive")
    x = 3 * length  # want 2^(-N-1) <= x < 2^(-N)
    n = -math.floor(math.log2(x)) - 1
    # correct the float estimate exactly
    while Fraction(2) ** (-n - 1) > x:
        n += 1
    while x >= Fraction(2) ** (-n):
        n -= 1
    return n


def cover(interval: RatInterval) -> AtomRef:
    """An atom of D or D' containing I with length <= 6 |I| (D tried first)."""
    n = cover_level(interval.length)
    for filt in (Filtration.D, Filtration.DPRIME):
        a = atom_at(filt, n, interval.hi)
        if a.interval.contains(interval):
            return a
    raise AssertionError(f"no covering atom for {interval}")  # excluded by the separation argument


# integer grid arithmetic ---------------------------------------------------

def atom_cells(grid: GridSpec, n: int) -> int:
    """Atom length in cells; requires n <= K."""
    if n > grid.K:
        raise ValueError(f"level {n} is finer than the grid (K = {grid.K})")
    return 3 * 2 ** (grid.K - n)


def atom_residue(grid: GridSpec, filtration: Filtration, n: int) -> int:
    """Grid coordinate of some atom endpoint, reduced mod the atom length."""
    s = atom_cells(grid, n)
    origin = 3 * 2 ** (grid.K + grid.J)  # coordinate of x = 0
    shift = 0 if Filtration(filtration) == Filtration.D else (1 if n % 2 == 0 else 2) * 2 ** (grid.K - n)
    return (origin + shift) % s


def cell_atom_ids(grid: GridSpec, filtration: Filtration, n: int) -> np.ndarray:
    """Index of the level-n atom containing each cell (cell i is (i, i+1] in coordinates)."""
    s = atom_cells(grid, n)
    r = atom_residue(grid, filtration, n)
    i = np.arange(grid.n_cells)
    return (i - r) // s


def atom_bounds(grid: GridSpec, filtration: Filtration, n: int, ids: np.ndarray):
    s = atom_cells(grid, n)
    r = atom_residue(grid, filtration, n)
    lo = ids * s + r
    return lo, lo + s


def atoms_inside(grid: GridSpec, filtration: Filtration, n: int):
    """Coordinates (lo, hi) of the level-n atoms lying inside W."""
    ids = np.unique(cell_atom_ids(grid, filtration, n))
    lo, hi = atom_bounds(grid, filtration, n, ids)
    keep = (lo >= 0) & (hi <= grid.n_cells)
    return lo[keep], hi[keep]


def levels_inside(grid: GridSpec) -> range:
    """Levels whose atoms fit in W and are grid-aligned."""
    return range(-grid.J, grid.K + 1)


def _block_mean(vals: np.ndarray, ids: np.ndarray, s: int):
    """Mean over each atom (zero outside W), as base + mean deviation.

    Writing the mean as the first value plus the averaged deviations makes a
    constant block reproduce its value exactly.
    """
    uniq, first, inv = np.unique(ids, return_index=True, return_inverse=True)
    base = vals[first]
    dev = vals - base[inv]
    sums = np.zeros_like(base)
    np.add.at(sums, inv, dev)
    counts = np.bincount(inv, minlength=uniq.size)
    # cells of an atom outside W hold 0, i.e. deviation -base
    missing = (s - counts)[:, None, None]
    means = base + (sums - missing * base) / s
    return means[inv], counts < s


def cond_exp(f: MatrixField, filtration: Filtration, n: int, return_flags: bool = False):
    """E(f | F_n): per-atom means with f = 0 outside W."""
    _check_level(n)
    s = atom_cells(f.grid, n)
    ids = cell_atom_ids(f.grid, filtration, n)
    out, partial = _block_mean(f.values, ids, s)
    g = MatrixField(f.grid, out)
    if return_flags:
        return g, bool(partial.any())
    return g


def martingale_differences(f: MatrixField, filtration: Filtration, n_range: tuple[int, int]):
    """(E_{n0} f, [d_n for n0 < n <= n1]) with d_n = E_n f - E_{n-1} f."""
    n0, n1 = n_range
    if n0 > n1 or n1 > f.grid.K:
        raise ValueError(f"invalid level range {n_range}")
    e = [cond_exp(f, filtration, n) for n in range(n0, n1 + 1)]
    diffs = [e[i] - e[i - 1] for i in range(1, len(e))]
    return e[0], diffs


# covering oracle, vectorized ----------------------------------------------

def cover_coords(grid: GridSpec, a: np.ndarray, b: np.ndarray):
    """Vectorized cover for grid intervals (a, b] in coordinates.

    Returns (level N, uses D' flag, atom lo, atom hi) as integer arrays.
    """
    a = np.asarray(a, np.int64)
    b = np.asarray(b, np.int64)
    length = b - a
    bl = np.floor(np.log2(length)).astype(np.int64) + 1
    # fix float log2 at exact powers of two
    bl = np.where((1 << (bl - 1)) > length, bl - 1, bl)
    bl = np.where((1 << bl) <= length, bl + 1, bl)
    N = grid.K - bl
    s = 3 * (np.int64(1) << (grid.K - N))
    origin = 3 * 2 ** (grid.K + grid.J)
    unit = np.int64(1) << (grid.K - N)

    def atom_lo(shift):
        r = (origin + shift) % s
        return (b - 1 - r) // s * s + r

    lo_d = atom_lo(0)
    ok_d = lo_d <= a
    shift = np.where(N % 2 == 0, unit, 2 * unit)
    lo_p = atom_lo(shift)
    lo = np.where(ok_d, lo_d, lo_p)
    return N, ~ok_d, lo, lo + s


def exhaustive_cover_check(grid: GridSpec) -> dict:
    """Check every grid interval inside W: containment and length <= 6 |I|."""
    n = grid.n_cells
    total = fails = used_dprime = 0
    parity = {0: 0, 1: 0}
    worst = 0.0
    for length in range(1, n + 1):
        a = np.arange(0, n - length + 1, dtype=np.int64)
        b = a + length
        N, dp, lo, hi = cover_coords(grid, a, b)
        ok = (lo <= a) & (hi >= b) & ((hi - lo) <= 6 * length)
        total += a.size
        fails += int((~ok).sum())
        used_dprime += int(dp.sum())
        for par in (0, 1):
            parity[par] += int((dp & (N % 2 == par)).sum())
        worst = max(worst, float(((hi - lo) / length).max()))
    return {"intervals": total, "failures": fails, "dprime_used": used_dprime,
            "dprime_even_levels": parity[0], "dprime_odd_levels": parity[1], "worst_ratio": worst}


def separation_check(grid: GridSpec) -> dict:
    """Min gap between endpoints of D_N and D'_N inside W, per level, vs 2^-N / 3."""
    out = {}
    n = grid.n_cells
    for N in range(-grid.J - 2, grid.K + 1):
        s = atom_cells(grid, N)
        pts = []
        for filt in (Filtration.D, Filtration.DPRIME):
            r = atom_residue(grid, filt, N)
            pts.append(np.arange(r, n + 1, s))
        allp = np.unique(np.concatenate(pts))
        need = 2 ** (grid.K - N)  # 2^-N / 3 in cells
        gap = int(np.diff(allp).min()) if allp.size > 1 else None
        out[N] = {"min_gap": gap, "required": need, "ok": gap is None or gap >= need}
    return out


# dyadic BMO ----------------------------------------------------------------

def atom_sharp_values(phi: MatrixField, filtration: Filtration, n: int):
    """For the level-n atoms inside W: coordinates and (1/|A|) int_A |phi - phi_A|^2."""
    from .bmo import interval_sharp

    lo, hi = atoms_inside(phi.grid, filtration, n)
    if lo.size == 0:
        return lo, hi, np.zeros((0, phi.d, phi.d), complex)
    return lo, hi, interval_sharp(phi, lo, hi)


def sharp_fields(phi: MatrixField, filtration: Filtration):
    """psd fields t -> phi^#_{F_n}(t) for each level n with atoms in W (zero off those atoms)."""
    fields = []
    for n in levels_inside(phi.grid):
        lo, hi, vals = atom_sharp_values(phi, filtration, n)
        out = np.zeros((phi.n, phi.d, phi.d), complex)
        for a, b, v in zip(lo, hi, vals):
            out[a:b] = v
        fields.append(out)
    return fields


def dyadic_bmo_q_norm(phi: MatrixField, q: float, filtration: Filtration, side: str = "c"):
    """||sup_n phi^#_{F_n}||_{q/2}^{1/2}: exact at q = inf, a bound pair otherwise."""
    from .bmo import BmoReport
    from .maximal import ncsup_bounds

    if not q > 2:
        raise ValueError("q must be > 2")
    if side == "r":
        phi = phi.adjoint()
    elif side != "c":
        raise ValueError("side must be 'c' or 'r'")
    filtration = Filtration(filtration)
    if np.isinf(q):
        best, arg = 0.0, None
        for n in levels_inside(phi.grid):
            lo, hi, vals = atom_sharp_values(phi, filtration, n)
            if lo.size == 0:
                continue
            nv = np.linalg.eigvalsh(vals)[:, -1]
            i = int(np.argmax(nv))
            if nv[i] > best or arg is None:
                best = max(best, float(nv[i]))
                arg = RatInterval(phi.grid.point(int(lo[i])), phi.grid.point(int(hi[i])))
        v = float(np.sqrt(max(best, 0.0)))
        return BmoReport(value=v, lower=v, upper=v, interval=arg, mode=f"dyadic-{filtration.value}")
    fields = sharp_fields(phi, filtration)
    nb = ncsup_bounds(fields, q / 2, h=phi.grid.h)
    return BmoReport(value=None, lower=float(np.sqrt(nb.lower)), upper=float(np.sqrt(nb.upper)),
                     interval=None, mode=f"dyadic-{filtration.value}", exact=nb.exact)
