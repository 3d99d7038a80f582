"""Seeded random field generators.

Values are rounded to multiples of 2^-30 so that every partial sum over a
window is exact in double precision.  This makes "mean zero" an exact
statement rather than a rounding-level one.
"""

from __future__ import annotations

import numpy as np

from . import matcore
from .gridfn import GridSpec, MatrixField, RatInterval

QUANTUM = 2.0**-30


def _quantize(a: np.ndarray) -> np.ndarray:
    return np.round(a / QUANTUM) * QUANTUM


def _cmat(rng: np.random.Generator, shape) -> np.ndarray:
    z = rng.standard_normal((*shape, 2)) / np.sqrt(2)
    return _quantize(z[..., 0]) + 1j * _quantize(z[..., 1])


def block_cells(grid: GridSpec, block_level: int) -> int:
    """Cells per dyadic block of length 2^-block_level."""
    if block_level > grid.K:
        raise ValueError("blocks finer than the grid")
    if block_level < -grid.J:
        raise ValueError("blocks longer than the window")
    return 3 * 2 ** (grid.K - block_level)


def gaussian_field(grid: GridSpec, d: int, rng: np.random.Generator, block_level: int = 2,
                   mean_zero: bool = True, hermitian: bool = False) -> MatrixField:
    """iid complex Gaussian entries, constant on dyadic blocks of length 2^-block_level."""
    c = block_cells(grid, block_level)
    nb = grid.n_cells // c
    v = _cmat(rng, (nb, d, d))
    if hermitian:
        hv = (v + matcore.adjoint(v)) / 2
        v = _quantize(hv.real) + 1j * _quantize(hv.imag)
    if mean_zero:
        v = _make_mean_zero(v)
    return MatrixField(grid, np.repeat(v, c, axis=0))


def _make_mean_zero(v: np.ndarray) -> np.ndarray:
    v = v - _quantize(v.real.mean(axis=0)) - 1j * _quantize(v.imag.mean(axis=0))
    # absorb the leftover rounding into the last block; all sums stay exact
    v[-1] -= v.sum(axis=0)
    return v


def cell_gaussian_field(grid: GridSpec, d: int, rng: np.random.Generator, mean_zero: bool = True) -> MatrixField:
    """iid entries on every grid cell (rough fields)."""
    v = _cmat(rng, (grid.n_cells, d, d))
    if mean_zero:
        v = _make_mean_zero(v)
    return MatrixField(grid, v)


def psd_field(grid: GridSpec, d: int, rng: np.random.Generator, block_level: int | None = None,
              rank: int | None = None) -> MatrixField:
    """Random psd values g g* / d, per cell or per dyadic block."""
    c = 1 if block_level is None else block_cells(grid, block_level)
    nb = grid.n_cells // c
    r = d if rank is None else rank
    g = _cmat(rng, (nb, d, r))
    return MatrixField(grid, np.repeat(g @ matcore.adjoint(g) / d, c, axis=0))


def martingale_field(grid: GridSpec, d: int, rng: np.random.Generator, bound: float = 1.0,
                     top_level: int | None = None, bottom_level: int = 3) -> MatrixField:
    """Dyadic martingale with differences of operator norm <= bound.

    On every D-atom of level n - 1 the difference at level n is X on the left
    half and -X on the right half, for n = top_level + 1 .. bottom_level.
    """
    top = -grid.J if top_level is None else top_level
    if bottom_level > grid.K or top < -grid.J:
        raise ValueError("martingale levels outside the grid range")
    v = np.zeros((grid.n_cells, d, d), complex)
    for n in range(top + 1, bottom_level + 1):
        c = block_cells(grid, n - 1)
        nat = grid.n_cells // c
        x = _cmat(rng, (nat, d, d))
        nrm = matcore.op_norm(x)
        scale = bound * rng.uniform(0.25, 1.0, size=nat) / np.maximum(nrm, 1e-300)
        # 2^-20 headroom keeps the quantized norm below the bound
        x = _quantize(x.real * scale[:, None, None] * (1 - 2**-20)) + 1j * _quantize(
            x.imag * scale[:, None, None] * (1 - 2**-20))
        sign = np.repeat(np.tile(np.array([1.0, -1.0]), nat), c // 2)
        v += np.repeat(x, c, axis=0) * sign[:, None, None]
    return MatrixField(grid, v)


def random_atom(grid: GridSpec, d: int, rng: np.random.Generator, level: int | None = None,
                block_level: int | None = None) -> tuple[MatrixField, RatInterval]:
    """A normalized atom on a random D-atom I of the given level inside W."""
    n = int(rng.integers(-grid.J + 1, grid.K - 1)) if level is None else level
    length = 3 * 2 ** (grid.K - n)
    k = int(rng.integers(0, grid.n_cells // length))
    a, b = k * length, (k + 1) * length
    bl = min(grid.K, n + 3) if block_level is None else block_level
    c = 3 * 2 ** (grid.K - bl)
    nb = length // c
    v = _cmat(rng, (nb, d, d))
    v = v - v.mean(axis=0)
    vals = np.zeros((grid.n_cells, d, d), complex)
    vals[a:b] = np.repeat(v, c, axis=0)
    f = MatrixField(grid, vals)
    from .atomdec import normalize_atom

    interval = RatInterval(grid.point(a), grid.point(b))
    return normalize_atom(f, interval), interval


ENSEMBLE_KINDS = ("gaussian", "martingale", "atoms", "psd")


def member_rng(seed: int, index: int) -> np.random.Generator:
    """Independent generator for ensemble member ``index``."""
    return np.random.default_rng([int(seed), int(index)])


def generate_ensemble(kind: str, grid: GridSpec, d: int, size: int, seed: int, **kw) -> list[MatrixField]:
    """Seeded list of fields; member i depends only on (seed, i)."""
    if size < 1:
        raise ValueError("ensembleSize must be >= 1")
    if d < 1:
        raise ValueError("d must be >= 1")
    out = []
    for i in range(size):
        rng = member_rng(seed, i)
        if kind == "gaussian":
            out.append(gaussian_field(grid, d, rng, **kw))
        elif kind == "martingale":
            out.append(martingale_field(grid, d, rng, **kw))
        elif kind == "atoms":
            out.append(random_atom(grid, d, rng, **kw)[0])
        elif kind == "psd":
            out.append(psd_field(grid, d, rng, **kw))
        else:
            raise ValueError(f"unknown ensemble kind {kind!r}")
    return out
