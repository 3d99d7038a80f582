"""Matrix-valued step functions on a uniform grid with exact rational endpoints.

The window is W = (-2^J, 2^J], cut into 3 * 2^(K+J+1) half-open cells of
width h = 2^-K / 3.  Every cell endpoint is an integer multiple of h, so the
integer *grid coordinate* ``u`` of a point x is ``(x + 2^J) / h``.  Fields are
zero outside W.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from . import matcore


@dataclass(frozen=True)
class GridSpec:
    J: int
    K: int

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be >= 0")

    @property
    def cell_width(self) -> Fraction:
        return Fraction(1, 3 * 2**self.K)

    @property
    def h(self) -> float:
        return float(self.cell_width)

    @property
    def n_cells(self) -> int:
        return 3 * 2 ** (self.K + self.J + 1)

    @property
    def half_width(self) -> Fraction:
        return Fraction(2) ** self.J

    @property
    def window(self) -> "RatInterval":
        return RatInterval(-self.half_width, self.half_width)

    def edges(self) -> np.ndarray:
        """Cell endpoints as floats (length n_cells + 1)."""
        return -float(self.half_width) + self.h * np.arange(self.n_cells + 1)

    def centers(self) -> np.ndarray:
        return -float(self.half_width) + self.h * (np.arange(self.n_cells) + 0.5)

    def coord(self, x) -> int:
        """Integer grid coordinate of an exact rational point; raises if off-grid."""
        u = (Fraction(x) + self.half_width) / self.cell_width
        if u.denominator != 1:
            raise ValueError(f"point {x} is not on the grid")
        return int(u)

    def point(self, u: int) -> Fraction:
        return -self.half_width + u * self.cell_width

    def cell_of(self, x) -> int:
        """Index of the cell (lo, hi] containing x (may be outside 0..n-1)."""
        u = (Fraction(x) + self.half_width) / self.cell_width
        # (lo, hi] convention: x = hi belongs to the cell ending at hi
        return int(-((-u.numerator) // u.denominator)) - 1


@dataclass(frozen=True)
class RatInterval:
    """Half-open interval (lo, hi] with exact rational endpoints."""

    lo: Fraction
    hi: Fraction

    def __init__(self, lo, hi):
        lo, hi = Fraction(lo), Fraction(hi)
        if not lo < hi:
            raise ValueError(f"empty interval ({lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    @property
    def center(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, other: "RatInterval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_point(self, t) -> bool:
        t = Fraction(t)
        return self.lo < t <= self.hi

    def intersect(self, other: "RatInterval") -> "RatInterval | None":
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        return RatInterval(lo, hi) if lo < hi else None

    def __repr__(self):
        return f"({self.lo}, {self.hi}]"


class MatrixField:
    """Step function with one d x d matrix per grid cell."""

    def __init__(self, grid: GridSpec, values):
        v = np.asarray(values, dtype=np.complex128)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise ValueError(f"values must have shape (n, d, d), got {v.shape}")
        if v.shape[0] != grid.n_cells:
            raise ValueError(f"expected {grid.n_cells} cells, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite field values")
        self.grid = grid
        self.values = v
        self.values.setflags(write=False)

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def zeros(cls, grid: GridSpec, d: int) -> "MatrixField":
        return cls(grid, np.zeros((grid.n_cells, d, d), complex))

    @classmethod
    def constant(cls, grid: GridSpec, m) -> "MatrixField":
        m = matcore.as_matrix(m)
        return cls(grid, np.broadcast_to(m, (grid.n_cells, *m.shape)).copy())

    @classmethod
    def indicator(cls, grid: GridSpec, interval: RatInterval, m) -> "MatrixField":
        m = matcore.as_matrix(m)
        v = np.zeros((grid.n_cells, *m.shape), complex)
        a, b = _clip_coords(grid, interval)
        v[a:b] = m
        return cls(grid, v)

    def adjoint(self) -> "MatrixField":
        return MatrixField(self.grid, matcore.adjoint(self.values))

    def __add__(self, other):
        _check_same(self, other)
        return MatrixField(self.grid, self.values + other.values)

    def __sub__(self, other):
        _check_same(self, other)
        return MatrixField(self.grid, self.values - other.values)

    def __neg__(self):
        return MatrixField(self.grid, -self.values)

    def __mul__(self, c):
        return MatrixField(self.grid, self.values * c)

    __rmul__ = __mul__

    def right_mul(self, u) -> "MatrixField":
        return MatrixField(self.grid, self.values @ matcore.as_matrix(u))

    def left_mul(self, u) -> "MatrixField":
        return MatrixField(self.grid, matcore.as_matrix(u) @ self.values)

    def integral(self) -> np.ndarray:
        return self.values.sum(axis=0) * self.grid.h

    def jumps(self):
        """Edges e_k and jumps m_k - m_{k-1} (zero outside W), skipping zeros.

        A step function equals sum_k J_k * H(x - e_k); every Poisson-side
        formula in the package is written in this form.
        """
        v = self.values
        z = np.zeros((1, self.d, self.d), complex)
        jm = np.diff(np.concatenate([z, v, z]), axis=0)
        keep = np.any(jm != 0, axis=(1, 2))
        return self.grid.edges()[keep], jm[keep]

    def __repr__(self):
        return f"MatrixField(J={self.grid.J}, K={self.grid.K}, d={self.d})"


def _check_same(f: MatrixField, g: MatrixField) -> None:
    if f.grid != g.grid or f.d != g.d:
        raise ValueError("fields live on different grids or dimensions")


def _clip_coords(grid: GridSpec, interval: RatInterval) -> tuple[int, int]:
    a = grid.coord(interval.lo)
    b = grid.coord(interval.hi)
    return max(a, 0), min(b, grid.n_cells)


def interval_cells(grid: GridSpec, interval: RatInterval) -> tuple[int, int]:
    """Cell slice [a, b) of ``interval`` inside W; errors if off-grid or disjoint."""
    a, b = _clip_coords(grid, interval)
    if a >= b:
        raise ValueError(f"interval {interval} does not meet the window")
    return a, b


def mean_over(f: MatrixField, interval: RatInterval) -> np.ndarray:
    """(1/|I|) * integral of f over I; f is zero outside W."""
    a, b = interval_cells(f.grid, interval)
    length_cells = f.grid.coord(interval.hi) - f.grid.coord(interval.lo)
    return f.values[a:b].sum(axis=0) / length_cells


def centered_second_moment(f: MatrixField, interval: RatInterval) -> np.ndarray:
    """Integral over I of |f - f_I|^2 (column square), a psd matrix."""
    a, b = interval_cells(f.grid, interval)
    ua, ub = f.grid.coord(interval.lo), f.grid.coord(interval.hi)
    m = mean_over(f, interval)
    dev = f.values[a:b] - m
    tot = np.einsum("kji,kjl->il", dev.conj(), dev)
    # cells of I outside W carry value 0, deviation -m
    outside = (ub - ua) - (b - a)
    if outside:
        tot = tot + outside * (m.conj().T @ m)
    return matcore.hermitize(tot * f.grid.h, tol=1e-9)


def lp_mixed_norm(g: MatrixField, p: float) -> float:
    """(tr integral of g(t)^p dt)^(1/p) for a psd-valued field; p = inf is the sup norm."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return psd_values_norm(g.values, g.grid.h, p)


def psd_values_norm(vals: np.ndarray, h: float, p: float) -> float:
    """L^p(L^inf x M) norm of a stack of psd cell values with cell width h."""
    w, _ = matcore.eigh_psd(vals)
    if np.isinf(p):
        return float(w.max()) if w.size else 0.0
    tot = np.sum(w**p) * h
    if matcore._NORMALIZED_TRACE:
        tot /= vals.shape[-1]
    return float(tot ** (1.0 / p))


def weighted_column_norm(f: MatrixField, q: float) -> float:
    """Schatten-q norm of (integral |f(t)|^2 dt / (1 + t^2))^(1/2).

    The weight is integrated exactly on each cell.
    """
    e = f.grid.edges()
    wts = np.arctan(e[1:]) - np.arctan(e[:-1])
    sq = np.einsum("k,kji,kjl->il", wts, f.values.conj(), f.values)
    root = matcore.psd_sqrt(matcore.hermitize(sq, tol=1e-9))
    return float(matcore.schatten_norm(root, q))


def column_square_integral(f: MatrixField) -> np.ndarray:
    """Integral of f* f over W."""
    return matcore.hermitize(np.einsum("kji,kjl->il", f.values.conj(), f.values) * f.grid.h, tol=1e-9)


def column_norm(f: MatrixField, p: float) -> float:
    """||(integral |f|^2)^(1/2)||_p, the L^p(M; L^2_c) norm."""
    root = matcore.psd_sqrt(column_square_integral(f))
    return float(matcore.schatten_norm(root, p))


def pairing(phi: MatrixField, f: MatrixField) -> np.ndarray:
    """Integral of phi(t)* f(t) dt."""
    _check_same(phi, f)
    return np.einsum("kji,kjl->il", phi.values.conj(), f.values) * f.grid.h


def functional(phi: MatrixField, f: MatrixField) -> complex:
    """Scalar l_phi(f) = tau(integral phi* f)."""
    return complex(matcore.trace(pairing(phi, f)))


def l2_norm_sq(f: MatrixField) -> float:
    return float(np.sum(np.abs(f.values) ** 2) * f.grid.h / (f.d if matcore._NORMALIZED_TRACE else 1))


def point_value(f: MatrixField, x) -> np.ndarray:
    """Value at x (the cell (lo, hi] containing x); zero outside W."""
    i = f.grid.cell_of(x)
    if 0 <= i < f.n:
        return f.values[i].copy()
    return np.zeros((f.d, f.d), complex)


HEADER = "NCFA1"


def dumps(f: MatrixField) -> str:
    lines = [f"{HEADER} d={f.d} J={f.grid.J} K={f.grid.K}"]
    flat = np.stack([f.values.real, f.values.imag], axis=-1).reshape(f.n, -1)
    for i, row in enumerate(flat):
        lines.append(f"{i} " + " ".join(f"{x:.17g}" for x in row))
    return "\n".join(lines) + "\n"


def loads(text: str | Iterable[str]) -> MatrixField:
    lines = text.splitlines() if isinstance(text, str) else list(text)
    body = [ln.split("#", 1)[0].strip() for ln in lines]
    body = [ln for ln in body if ln]
    if not body:
        raise ValueError("empty field file")
    head = body[0].split()
    if head[0] != HEADER:
        raise ValueError(f"bad header {body[0]!r}")
    try:
        kv = dict(tok.split("=", 1) for tok in head[1:])
        d, J, K = int(kv["d"]), int(kv["J"]), int(kv["K"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"bad header {body[0]!r}") from exc
    grid = GridSpec(J, K)
    vals = np.zeros((grid.n_cells, d, d), complex)
    seen = np.zeros(grid.n_cells, bool)
    for ln in body[1:]:
        tok = ln.split()
        i = int(tok[0])
        nums = np.array([float(x) for x in tok[1:]])
        if nums.size != 2 * d * d or not 0 <= i < grid.n_cells:
            raise ValueError(f"bad cell line {ln[:40]!r}")
        pair = nums.reshape(d, d, 2)
        vals[i] = pair[..., 0] + 1j * pair[..., 1]
        seen[i] = True
    if not seen.all():
        raise ValueError(f"{int((~seen).sum())} cells missing")
    return MatrixField(grid, vals)


def save(f: MatrixField, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(f))


def load(path) -> MatrixField:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
