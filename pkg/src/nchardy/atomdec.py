"""Atoms: validation, normalization and a dyadic atomic decomposition.

An atom a on I vanishes off I, has integral 0 and satisfies
tau((int_I |a|^2)^(1/2)) <= |I|^(-1/2).  Mean-zero checks sum the cell values
with math.fsum, so they are exact: the decomposition only emits atoms whose
cell values are antisymmetric patterns, whose exact sums are 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import matcore
from .dyadic import Filtration, atom_cells, cell_atom_ids, cond_exp
from .gridfn import MatrixField, RatInterval, interval_cells


@dataclass(frozen=True)
class AtomCertificate:
    support: RatInterval
    support_ok: bool
    mean_norm: float
    size_value: float
    valid: bool


def _exact_sum(vals: np.ndarray) -> np.ndarray:
    """Correctly rounded sum over the first axis, entrywise."""
    flat = vals.reshape(vals.shape[0], -1)
    re = [math.fsum(flat[:, j].real) for j in range(flat.shape[1])]
    im = [math.fsum(flat[:, j].imag) for j in range(flat.shape[1])]
    return (np.array(re) + 1j * np.array(im)).reshape(vals.shape[1:])


def size_of(f: MatrixField, interval: RatInterval) -> float:
    """tau((int_I |f|^2)^(1/2))."""
    a, b = interval_cells(f.grid, interval)
    v = f.values[a:b]
    sq = matcore.hermitize(np.einsum("kji,kjl->il", v.conj(), v) * f.grid.h, tol=1e-9)
    return float(np.real(matcore.trace(matcore.psd_sqrt(sq))))


def normalize_atom(f: MatrixField, interval: RatInterval) -> MatrixField:
    """Scale f so that the size condition holds with equality (f = 0 stays 0)."""
    s = size_of(f, interval)
    if s == 0:
        return f
    return f * (float(interval.length) ** -0.5 / s)


def validate_atom(a: MatrixField, interval: RatInterval, mean_tol: float = 0.0,
                  size_tol: float = 1e-12) -> AtomCertificate:
    lo, hi = interval_cells(a.grid, interval)
    outside = np.concatenate([a.values[:lo], a.values[hi:]])
    support_ok = not np.any(outside != 0)
    mean = _exact_sum(a.values[lo:hi]) * a.grid.h
    mean_norm = float(np.max(np.abs(mean))) if mean.size else 0.0
    size_value = size_of(a, interval) * float(interval.length) ** 0.5
    valid = support_ok and mean_norm <= mean_tol and size_value <= 1 + size_tol
    return AtomCertificate(interval, support_ok, mean_norm, size_value, valid)


@dataclass(frozen=True)
class AtomTerm:
    lam: float
    atom: MatrixField
    cert: AtomCertificate


def _emit(grid, d, lo, hi, pattern_vals, out):
    """Normalize a raw atom given by its values on cells [lo, hi) and append it."""
    vals = np.zeros((grid.n_cells, d, d), complex)
    vals[lo:hi] = pattern_vals
    raw = MatrixField(grid, vals)
    iv = RatInterval(grid.point(lo), grid.point(hi))
    s = size_of(raw, iv)
    if s == 0:
        return
    length = float(iv.length)
    lam = s * length**0.5
    a = raw * (length**-0.5 / s)
    out.append(AtomTerm(lam, a, validate_atom(a, iv)))


def decompose(f: MatrixField, mean_tol: float = 1e-12) -> list[AtomTerm]:
    """Atoms from the D-martingale differences of f plus the finest-level residual.

    Top term: (m_L - m_R)/2 times (1 on the left half of W, -1 on the right).
    Level n (-J < n <= K): on each level-(n-1) D-atom, delta on the left child
    and -delta on the right child, delta = (mean_left - mean_right)/2.
    Residual f - E(f|D_K) on each 3-cell atom: alpha (1, -1, 0) + beta (1, 1, -2).
    """
    grid, d = f.grid, f.d
    scale = float(np.abs(f.values).sum()) * grid.h
    total = _exact_sum(f.values) * grid.h
    if np.max(np.abs(total)) > mean_tol * max(scale, 1e-300):
        raise ValueError("decompose needs a mean-zero field")
    out: list[AtomTerm] = []
    if not np.any(f.values != 0):
        return out
    for n in range(-grid.J, grid.K + 1):
        # children at level n inside their parent atoms at level n - 1
        e = cond_exp(f, Filtration.D, n).values
        s = atom_cells(grid, n)
        ids = cell_atom_ids(grid, Filtration.D, n)
        first = np.flatnonzero(np.diff(np.concatenate([[ids[0] - 1], ids])))
        means = e[first]
        if n == -grid.J:
            pairs = [(0, 1)]
        else:
            pairs = [(k, k + 1) for k in range(0, means.shape[0], 2)]
        for k, k1 in pairs:
            delta = (means[k] - means[k1]) / 2
            if not np.any(delta != 0):
                continue
            lo = int(first[k])
            pat = np.concatenate([np.repeat(delta[None], s, 0), np.repeat(-delta[None], s, 0)])
            _emit(grid, d, lo, lo + 2 * s, pat, out)
    v = f.values.reshape(-1, 3, d, d)
    alpha = (v[:, 0] - v[:, 1]) / 2
    beta = (v[:, 0] + v[:, 1] - 2 * v[:, 2]) / 6
    for k in range(v.shape[0]):
        for coef, w in ((alpha[k], (1.0, -1.0, 0.0)), (beta[k], (1.0, 1.0, -2.0))):
            if not np.any(coef != 0):
                continue
            pat = np.stack([c * coef for c in w])
            _emit(grid, d, 3 * k, 3 * k + 3, pat, out)
    return out


def reconstruct(terms: list[AtomTerm], like: MatrixField) -> MatrixField:
    acc = np.zeros_like(like.values)
    for t in terms:
        acc += t.lam * t.atom.values
    return MatrixField(like.grid, acc)


def atom_hardy_norm(a: MatrixField, refine: int = 1) -> float:
    """||a||_{H_c^1} on the default cone net."""
    from .squarefn import default_cone, hardy_norm

    if not np.any(a.values != 0):
        return 0.0
    return hardy_norm(a, 1.0, "c", default_cone(a, refine))
