"""The cone embedding Phi, the projection Psi, and Fourier multipliers.

Phi(f)(c, t) = grad f(x_c + t, y_c) on a cone net and the t-cells of a
widened grid; Psi pairs cone samples with the gradient kernel and returns a
step field on the function grid.  Psi Phi reproduces mean-zero fields up to
the quadrature floor of the net.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .coneops import ConeOperator
from .gridfn import GridSpec, MatrixField, l2_norm_sq
from .nets import ConeGrid, cone_net
from .squarefn import PsdField, t_grid


@dataclass
class ConeField:
    """Samples h(c, t) with two gradient slots, shape (cells, t-cells, 2, d, d)."""

    net: ConeGrid
    tgrid: GridSpec
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 5 or v.shape[:3] != (self.net.size, self.tgrid.n_cells, 2) or v.shape[3] != v.shape[4]:
            raise ValueError("cone field values must have shape (cells, t-cells, 2, d, d)")
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite cone field")

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    def square(self) -> PsdField:
        """sum_c area_c |h(c, t)|^2 per t-cell (slots summed)."""
        s = np.einsum("c,ctsji,ctsjl->til", self.net.area, self.values.conj(), self.values, optimize=True)
        return PsdField(self.tgrid, matcore.hermitize(s, tol=1e-9))

    def norm(self, p: float) -> float:
        return self.square().norm(p)

    def inner(self, other: "ConeField") -> complex:
        """tr sum_c area_c h_tcell sum_t h(c, t)* g(c, t)."""
        s = np.einsum("c,ctsji,ctsij->", self.net.area, self.values.conj(), other.values, optimize=True)
        return complex(s * self.tgrid.h)

    def sup_mixed_norm(self) -> float:
        """sup over t-cells of ||(sum_c area_c |h(c, t)|^2)^(1/2)||."""
        return self.square().norm(np.inf)


def operator_for(grid: GridSpec, net: ConeGrid | None = None, pad: int = 1, refine: int = 1) -> ConeOperator:
    net = cone_net(grid.J, grid.K, refine, 0.0) if net is None else net
    return ConeOperator(grid, net, t_grid(grid, pad))


def phi_embed(f: MatrixField, net: ConeGrid | None = None, pad: int = 1, refine: int = 1) -> ConeField:
    op = operator_for(f.grid, net, pad, refine)
    return ConeField(op.cone, op.tgrid, f.grid, op.phi(f.values))


def psi_project(h: ConeField, average: bool = False) -> MatrixField:
    """Psi(h) at the function-grid cell centers (cell averages if ``average``)."""
    op = ConeOperator(h.grid, h.net, h.tgrid)
    return MatrixField(h.grid, op.psi(h.values, average))


def psiphi(f: MatrixField, refine: int = 1, pad: int = 1, average: bool = False) -> MatrixField:
    op = operator_for(f.grid, None, pad, refine)
    return MatrixField(f.grid, op.psi_phi(f.values, average))


def psiphi_block_basis(op: ConeOperator, block: int, average: bool = False) -> np.ndarray:
    """Psi Phi of the indicators of consecutive blocks of ``block`` cells, shape (blocks, n).

    Psi Phi acts entrywise and linearly, so all indicators go through one
    call packed as the entries of a D x D field.
    """
    n = op.n
    if block < 1 or n % block:
        raise ValueError("block must divide the number of cells")
    nb = n // block
    D = int(np.ceil(np.sqrt(nb)))
    vals = np.zeros((n, D * D))
    for b in range(nb):
        vals[b * block:(b + 1) * block, b] = 1.0
    out = op.psi_phi(vals.reshape(n, D, D).astype(complex), average)
    return out.reshape(n, D * D)[:, :nb].real.T.copy()


def psiphi_blocks(basis: np.ndarray, f: MatrixField) -> MatrixField:
    """Psi Phi f for f constant on the blocks of ``basis``."""
    nb, n = basis.shape
    block = n // nb
    v = f.values.reshape(nb, block, f.d, f.d)
    if np.any(v != v[:, :1]):
        raise ValueError("field is not constant on the basis blocks")
    return MatrixField(f.grid, np.einsum("bn,bij->nij", basis, v[:, 0]))


def psiphi_identity_error(f: MatrixField, refine: int = 1, pad: int = 1, average: bool = False,
                          mean_tol: float = 1e-9) -> float:
    """||Psi Phi f - f||_2 / ||f||_2 (0 for f = 0)."""
    nf = l2_norm_sq(f)
    if nf == 0:
        return 0.0
    scale = np.abs(f.values).sum() * f.grid.h
    if np.abs(f.integral()).max() > mean_tol * scale:
        raise ValueError("psiphi_identity_error needs a mean-zero field")
    r = psiphi(f, refine, pad, average)
    return float(np.sqrt(l2_norm_sq(r - f) / nf))


# Fourier multipliers on the window viewed as a torus ---------------------

def hilbert_symbol(n: int) -> np.ndarray:
    """-i sign(xi) in numpy frequency order; the Nyquist bin counts as negative."""
    return -1j * np.sign(np.fft.fftfreq(n))


def load_symbol(path, n: int) -> np.ndarray:
    """Read 'index value' lines (value as a complex literal or 're im'); indices may be negative."""
    m = np.full(n, np.nan, complex)
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            tok = ln.split()
            k = int(tok[0])
            if len(tok) == 2:
                val = complex(tok[1].replace("i", "j"))
            elif len(tok) == 3:
                val = complex(float(tok[1]), float(tok[2]))
            else:
                raise ValueError(f"bad symbol line {ln!r}")
            if not -n <= k < n:
                raise ValueError(f"frequency index {k} outside the transform length {n}")
            m[k % n] = val
    if np.isnan(m.real).any():
        raise ValueError(f"symbol file gives {int((~np.isnan(m.real)).sum())} of {n} frequencies")
    return m


def multiplier_apply(f: MatrixField, m) -> MatrixField:
    """Entrywise DFT along the cells, multiply by m, inverse DFT.

    ``m`` is "hilbert", an array of length n in numpy frequency order, or a
    callable of the integer frequency index.
    """
    n = f.n
    if isinstance(m, str):
        if m != "hilbert":
            raise ValueError(f"unknown multiplier preset {m!r}")
        sym = hilbert_symbol(n)
    elif callable(m):
        sym = np.asarray(m(np.fft.fftfreq(n, 1.0 / n).astype(int)), complex)
    else:
        sym = np.asarray(m, complex)
    if sym.shape != (n,):
        raise ValueError(f"symbol length {sym.shape} does not match {n} cells")
    fh = np.fft.fft(f.values, axis=0)
    return MatrixField(f.grid, np.fft.ifft(fh * sym[:, None, None], axis=0))


def hilbert_kernel(n: int) -> np.ndarray:
    """Closed form of the inverse DFT of hilbert_symbol(n), n even."""
    if n % 2:
        raise ValueError("n must be even")
    k = np.arange(n)
    ker = np.zeros(n, complex)
    odd = k % 2 == 1
    ker[odd] = 2.0 / n / np.tan(np.pi * k[odd] / n)
    ker += 1j * (-1.0) ** k / n
    return ker


# duality harness ----------------------------------------------------------

def duality_constant_harness(pairs, q: float | None = None, p_hardy: float = 1.0, refine: int = 1) -> dict:
    """Ratios |tau int phi* f| / (||phi||_BMO ||f||_{H_c^p}) over (phi, f) pairs.

    With ``q`` given (p < 2, q its conjugate) the BMO^q bound pair replaces
    BMO_c; the ratio uses the lower BMO^q value, which can only enlarge it.
    """
    from .bmo import bmo_norm, bmo_q_norm
    from .gridfn import functional
    from .squarefn import default_cone, hardy_norm

    ratios = []
    for phi, f in pairs:
        num = abs(functional(phi, f))
        if q is None:
            b = bmo_norm(phi).value
        else:
            b = bmo_q_norm(phi, q).lower
        hn = hardy_norm(f, p_hardy, "c", default_cone(f, refine))
        den = b * hn
        ratios.append(0.0 if num == 0 else (num / den if den > 0 else np.inf))
    if not ratios:
        raise ValueError("degenerate ensemble")
    r = np.array(ratios)
    return {"max": float(r.max()), "mean": float(r.mean()), "count": int(r.size), "ratios": r}
