"""FFT-backed linear maps between step fields and samples on a cone net.

For a cone cell (x_c, y_c) and t-grid centers t_i, the gradient samples
grad f(x_c + t_i, y_c) = sum_k J_k Q(x_c + t_i - e_k) depend on i - k only,
so each cone cell is one discrete convolution.  The same structure gives the
projection Psi, with the kernel integrated exactly over t-cells.
"""

from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from .gridfn import GridSpec
from .nets import ConeGrid

_CELLS_PER_BATCH = 32


def _jumps(vals: np.ndarray) -> np.ndarray:
    z = np.zeros((1, *vals.shape[1:]), vals.dtype)
    return np.diff(np.concatenate([z, vals, z]), axis=0)


def _jumps_adjoint(gj: np.ndarray) -> np.ndarray:
    # adjoint of the jump map: value i feeds jump i (+1) and jump i+1 (-1)
    return gj[:-1] - gj[1:]


def _pk(u, y):
    return y / (np.pi * (u * u + y * y))


def _gk(u, y):
    return -u / (np.pi * (u * u + y * y))


def _ak(u, y):
    # antiderivative in u of P_y
    return np.arctan2(u, y) / np.pi


def _bk(u, y):
    # antiderivative in u of G_y
    return -np.log(u * u + y * y) / (2 * np.pi)


class ConeOperator:
    """Phi / Psi pair for a function grid, a t-grid and a cone net."""

    def __init__(self, grid: GridSpec, cone: ConeGrid, tgrid: GridSpec):
        if tgrid.K != grid.K or tgrid.J < grid.J:
            raise ValueError("t-grid must share the cell width and contain the window")
        self.grid, self.cone, self.tgrid = grid, cone, tgrid
        self.n = grid.n_cells
        self.nt = tgrid.n_cells
        self.h = grid.h
        self.off = (2**tgrid.J - 2**grid.J) * 3 * 2**grid.K  # t-grid cells left of W
        # forward: index m = i - k runs over [-n, nt - 1]
        self.m_lo = -self.n
        self.len_fwd = self.nt + self.n
        self.L = sfft.next_fast_len(self.len_fwd + self.n + 1)
        # projection: index j = m - k with m in [0, n), k in [0, nt]
        self.j_lo = -self.nt
        self.len_psi = self.n + self.nt
        self.Lp = sfft.next_fast_len(self.len_psi + self.nt + 1)
        self._fwd_hat = None
        self._psi_hat = {}

    @property
    def cells(self) -> int:
        return self.cone.size

    def _fwd_kernels(self):
        if self._fwd_hat is None:
            m = np.arange(self.m_lo, self.m_lo + self.len_fwd)
            # t_i - e_k = (i - k - off + 1/2) h
            u = self.cone.x[:, None] + (m[None, :] - self.off + 0.5) * self.h
            y = self.cone.y[:, None]
            ker = np.stack([_pk(u, y), _gk(u, y)], axis=1)  # (C, 2, len)
            self._fwd_hat = sfft.rfft(ker, n=self.L, axis=-1)
        return self._fwd_hat

    def _jump_spectra(self, vals: np.ndarray):
        d = vals.shape[-1]
        jm = _jumps(np.asarray(vals, complex)).reshape(self.n + 1, d * d)
        return sfft.rfft(jm.real, n=self.L, axis=0), sfft.rfft(jm.imag, n=self.L, axis=0)

    def phi_batches(self, vals: np.ndarray, batch: int = _CELLS_PER_BATCH):
        """Yield (cell slice, gradient samples of shape (B, nt, 2, d, d))."""
        d = vals.shape[-1]
        khat = self._fwd_kernels()
        jr, ji = self._jump_spectra(vals)
        # full-convolution index of (m, k) is (m - m_lo) + k and m + k = i
        first = -self.m_lo
        for a in range(0, self.cells, batch):
            b = min(a + batch, self.cells)
            kh = khat[a:b][..., None]
            re = sfft.irfft(kh * jr, n=self.L, axis=-2)[:, :, first:first + self.nt]
            im = sfft.irfft(kh * ji, n=self.L, axis=-2)[:, :, first:first + self.nt]
            blk = np.moveaxis(re + 1j * im, 1, 2)
            yield slice(a, b), blk.reshape(b - a, self.nt, 2, d, d)

    def phi(self, vals: np.ndarray) -> np.ndarray:
        """Gradient samples grad f(x_c + t_i, y_c), shape (C, nt, 2, d, d)."""
        d = vals.shape[-1]
        out = np.empty((self.cells, self.nt, 2, d, d), complex)
        for sl, blk in self.phi_batches(vals):
            out[sl] = blk
        return out

    def phi_adjoint_accumulate(self, acc, sl: slice, samples: np.ndarray):
        """Add one batch of cone cells to the adjoint spectra ``acc`` (created if None)."""
        B, nt, _, d, _ = samples.shape
        if acc is None:
            acc = [np.zeros((self.L // 2 + 1, d * d), complex) for _ in range(2)]
        khat = self._fwd_kernels()
        blk = np.moveaxis(samples.reshape(B, nt, 2, d * d), 2, 1)
        # sample i sits at full-convolution index i - m_lo; correlate with the kernel
        pad = np.zeros((B, 2, self.L, d * d), complex)
        pad[:, :, -self.m_lo:-self.m_lo + nt] = blk
        kc = np.conj(khat[sl])[..., None]
        acc[0] += np.sum(kc * sfft.rfft(pad.real, axis=-2), axis=(0, 1))
        acc[1] += np.sum(kc * sfft.rfft(pad.imag, axis=-2), axis=(0, 1))
        return acc

    def phi_adjoint_finish(self, acc, d: int) -> np.ndarray:
        gr = sfft.irfft(acc[0], n=self.L, axis=0)[: self.n + 1]
        gi = sfft.irfft(acc[1], n=self.L, axis=0)[: self.n + 1]
        return _jumps_adjoint((gr + 1j * gi).reshape(self.n + 1, d, d))

    def phi_adjoint(self, samples: np.ndarray) -> np.ndarray:
        """Exact adjoint of ``phi`` for the real inner product Re tr sum x* y."""
        C, d = samples.shape[0], samples.shape[-1]
        acc = None
        for a in range(0, C, _CELLS_PER_BATCH):
            sl = slice(a, min(a + _CELLS_PER_BATCH, C))
            acc = self.phi_adjoint_accumulate(acc, sl, samples[sl])
        return self.phi_adjoint_finish(acc, d)

    def _psi_kernels(self, average: bool):
        if average not in self._psi_hat:
            j = np.arange(self.j_lo, self.j_lo + self.len_psi)
            y = self.cone.y[:, None]
            if not average:
                # s_m - e'_k - x_c with j = m - k
                v = (j[None, :] + self.off + 0.5) * self.h - self.cone.x[:, None]
                ker = np.stack([-_pk(v, y), _gk(v, y)], axis=1)
            else:
                v0 = (j[None, :] + self.off) * self.h - self.cone.x[:, None]
                v1 = v0 + self.h
                ker = np.stack([-(_ak(v1, y) - _ak(v0, y)), _bk(v1, y) - _bk(v0, y)], axis=1) / self.h
            self._psi_hat[average] = sfft.rfft(ker, n=self.Lp, axis=-1)
        return self._psi_hat[average]

    def psi_accumulate(self, acc, sl: slice, samples: np.ndarray, average: bool = False):
        """Add the spectra of one batch of cone cells to ``acc`` (created if None)."""
        B, nt, _, d, _ = samples.shape
        if acc is None:
            acc = [np.zeros((self.Lp // 2 + 1, d * d), complex) for _ in range(2)]
        khat = self._psi_kernels(average)[sl][..., None]
        w = self.cone.area[sl][:, None, None, None]
        blk = np.moveaxis(samples.reshape(B, nt, 2, d * d), 2, 1) * w
        # jumps of the t-step function, zero outside the t-window
        dj = np.diff(np.pad(blk, ((0, 0), (0, 0), (1, 1), (0, 0))), axis=2)
        acc[0] += np.sum(khat * sfft.rfft(dj.real, n=self.Lp, axis=-2), axis=(0, 1))
        acc[1] += np.sum(khat * sfft.rfft(dj.imag, n=self.Lp, axis=-2), axis=(0, 1))
        return acc

    def psi_finish(self, acc, d: int) -> np.ndarray:
        first = -self.j_lo
        gr = sfft.irfft(acc[0], n=self.Lp, axis=0)[first:first + self.n]
        gi = sfft.irfft(acc[1], n=self.Lp, axis=0)[first:first + self.n]
        return (gr + 1j * gi).reshape(self.n, d, d)

    def psi(self, samples: np.ndarray, average: bool = False) -> np.ndarray:
        """Projection of cone samples h(c, i), constant on t-cells, to the function grid.

        Psi(h)(s) = sum_c area_c sum_i h(c, i) . integral over t-cell i of
        Q_{y_c}(x_c + t - s) dt, at s-cell centers or as s-cell averages.
        """
        d = samples.shape[-1]
        acc = None
        for a in range(0, samples.shape[0], _CELLS_PER_BATCH):
            sl = slice(a, min(a + _CELLS_PER_BATCH, samples.shape[0]))
            acc = self.psi_accumulate(acc, sl, samples[sl], average)
        return self.psi_finish(acc, d)

    def psi_phi(self, vals: np.ndarray, average: bool = False) -> np.ndarray:
        """Psi(Phi(f)) streamed over cone-cell batches."""
        d = vals.shape[-1]
        acc = None
        for sl, blk in self.phi_batches(vals):
            acc = self.psi_accumulate(acc, sl, blk, average)
        return self.psi_finish(acc, d)

    def square_sum(self, vals: np.ndarray, row: bool = False) -> np.ndarray:
        """sum_c area_c |grad f(x_c + t, y_c)|^2 per t (column, or row if ``row``)."""
        d = vals.shape[-1]
        out = np.zeros((self.nt, d, d), complex)
        for sl, g in self.phi_batches(vals):
            w = self.cone.area[sl]
            if row:
                out += np.einsum("c,ctsij,ctslj->til", w, g, g.conj(), optimize=True)
            else:
                out += np.einsum("c,ctsji,ctsjl->til", w, g.conj(), g, optimize=True)
        return out
