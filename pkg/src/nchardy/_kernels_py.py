"""Pure numpy jump-sum kernels (fallback when the compiled core is missing).

All kernels take point arrays ``xs, ys`` (same length), jump positions
``edges`` (length nj) and real jump coefficients ``coef`` of shape (nj, m),
and return sums over jumps of coef[k] * kernel(x - e_k, y).
"""

import numpy as np

_CHUNK = 1 << 21  # kernel-matrix entries per block


def _blocks(npts, nj):
    step = max(1, _CHUNK // max(nj, 1))
    for a in range(0, npts, step):
        yield a, min(a + step, npts)


def grad_sum(xs, ys, edges, coef):
    """Return (npts, 2, m): sums of P_y(x-e) and G_y(x-e) = -(x-e)/(pi((x-e)^2+y^2))."""
    xs = np.ascontiguousarray(xs, float)
    ys = np.ascontiguousarray(ys, float)
    out = np.zeros((xs.size, 2, coef.shape[1]))
    if edges.size == 0:
        return out
    for a, b in _blocks(xs.size, edges.size):
        u = xs[a:b, None] - edges[None, :]
        y = ys[a:b, None]
        r = 1.0 / (np.pi * (u * u + y * y))
        out[a:b, 0] = (y * r) @ coef
        out[a:b, 1] = (-u * r) @ coef
    return out


def ext_sum(xs, ys, edges, coef):
    """Return (npts, m): sums of arctan((x - e)/y)/pi."""
    xs = np.ascontiguousarray(xs, float)
    ys = np.ascontiguousarray(ys, float)
    out = np.zeros((xs.size, coef.shape[1]))
    if edges.size == 0:
        return out
    for a, b in _blocks(xs.size, edges.size):
        u = xs[a:b, None] - edges[None, :]
        out[a:b] = (np.arctan2(u, ys[a:b, None]) / np.pi) @ coef
    return out

