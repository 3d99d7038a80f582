"""Poisson extension of step functions, its gradient and the Green identity.

A step field is handled through its jumps: with edges e_k and jumps J_k,

    f(x, y)     = sum_k J_k arctan((x - e_k) / y) / pi
    d_x f(x, y) = sum_k J_k P_y(x - e_k)
    d_y f(x, y) = sum_k J_k G_y(x - e_k),   G_y(u) = -u / (pi (u^2 + y^2))

which is the per-cell arctan / rational closed form regrouped by edge.
"""

from __future__ import annotations

import numpy as np

from . import _backend, matcore
from .gridfn import MatrixField, column_square_integral, l2_norm_sq
from .nets import ConeGrid, halfplane_net


def _check_y(y):
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise ValueError("y must be > 0")
    return y


def poisson_kernel(x, y):
    """P_y(x) = y / (pi (x^2 + y^2))."""
    y = _check_y(y)
    x = np.asarray(x, dtype=float)
    return y / (np.pi * (x * x + y * y))


def grad_kernel(x, y):
    """(d/dx P_y(x), d/dy P_y(x))."""
    y = _check_y(y)
    x = np.asarray(x, dtype=float)
    r2 = x * x + y * y
    return -2.0 * x * y / (np.pi * r2 * r2), (x * x - y * y) / (np.pi * r2 * r2)


def _coef(jm: np.ndarray) -> np.ndarray:
    # complex (nj, d, d) -> real (nj, 2 d^2), interleaved re/im
    nj, d = jm.shape[0], jm.shape[-1]
    return np.ascontiguousarray(jm, dtype=complex).reshape(nj, d * d).view(float)


def _uncoef(out: np.ndarray, d: int) -> np.ndarray:
    return np.ascontiguousarray(out).view(complex).reshape(*out.shape[:-1], d, d)


def extend_many(f: MatrixField, xs, ys) -> np.ndarray:
    """Poisson extension at many points; returns (npts, d, d)."""
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = _check_y(np.broadcast_to(ys, xs.shape))
    e, jm = f.jumps()
    out = _backend.ext_sum(xs, ys, e, _coef(jm))
    # sum_k J_k arctan(.)/pi plus the constant (sum_k J_k)/2 = 0 for fields vanishing outside W
    return _uncoef(out, f.d)


def extend(f: MatrixField, x: float, y: float) -> np.ndarray:
    """f(x, y) = integral of P_y(x - s) f(s) ds."""
    return extend_many(f, [x], [y])[0]


def gradient_many(f: MatrixField, xs, ys) -> np.ndarray:
    """Gradient at many points; returns (npts, 2, d, d) with slots (d_x, d_y)."""
    xs = np.atleast_1d(np.asarray(xs, float))
    ys = _check_y(np.broadcast_to(ys, xs.shape))
    e, jm = f.jumps()
    out = _backend.grad_sum(xs, ys, e, _coef(jm))
    return _uncoef(out, f.d)


def gradient(f: MatrixField, x: float, y: float):
    """(d_x f, d_y f) at one point."""
    g = gradient_many(f, [x], [y])[0]
    return g[0], g[1]


def grad_square(g: np.ndarray) -> np.ndarray:
    """|grad|^2 = dx* dx + dy* dy for a (..., 2, d, d) gradient stack."""
    return matcore.sq(g[..., 0, :, :]) + matcore.sq(g[..., 1, :, :])


def grad_product(g1: np.ndarray, g2: np.ndarray) -> np.ndarray:
    """Slot product g1(1) g2(1) + g1(2) g2(2)."""
    return g1[..., 0, :, :] @ g2[..., 0, :, :] + g1[..., 1, :, :] @ g2[..., 1, :, :]


def _net_for(f: MatrixField, trunc: ConeGrid | None, refine: int = 1) -> ConeGrid:
    net = trunc if trunc is not None else halfplane_net(f.grid.J, f.grid.K, refine)
    if net.kind != "halfplane":
        raise ValueError("the Green identity needs a half-plane net")
    if not net.y_max > net.y_min > 0:
        raise ValueError("degenerate truncation")
    return net


def energy_density(f: MatrixField, net: ConeGrid) -> np.ndarray:
    """tr |grad f|^2 * y * area on every net cell."""
    g = gradient_many(f, net.x, net.y)
    dens = np.sum(np.abs(g) ** 2, axis=(1, 2, 3))
    if matcore._NORMALIZED_TRACE:
        dens = dens / f.d
    return dens * net.y * net.area


def green_energy(f: MatrixField, trunc: ConeGrid | None = None):
    """(2 tr of the y-weighted gradient energy over the net, tr integral |f|^2)."""
    net = _net_for(f, trunc)
    energy = 2.0 * float(np.sum(energy_density(f, net)))
    return energy, l2_norm_sq(f)


def strip_energy(f: MatrixField, y_min: float) -> float:
    """Exact energy 2 tr of the y-weighted gradient energy in 0 < y < y_min.

    Uses the jump form: the x-integral of |grad f|^2 at height y equals
    2 sum_{k,l} tr(J_k* J_l) P_{2y}(e_k - e_l), integrated in y in closed form.
    """
    e, jm = f.jumps()
    if e.size == 0:
        return 0.0
    gram = np.einsum("kab,lab->kl", jm.conj(), jm).real
    c = np.abs(e[:, None] - e[None, :])
    Y = y_min
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(c > 0, Y - 0.5 * c * np.arctan2(2 * Y, c), Y)
    val = float(np.sum(gram * t) * 2.0 / np.pi)
    return val / f.d if matcore._NORMALIZED_TRACE else val


def green_report(f: MatrixField, trunc: ConeGrid | None = None) -> dict:
    net = _net_for(f, trunc)
    energy, l2sq = green_energy(f, net)
    mean = f.integral()
    return {
        "energy": energy,
        "l2sq": l2sq,
        "rel_error": abs(energy - l2sq) / l2sq if l2sq > 0 else 0.0,
        "strip_estimate": strip_energy(f, net.y_min),
        "mean_zero": bool(np.allclose(mean, 0, atol=1e-12 * max(1.0, np.abs(f.values).max()))),
        "net": net.describe(),
    }


def polarized_green(f: MatrixField, g: MatrixField, trunc: ConeGrid | None = None):
    """(2 * net sum of grad f . grad g * y, integral f g) with the slot product."""
    if f.grid != g.grid or f.d != g.d:
        raise ValueError("fields live on different grids or dimensions")
    net = _net_for(f, trunc)
    gf = gradient_many(f, net.x, net.y)
    gg = gradient_many(g, net.x, net.y)
    wts = 2.0 * net.y * net.area
    lhs = np.einsum("n,nab->ab", wts, grad_product(gf, gg))
    rhs = np.einsum("nab,nbc->ac", f.values, g.values) * f.grid.h
    return lhs, rhs


def column_energy(f: MatrixField, trunc: ConeGrid | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Matrix (untraced) version: 2 * net sum of |grad f|^2 y, and integral |f|^2."""
    net = _net_for(f, trunc)
    g = gradient_many(f, net.x, net.y)
    lhs = np.einsum("n,nab->ab", 2.0 * net.y * net.area, grad_square(g))
    return lhs, column_square_integral(f)
