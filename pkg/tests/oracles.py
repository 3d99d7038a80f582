"""Independent reference computations for scalar (d = 1) fields.

Nothing here calls into the package's quadrature: the Poisson extension is
summed cell by cell in arctan form, gradients come from central differences
of that extension, and integrals use scipy or Gauss-Legendre rules.
"""

from fractions import Fraction

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate


def cell_data(f):
    """(left ends, right ends, scalar values) of a d = 1 field."""
    e = f.grid.edges()
    return e[:-1], e[1:], f.values[:, 0, 0].real


def poisson_ext(f, x, y):
    """u(x, y) = sum_i f_i (arctan((x - a_i)/y) - arctan((x - b_i)/y)) / pi."""
    a, b, v = cell_data(f)
    x = np.asarray(x, float)[..., None]
    y = np.asarray(y, float)[..., None]
    return np.sum(v * (np.arctan((x - a) / y) - np.arctan((x - b) / y)), axis=-1) / np.pi


def grad_fd(f, x, y, rel=1e-5):
    """Central-difference gradient of poisson_ext; returns (ux, uy)."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    eps = rel * y
    ux = (poisson_ext(f, x + eps, y) - poisson_ext(f, x - eps, y)) / (2 * eps)
    uy = (poisson_ext(f, x, y + eps) - poisson_ext(f, x, y - eps)) / (2 * eps)
    return ux, uy


def _log_bins(y_lo, y_hi, per_octave):
    n = int(np.ceil(per_octave * np.log2(y_hi / y_lo)))
    return y_lo * (y_hi / y_lo) ** (np.arange(n + 1) / n)


def lusin_sq(f, t, y_lo=2.0**-14, y_hi=2.0**10, per_octave=12, nx=48, ny=4):
    """S^2(t) = integral over |x| < y of |grad u(t + x, y)|^2, dense Gauss rule."""
    gx, wx = leggauss(nx)
    gy, wy = leggauss(ny)
    edges = _log_bins(y_lo, y_hi, per_octave)
    tot = 0.0
    for y0, y1 in zip(edges[:-1], edges[1:]):
        ys = 0.5 * (y1 - y0) * gy + 0.5 * (y1 + y0)
        for yv, wyv in zip(ys, wy * 0.5 * (y1 - y0)):
            xs = t + yv * gx
            ux, uy = grad_fd(f, xs, np.full(xs.size, yv))
            tot += wyv * yv * np.sum(wx * (ux**2 + uy**2))
    return tot


def g_sq(f, t, y_hi=2.0**12):
    """G^2(t) = integral of |grad u(t, y)|^2 y dy, scipy quad in log y."""

    def integrand(s):
        y = np.exp(s)
        ux, uy = grad_fd(f, np.array([t]), np.array([y]))
        return float(ux[0] ** 2 + uy[0] ** 2) * y * y

    val, _ = integrate.quad(integrand, np.log(1e-9), np.log(y_hi), limit=400)
    return val


def carleson_box(f, lo, hi):
    """(1/|I|) int_I int_0^|I| |grad u|^2 y dy dx, nested scipy quad."""
    length = hi - lo
    _, _, v = cell_data(f)
    a, b, _ = cell_data(f)
    jumps = np.concatenate([a[np.diff(np.concatenate([[0.0], v])) != 0], b[np.diff(np.concatenate([v, [0.0]])) != 0]])
    pts = [p for p in np.unique(jumps) if lo < p < hi]

    def grad_sq(x, y):
        # closed form per cell: d_x = sum f_i (P(x - a) - P(x - b)), d_y from the conjugate kernel
        da = x - a
        db = x - b
        ux = np.sum(v * (y / (da**2 + y**2) - y / (db**2 + y**2))) / np.pi
        uy = np.sum(v * (-da / (da**2 + y**2) + db / (db**2 + y**2))) / np.pi
        return ux * ux + uy * uy

    def row(y):
        val, _ = integrate.quad(lambda x: grad_sq(x, y), lo, hi, points=pts or None, limit=400)
        return val * y

    val, _ = integrate.quad(row, 0.0, length, limit=200, epsabs=1e-10)
    return val / length


def tent_sq(F, t, y_lo=1e-6, y_hi=2.0**12, per_octave=8, nx=32):
    """A^2(t) = integral over |x| < y of |F(t + x, y)|^2 dx dy / y^2 for scalar F."""
    gx, wx = leggauss(nx)
    gy, wy = leggauss(4)
    edges = _log_bins(y_lo, y_hi, per_octave)
    tot = 0.0
    for y0, y1 in zip(edges[:-1], edges[1:]):
        ys = 0.5 * (y1 - y0) * gy + 0.5 * (y1 + y0)
        for yv, wyv in zip(ys, wy * 0.5 * (y1 - y0)):
            vals = F(t + yv * gx, np.full(nx, yv))
            tot += wyv * yv * np.sum(wx * np.abs(vals) ** 2) / yv**2
    return tot


def bmo_brute(values, h):
    """sup over all cell intervals of ||(1/|I|) int_I |phi - phi_I|^2||^(1/2), by direct loops."""
    n = values.shape[0]
    best = 0.0
    for a in range(n):
        for b in range(a + 1, n + 1):
            blk = values[a:b]
            m = blk.mean(axis=0)
            dev = blk - m
            sq = np.einsum("kji,kjl->il", dev.conj(), dev) / (b - a)
            best = max(best, float(np.linalg.eigvalsh((sq + sq.conj().T) / 2)[-1]))
    return np.sqrt(best)


def dyadic_atoms(J, K, shifted):
    """All atoms of D (or D') of levels -J..K inside (-2^J, 2^J] as Fraction pairs."""
    out = []
    W = Fraction(2) ** J
    for n in range(-J, K + 1):
        s = Fraction(2) ** -n
        off = Fraction(0) if not shifted else (Fraction(1, 3) if n % 2 == 0 else Fraction(2, 3))
        k = int(np.floor(float(-W / s - off))) - 1
        while True:
            lo, hi = (k + off) * s, (k + 1 + off) * s
            if lo >= W:
                break
            if lo >= -W and hi <= W:
                out.append((lo, hi))
            k += 1
    return out


def scalar_dyadic_bmo(f, shifted):
    """sup over atoms of the scalar variance, square-rooted, from exact cell ranges."""
    g = f.grid
    v = f.values[:, 0, 0]
    best = 0.0
    for lo, hi in dyadic_atoms(g.J, g.K, shifted):
        a, b = g.coord(lo), g.coord(hi)
        blk = v[a:b]
        best = max(best, float(np.mean(np.abs(blk - blk.mean()) ** 2)))
    return np.sqrt(best)


def square_wave_hilbert(theta):
    """Periodic Hilbert transform of sign(sin theta): (2/pi) log|tan(theta/2)|."""
    return 2.0 / np.pi * np.log(np.abs(np.tan(theta / 2)))
