"""Lusin area integrals, g-functions, the tent functional and Hardy norms.

Square functions are stored squared (psd matrices per t); square roots are
only taken when a norm is formed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matcore
from .gridfn import GridSpec, MatrixField, psd_values_norm
from .halfplane import gradient_many
from .nets import FLOOR_OCTAVES, ConeGrid, cone_net

_POINTS_PER_BLOCK = 1 << 16


@dataclass
class PsdField:
    """psd matrices sampled at the cell centers of ``grid``."""

    grid: GridSpec
    values: np.ndarray

    @property
    def d(self) -> int:
        return self.values.shape[-1]

    def norm(self, p: float) -> float:
        """(tr integral (S^2)^(p/2))^(1/p): the L^p norm of the square root."""
        return _root_norm(self.values, self.grid.h, p)

    def at(self, i: int) -> np.ndarray:
        return self.values[i]


def _root_norm(vals: np.ndarray, h: float, p: float) -> float:
    if p < 1:
        raise ValueError("p must be >= 1")
    w = np.clip(np.linalg.eigvalsh(matcore.hermitize(vals, tol=1e-9)), 0.0, None)
    if np.isinf(p):
        return float(np.sqrt(w.max())) if w.size else 0.0
    tot = np.sum(w ** (p / 2)) * h
    if matcore._NORMALIZED_TRACE:
        tot /= vals.shape[-1]
    return float(tot ** (1.0 / p))


def default_cone(f: MatrixField, refine: int = 1, y0: float = 0.0) -> ConeGrid:
    return cone_net(f.grid.J, f.grid.K, refine, float(y0))


def t_grid(grid: GridSpec, pad: int = 1) -> GridSpec:
    """Grid of t-values: same cells, window widened by 2^pad."""
    return GridSpec(grid.J + pad, grid.K)


def _side(f: MatrixField, side: str) -> MatrixField:
    if side == "c":
        return f
    if side == "r":
        return f.adjoint()
    raise ValueError(f"side must be 'c' or 'r', got {side!r}")


def cone_gradients(f: MatrixField, cone: ConeGrid, ts: np.ndarray, block: int | None = None):
    """Yield (cell slice, gradients of shape (cells, len(ts), 2, d, d))."""
    nt = ts.size
    step = max(1, (block or _POINTS_PER_BLOCK) // max(nt, 1))
    for a in range(0, cone.size, step):
        b = min(a + step, cone.size)
        xs = (cone.x[a:b, None] + ts[None, :]).ravel()
        ys = np.repeat(cone.y[a:b], nt)
        g = gradient_many(f, xs, ys).reshape(b - a, nt, 2, f.d, f.d)
        yield slice(a, b), g


def area_square(f: MatrixField, cone: ConeGrid, ts: np.ndarray, weight: str = "area") -> np.ndarray:
    """sum over cone cells of w_c |grad f(x_c + t, y_c)|^2 for each t."""
    out = np.zeros((ts.size, f.d, f.d), complex)
    for sl, g in cone_gradients(f, cone, ts):
        w = cone.area[sl]
        if weight == "tent":
            w = w / cone.y[sl] ** 2
        out += np.einsum("c,ctsji,ctsjl->til", w, g.conj(), g, optimize=True)
    return matcore.hermitize(out, tol=1e-9)


def area_integral(f: MatrixField, side: str = "c", y0: float = 0.0, cone: ConeGrid | None = None,
                  tgrid: GridSpec | None = None) -> PsdField:
    """S^2(f)(t, y0) on the cell centers t of ``tgrid`` (default: the field's grid).

    The cone net must have apex y0 (default nets are built to match).
    """
    if y0 < 0:
        raise ValueError("y0 must be >= 0")
    cone = default_cone(f, 1, y0) if cone is None else cone
    if y0 >= cone.y_max:
        raise ValueError("y0 must be below the top of the net")
    if abs(cone.apex - y0) > 1e-15:
        raise ValueError(f"cone net apex {cone.apex} does not match y0 = {y0}")
    tg = f.grid if tgrid is None else tgrid
    g = _side(f, side)
    return PsdField(tg, area_square(g, cone, tg.centers()))


def g_nodes(y0: float, y_max: float, y_floor: float, per_octave: int = 8):
    """Geometric midpoint nodes in y and weights integral of y dy per interval."""
    lo = max(y0, y_floor)
    if not y_max > lo:
        raise ValueError("y0 must be below y_max")
    n = int(np.ceil(per_octave * np.log2(y_max / lo) - 1e-9))
    edges = lo * (y_max / lo) ** (np.arange(n + 1) / n)
    nodes = np.sqrt(edges[:-1] * edges[1:])
    return nodes, (edges[1:] ** 2 - edges[:-1] ** 2) / 2


def g_integral(f: MatrixField, side: str = "c", y0: float = 0.0, y_max: float | None = None,
               tgrid: GridSpec | None = None, per_octave: int = 8) -> PsdField:
    """G^2(f)(t, y0) = integral from y0 to y_max of |grad f(t, y)|^2 y dy at cell centers."""
    if y0 < 0:
        raise ValueError("y0 must be >= 0")
    grid = f.grid
    ymax = 2.0 ** (grid.J + 4) if y_max is None else y_max
    if y0 >= ymax:
        raise ValueError("y0 must be below y_max")
    nodes, wts = g_nodes(y0, ymax, 2.0 ** -(grid.K + FLOOR_OCTAVES), per_octave)
    tg = grid if tgrid is None else tgrid
    g = _side(f, side)
    ts = tg.centers()
    out = np.zeros((ts.size, f.d, f.d), complex)
    step = max(1, _POINTS_PER_BLOCK // ts.size)
    for a in range(0, nodes.size, step):
        b = min(a + step, nodes.size)
        xs = np.tile(ts, b - a)
        ys = np.repeat(nodes[a:b], ts.size)
        gr = gradient_many(g, xs, ys).reshape(b - a, ts.size, 2, f.d, f.d)
        out += np.einsum("n,ntsji,ntsjl->til", wts[a:b], gr.conj(), gr, optimize=True)
    return PsdField(tg, matcore.hermitize(out, tol=1e-9))


def hardy_norm(f: MatrixField, p: float, side: str = "c", cone: ConeGrid | None = None,
               pad: int = 1) -> float:
    """||S(f)||_p with t over the window widened by 2^pad."""
    if p < 1:
        raise ValueError("p must be >= 1")
    s2 = area_integral(f, side, 0.0, cone, t_grid(f.grid, pad))
    return s2.norm(p)


def g_norm(f: MatrixField, p: float, side: str = "c", pad: int = 1) -> float:
    return g_integral(f, side, tgrid=t_grid(f.grid, pad)).norm(p)


def tent_functional(F, p: float, grid: GridSpec, cone: ConeGrid | None = None, d: int | None = None):
    """||A(F)||_p with A(F)(t)^2 = integral over |x| < y of |F(x + t, y)|^2 dx dy / y^2.

    ``F`` is either a callable ``F(xs, ys) -> (n, d, d)`` or an array of
    samples with shape (len(t), cells, d, d) on the cone net.  Returns the
    norm and the psd field A^2.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    cone = cone_net(grid.J, grid.K, 1, 0.0) if cone is None else cone
    ts = grid.centers()
    if callable(F):
        acc = None
        step = max(1, _POINTS_PER_BLOCK // ts.size)
        for a in range(0, cone.size, step):
            b = min(a + step, cone.size)
            xs = (cone.x[a:b, None] + ts[None, :]).ravel()
            ys = np.repeat(cone.y[a:b], ts.size)
            vals = np.asarray(F(xs, ys), dtype=complex)
            vals = vals.reshape(b - a, ts.size, vals.shape[-2], vals.shape[-1])
            w = cone.area[a:b] / cone.y[a:b] ** 2
            part = np.einsum("c,ctji,ctjl->til", w, vals.conj(), vals, optimize=True)
            acc = part if acc is None else acc + part
    else:
        vals = np.asarray(F, dtype=complex)
        if vals.shape[:2] != (ts.size, cone.size):
            raise ValueError("sample array must have shape (len(t), cells, d, d)")
        w = cone.area / cone.y**2
        acc = np.einsum("c,tcji,tcjl->til", w, vals.conj(), vals, optimize=True)
    a2 = PsdField(grid, matcore.hermitize(acc, tol=1e-9))
    return a2.norm(p), a2


def hardy_cr_norm(f: MatrixField, p: float, cone: ConeGrid | None = None, opt_iters: int = 40,
                  pad: int = 1, step0: float = 0.5):
    """Norm of f in H^p_cr.

    p >= 2: max of the column and row norms.  p < 2: a bound pair for
    inf over f = g + h of ||g||_{H_c^p} + ||h||_{H_r^p}, with the upper value
    from a monotone projected descent over g and the lower value from
    cellwise lower estimates of the column and row parts.
    """
    from .reports import NormReport

    if p < 1:
        raise ValueError("p must be >= 1")
    cone = default_cone(f, 1) if cone is None else cone
    tg = t_grid(f.grid, pad)
    if p >= 2:
        c = area_integral(f, "c", 0.0, cone, tg).norm(p)
        r = area_integral(f, "r", 0.0, cone, tg).norm(p)
        return NormReport.exact("hardy_cr", max(c, r), provenance="quadrature", meta={"p": p, "column": c, "row": r})
    if opt_iters <= 0:
        raise ValueError("opt_iters must be >= 1 for p < 2")
    solver = _CrSolver(f, p, cone, tg)
    return solver.run(opt_iters, step0)


class _CrSolver:
    """Descent for inf ||S_c(g)||_p + ||S_r(f - g)||_p over step fields g.

    S_r(h) = S_c(h*), and both square functions come from the linear map
    g -> grad g on the cone net, so gradients are pulled back with its
    adjoint.  Steps are only accepted when the objective decreases.
    """

    def __init__(self, f: MatrixField, p: float, cone: ConeGrid, tg: GridSpec):
        from .coneops import ConeOperator

        self.f, self.p, self.cone, self.tg = f, p, cone, tg
        self.op = ConeOperator(f.grid, cone, tg)
        self.history: list[float] = []

    def _value(self, vals: np.ndarray):
        s2 = matcore.hermitize(self.op.square_sum(vals), tol=1e-9)
        return _root_norm(s2, self.tg.h, self.p), s2

    def _grad(self, vals: np.ndarray, s2: np.ndarray, nrm: float) -> np.ndarray:
        # d||S||_p = nrm^(1-p) h Re sum_c area_c tr((A M)* dA), M = (S^2)^(p/2 - 1)
        if nrm <= 0:
            return np.zeros_like(vals)
        w, v = np.linalg.eigh(s2)
        w = np.clip(w, 1e-12 * max(w.max(), 1e-300), None)
        m = (v * (w ** (self.p / 2 - 1))[:, None, :]) @ matcore.adjoint(v)
        coef = nrm ** (1 - self.p) * self.tg.h
        acc = None
        for sl, a in self.op.phi_batches(vals):
            y = a @ m[None, :, None] * (coef * self.cone.area[sl])[:, None, None, None, None]
            acc = self.op.phi_adjoint_accumulate(acc, sl, y)
        return self.op.phi_adjoint_finish(acc, vals.shape[-1])

    def objective(self, g: np.ndarray):
        h = matcore.adjoint(self.f.values - g)
        nc, s2c = self._value(g)
        nr, s2r = self._value(h)
        return nc + nr, (nc, s2c), (nr, s2r)

    def run(self, iters: int, step0: float):
        from .reports import NormReport

        fv = np.array(self.f.values)
        cands = {"g=f": fv, "g=f/2": fv / 2, "g=0": np.zeros_like(fv)}
        vals = {k: self.objective(v)[0] for k, v in cands.items()}
        g = cands["g=f/2"]
        cur, cpart, rpart = self.objective(g)
        self.history = [cur]
        scale = max(np.abs(fv).max(), 1e-300)
        for k in range(1, iters + 1):
            h = matcore.adjoint(fv - g)
            gd = self._grad(g, cpart[1], cpart[0]) - matcore.adjoint(self._grad(h, rpart[1], rpart[0]))
            gn = np.abs(gd).max()
            if gn == 0:
                break
            step = step0 * scale / np.sqrt(k) / gn
            accepted = False
            for _ in range(12):
                trial = g - step * gd
                val, cp, rp = self.objective(trial)
                if val < cur:
                    g, cur, cpart, rpart = trial, val, cp, rp
                    accepted = True
                    break
                step /= 4
            self.history.append(cur)
            if not accepted:
                break
        upper = min(cur, *vals.values())
        lower = self.lower_bound()
        return NormReport.bound("hardy_cr", min(lower, upper), upper,
                                meta={"p": self.p, "history": self.history, "candidates": vals,
                                      "net": self.cone.describe()})

    def lower_bound(self) -> float:
        """max over cone cells and gradient slots of (h sum_t ||area_c^(1/2) grad f||_p^p)^(1/p).

        Each one-sided square function dominates its share at any single
        (cell, slot), in trace order, and the two shares add up to the f-value,
        so the triangle inequality bounds g + h from below.
        """
        best = 0.0
        for sl, a in self.op.phi_batches(np.array(self.f.values)):
            s = np.linalg.svd(a, compute_uv=False)  # (B, nt, 2, d)
            per = np.sum(s**self.p, axis=(1, 3)) * self.cone.area[sl][:, None] ** (self.p / 2) * self.tg.h
            best = max(best, float(per.max() ** (1 / self.p)))
        return best
