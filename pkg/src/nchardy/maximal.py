"""Window averages, noncommutative maximal-norm bounds and domination checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import matcore
from .dyadic import Filtration, cond_exp
from .gridfn import GridSpec, MatrixField, psd_values_norm
from .halfplane import extend_many


@dataclass(frozen=True)
class AvgWindow:
    """Window (t - h1, t + h2] around t."""

    h1: Fraction
    h2: Fraction

    def __init__(self, h1, h2):
        h1, h2 = Fraction(h1), Fraction(h2)
        if h1 <= 0 or h2 <= 0:
            raise ValueError("window sides must be positive")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h2", h2)

    @property
    def length(self) -> Fraction:
        return self.h1 + self.h2


def snap_window(grid: GridSpec, w: AvgWindow) -> tuple[int, int, bool]:
    """Sides in whole cells, rounded outward; flag if rounding happened."""
    a = w.h1 / grid.cell_width
    b = w.h2 / grid.cell_width
    ca, cb = math.ceil(a), math.ceil(b)
    return ca, cb, (ca != a or cb != b)


def window_average(f: MatrixField, w: AvgWindow, return_flag: bool = False):
    """f_h at the right endpoint t_i of every cell i: the mean of f over (t_i - h1, t_i + h2].

    f is zero outside W.  The mean is formed as f(t_i) plus the averaged
    deviations, so locally constant fields are reproduced exactly.
    """
    a, b, snapped = snap_window(f.grid, w)
    n = f.n
    v = f.values
    ext = np.concatenate([np.zeros((a, f.d, f.d), complex), v, np.zeros((b, f.d, f.d), complex)])
    dev = np.zeros_like(v)
    # cells i + 1 - a .. i + b, i.e. ext rows i + 1 .. i + a + b
    for j in range(1, a + b + 1):
        dev += ext[j:j + n] - v
    out = MatrixField(f.grid, v + dev / (a + b))
    return (out, snapped) if return_flag else out


def cover_level_cells(grid: GridSpec, cells: int) -> int:
    """Level N of the covering atoms for an interval of the given length in cells."""
    return grid.K - int(cells).bit_length()


def _min_slack(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return float(np.min(matcore.loewner_slack(lhs, rhs))) if lhs.size else 0.0


def dyadic_majorant(f: MatrixField, N: int) -> MatrixField:
    return (cond_exp(f, Filtration.D, N) + cond_exp(f, Filtration.DPRIME, N)) * 6.0


def domination_check(f: MatrixField, w: AvgWindow, tol: float = 1e-9):
    """Check f_h(t) <= 6 (E(f|D_N)(t) + E(f|D'_N)(t)) at every cell; returns (holds, min slack)."""
    a, b, snapped = snap_window(f.grid, w)
    if snapped:
        raise ValueError("window is not grid-aligned")
    N = cover_level_cells(f.grid, a + b)
    fh = window_average(f, w)
    slack = _min_slack(fh.values, dyadic_majorant(f, N).values)
    return slack >= -tol, slack


@dataclass(frozen=True)
class NcSupBound:
    lower: float
    upper: float
    exact: bool
    meta: dict

    def __post_init__(self):
        if self.lower > self.upper + 1e-12 * max(1.0, abs(self.upper)):
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")


def _stack(a, h):
    arrs = [np.asarray(x, complex) for x in a]
    if not arrs:
        raise ValueError("empty family")
    arr = np.stack(arrs)
    if arr.ndim == 3:
        arr = arr[:, None]  # single matrices: one point of unit mass
        h = 1.0
    if arr.ndim != 4 or arr.shape[-1] != arr.shape[-2]:
        raise ValueError("entries must be d x d matrices or fields of them")
    arr = matcore.hermitize(arr, tol=1e-9)
    if np.any(np.linalg.eigvalsh(arr)[..., 0] < -matcore.TOL_PSD * max(1.0, np.abs(arr).max())):
        raise matcore.NotPsdError("ncsup entries must be psd")
    return arr, h


def _norm(vals: np.ndarray, h: float, p: float) -> float:
    return psd_values_norm(vals, h, p)


def _commuting(arr: np.ndarray) -> bool:
    scale = max(np.abs(arr).max(), 1e-300) ** 2
    for i in range(arr.shape[0]):
        for j in range(i + 1, arr.shape[0]):
            c = arr[i] @ arr[j] - arr[j] @ arr[i]
            if np.abs(c).max() > 1e-12 * scale:
                return False
    return True


def _pointwise_max(arr: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Max of a commuting family in a common eigenbasis, per point."""
    c = rng.uniform(1.0, 2.0, size=arr.shape[0])
    _, v = np.linalg.eigh(np.einsum("n,ntij->tij", c, arr))
    diag = np.einsum("tji,ntjk,tki->nti", v.conj(), arr, v).real
    m = np.clip(diag.max(axis=0), 0.0, None)
    return (v * m[:, None, :]) @ matcore.adjoint(v)


def _dual_ascent(arr: np.ndarray, h: float, p: float, iters: int, start: np.ndarray):
    """Maximize sum tau(a_n b_n) / ||sum b_n||_q over b_n = X_n X_n*.

    Ratio ascent with adaptive steps; every iterate is a feasible dual after
    normalization, so the best ratio seen is a valid lower bound.
    """
    q = p / (p - 1)

    def ratio(x):
        b = x @ matcore.adjoint(x)
        num = float(np.real(np.einsum("ntij,ntji->", arr, b))) * h
        den = _norm(matcore.hermitize(b.sum(axis=0), tol=1e-9), h, q)
        return (num / den if den > 0 else 0.0), b, num, den

    x = start.copy()
    best, b, num, den = ratio(x)
    step = 0.1
    for _ in range(iters):
        bs = matcore.hermitize(b.sum(axis=0), tol=1e-9)
        w, v = np.linalg.eigh(bs)
        w = np.clip(w, 0.0, None)
        pw = (v * (w ** (q - 1))[:, None, :]) @ matcore.adjoint(v)
        dden = den ** (1 - q) * h * (pw[None] @ x)
        dnum = h * (arr @ x)
        g = (dnum * den - num * dden) / den**2
        gn = np.sqrt(np.sum(np.abs(g) ** 2))
        xn = np.sqrt(np.sum(np.abs(x) ** 2))
        if gn == 0 or xn == 0:
            break
        trial = x + step * (xn / gn) * g
        r, tb, tn, td = ratio(trial)
        if r > best:
            x, best, b, num, den = trial, r, tb, tn, td
            step = min(step * 1.5, 1.0)
        else:
            step /= 2
            if step < 1e-8:
                break
    return best


def ncsup_bounds(a, p: float, h: float = 1.0, iters: int = 200, seed: int = 0) -> NcSupBound:
    """Bounds for ||sup_n a_n||_p of a positive family (matrices or fields of matrices).

    lower: the best of max_n ||a_n||_p and a dual-ascent value of
    sum tau(a_n b_n) over b_n >= 0 with ||sum b_n||_q <= 1.
    upper: the smaller of ||sum a_n||_p and ||max_n ||a_n(t)|| 1||_p (every
    a_n(t) lies below its pointwise envelope).  For a commuting family both
    bounds equal the norm of the pointwise maximum.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    arr, h = _stack(a, h)
    sum_norm = _norm(matcore.hermitize(arr.sum(axis=0), tol=1e-9), h, p)
    env = np.clip(np.linalg.eigvalsh(arr)[..., -1].max(axis=0), 0.0, None)
    env_norm = _norm(env[:, None, None] * np.eye(arr.shape[-1]), h, p)
    upper = min(sum_norm, env_norm)
    rng = np.random.default_rng(seed)
    if _commuting(arr):
        v = _norm(_pointwise_max(arr, rng), h, p)
        return NcSupBound(v, v, True, {"method": "commuting", "sum_norm": sum_norm})
    singles = [_norm(x, h, p) for x in arr]
    if np.isinf(p):
        # a_n <= max_m ||a_m|| 1 for every n, so the sup norm is the largest single norm
        v = max(singles)
        return NcSupBound(v, v, True, {"method": "sup-norm", "sum_norm": sum_norm})
    k = int(np.argmax(singles))
    lower = singles[k]
    meta = {"single": lower, "sum_norm": sum_norm, "envelope_norm": env_norm}
    if iters > 0 and lower > 0 and p > 1:
        roots = np.stack([matcore.psd_power(x, (p - 1) / 2) for x in arr])
        starts = [roots.copy()]
        s2 = 0.1 * roots
        s2[k] = roots[k]
        starts.append(s2)
        for st in starts:
            lower = max(lower, _dual_ascent(arr, h, p, iters, st))
        meta["ascent"] = lower
    return NcSupBound(min(lower, upper), upper, False, meta)


def maximal_bound_field(f: MatrixField, windows, p: float):
    """F = 6 sum over the distinct covering levels N of (E(f|D_N) + E(f|D'_N)), and ||F||_p."""
    windows = list(windows)
    if not windows:
        raise ValueError("empty window family")
    levels = set()
    for w in windows:
        a, b, snapped = snap_window(f.grid, w)
        if snapped:
            raise ValueError("window is not grid-aligned")
        levels.add(cover_level_cells(f.grid, a + b))
    F = MatrixField.zeros(f.grid, f.d)
    for N in sorted(levels):
        F = F + dyadic_majorant(f, N)
    return F, psd_values_norm(matcore.hermitize(F.values, tol=1e-9), f.grid.h, p)


def _interval_integrals(f: MatrixField, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact integrals of the step function f over [lo, hi] (any real endpoints)."""
    e = f.grid.edges()
    cum = np.concatenate([np.zeros((1, f.d, f.d), complex), np.cumsum(f.values, axis=0) * f.grid.h])

    def prim(x):
        x = np.clip(x, e[0], e[-1])
        i = np.clip(np.searchsorted(e, x, side="right") - 1, 0, f.n - 1)
        frac = (x - e[i])[:, None, None]
        return cum[i] + frac * f.values[i]

    return prim(hi) - prim(lo)


def poisson_domination_check(f: MatrixField, t: float, y: float, k_max: int | None = None,
                             tol: float = 1e-9):
    """Check P_y * f (x + t) <= (1/pi) sum_{k <= k_max} (8 / 2^k) avg_{|x + t - s| <= 2^k y} f(s)
    at every cell center x; returns (holds, min slack, k_max)."""
    if not y > 0:
        raise ValueError("y must be positive")
    if abs(t) >= y:
        raise ValueError("(t, y) must lie in the cone |t| < y")
    x = f.grid.centers() + t
    if k_max is None:
        reach = float(np.max(np.abs(x)) + 2.0**f.grid.J)
        k_max = max(0, math.ceil(math.log2(reach / y)))
    lhs = extend_many(f, x, np.full(x.size, y))
    rhs = np.zeros_like(lhs)
    for k in range(k_max + 1):
        r = 2.0**k * y
        rhs += (8.0 / 2**k) / np.pi * _interval_integrals(f, x - r, x + r) / (2 * r)
    slack = _min_slack(matcore.hermitize(lhs, tol=1e-6), matcore.hermitize(rhs, tol=1e-6))
    return slack >= -tol, slack, k_max


def differentiation_demo(f: MatrixField, schedule, jump_tol: float = 0.0, tol: float = 1e-12) -> dict:
    """sup |f_h - f| away from jumps for symmetric windows h in ``schedule`` (commuting values only)."""
    off = f.values - np.einsum("nii->ni", f.values)[..., None] * np.eye(f.d)
    if np.any(off != 0):
        raise ValueError("differentiation_demo needs diagonal (commuting) values")
    jumps = np.diff(np.concatenate([np.zeros((1, f.d, f.d)), f.values, np.zeros((1, f.d, f.d))]), axis=0)
    big = np.abs(jumps).max(axis=(1, 2)) > jump_tol
    jump_pts = np.flatnonzero(big)  # coordinates of jump edges
    t = np.arange(1, f.n + 1)
    rows = []
    for hval in sorted({Fraction(s) for s in schedule}, reverse=True):
        w = AvgWindow(hval, hval)
        a, _, snapped = snap_window(f.grid, w)
        fh = window_average(f, w)
        if jump_pts.size:
            dist = np.min(np.abs(t[:, None] - jump_pts[None, :]), axis=1)
            keep = dist > a
        else:
            keep = np.ones(f.n, bool)
        err = float(np.abs(fh.values - f.values)[keep].max()) if keep.any() else None
        rows.append({"h": float(a * f.grid.h), "cells": a, "snapped": snapped, "sup_error": err,
                     "kept_cells": int(keep.sum())})
    errs = [r["sup_error"] for r in rows if r["sup_error"] is not None]
    monotone = all(errs[i + 1] <= errs[i] + tol for i in range(len(errs) - 1))
    return {"rows": rows, "monotone": monotone}
