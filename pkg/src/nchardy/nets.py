"""Square nets over the upper half-plane and over (shifted) cones.

Level j covers the strip 2^j <= y < 2^(j+1) with squares of side 2^j; each
square is split into 2^r x 2^r sub-squares, with one extra split for strips
below y = 2^-K.  Strips at or above 2^-K, where the energy of a step function
decays in y, get Y_EXTRA further vertical halvings (the x direction is
already resolved there).  Cone nets clip every cell to {|x| < y - y0}; each
clipped piece contributes its centroid and its exact area.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

Y_EXTRA = 2
# nets stop at y = 2^-(K + FLOOR_OCTAVES); the strip below is omitted
FLOOR_OCTAVES = 6


@dataclass(frozen=True)
class ConeGrid:
    x: np.ndarray
    y: np.ndarray
    area: np.ndarray
    y_min: float
    y_max: float
    refinement: int
    kind: str  # "cone" or "halfplane"
    apex: float = 0.0
    # sub-square bounds, kept for half-plane nets (box clipping)
    x0: np.ndarray | None = field(default=None, repr=False)
    x1: np.ndarray | None = field(default=None, repr=False)
    y0: np.ndarray | None = field(default=None, repr=False)
    y1: np.ndarray | None = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.x.size

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "cells": int(self.size),
            "y_min": self.y_min,
            "y_max": self.y_max,
            "refinement": self.refinement,
            "apex": self.apex,
        }


def level_range(J: int, K: int) -> tuple[int, int]:
    return -(K + FLOOR_OCTAVES), J + 3


def _strips(K: int, jmin: int, jmax: int, refine: int):
    """Yield (j, side, cell width, cell height, rows per strip)."""
    for j in range(jmin, jmax + 1):
        r = refine + (1 if j < -K else 0)
        ry = r if j < -K else r + Y_EXTRA
        yield j, 2.0**j, 2.0**j / 2**r, 2.0**j / 2**ry, 2**ry


def _clip_halfplane(poly, a, b, c):
    """Keep the part of a convex polygon with a*x + b*y <= c."""
    out = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = a * p[0] + b * p[1] - c
        fq = a * q[0] + b * q[1] - c
        if fp <= 0:
            out.append(p)
        if fp * fq < 0:
            s = fp / (fp - fq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    return out


def _area_centroid(poly):
    if len(poly) < 3:
        return 0.0, 0.0, 0.0
    xs = np.array([p[0] for p in poly])
    ys = np.array([p[1] for p in poly])
    xn, yn = np.roll(xs, -1), np.roll(ys, -1)
    cr = xs * yn - xn * ys
    a = cr.sum() / 2
    if a <= 0:
        return 0.0, 0.0, 0.0
    cx = ((xs + xn) * cr).sum() / (6 * a)
    cy = ((ys + yn) * cr).sum() / (6 * a)
    return a, cx, cy


@lru_cache(maxsize=64)
def cone_net(J: int, K: int, refine: int = 1, apex: float = 0.0) -> ConeGrid:
    """Net over Gamma(0, apex) = {|x| < y - apex}, in coordinates relative to t."""
    jmin, jmax = level_range(J, K)
    xs, ys, ws = [], [], []
    for j, side, sub, hy, m in _strips(K, jmin, jmax, refine):
        if 2 * side <= apex:
            continue
        for qy in range(m):
            ya, yb = side + qy * hy, side + (qy + 1) * hy
            if yb <= apex:
                continue
            half = yb - apex
            ncol = int(np.ceil(half / sub))
            for qx in range(-ncol, ncol):
                xa, xb = qx * sub, (qx + 1) * sub
                poly = [(xa, ya), (xb, ya), (xb, yb), (xa, yb)]
                full = abs(xa) <= ya - apex and abs(xb) <= ya - apex
                if not full:
                    poly = _clip_halfplane(poly, 1.0, -1.0, -apex)
                    poly = _clip_halfplane(poly, -1.0, -1.0, -apex)
                a, cx, cy = _area_centroid(poly)
                if full:
                    a, cx, cy = sub * hy, (xa + xb) / 2, (ya + yb) / 2
                if a > 1e-15 * sub * hy:
                    xs.append(cx)
                    ys.append(cy)
                    ws.append(a)
    return ConeGrid(
        x=_frozen(xs), y=_frozen(ys), area=_frozen(ws),
        y_min=max(2.0**jmin, apex), y_max=2.0 ** (jmax + 1),
        refinement=refine, kind="cone", apex=apex,
    )


@lru_cache(maxsize=16)
def halfplane_net(J: int, K: int, refine: int = 1, margin: float = 32.0) -> ConeGrid:
    """Net over a truncated half-plane: |x| <= 2^J + margin * 2^j on strip j."""
    jmin, jmax = level_range(J, K)
    W = 2.0**J
    cols = []
    for j, side, sub, hy, m in _strips(K, jmin, jmax, refine):
        reach = W + margin * side
        nx = int(np.ceil(reach / sub))
        xa = np.arange(-nx, nx) * sub
        for qy in range(m):
            ya = side + qy * hy
            cols.append((xa, np.full_like(xa, ya), sub, hy))
    x0 = np.concatenate([c[0] for c in cols])
    y0 = np.concatenate([c[1] for c in cols])
    wx = np.concatenate([np.full(c[0].size, c[2]) for c in cols])
    wy = np.concatenate([np.full(c[0].size, c[3]) for c in cols])
    x1, y1 = x0 + wx, y0 + wy
    return ConeGrid(
        x=_frozen((x0 + x1) / 2), y=_frozen((y0 + y1) / 2), area=_frozen(wx * wy),
        y_min=2.0**jmin, y_max=2.0 ** (jmax + 1), refinement=refine, kind="halfplane",
        x0=_frozen(x0), x1=_frozen(x1), y0=_frozen(y0), y1=_frozen(y1),
    )


def _frozen(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    arr.setflags(write=False)
    return arr
