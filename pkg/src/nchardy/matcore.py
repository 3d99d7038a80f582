"""Finite-dimensional operator algebra on d x d complex matrices.

Every function accepts a single matrix of shape ``(d, d)`` or a stack of
shape ``(..., d, d)`` and works elementwise over the leading axes.
"""

from __future__ import annotations

import numpy as np

TOL_PSD = 1e-10
HERMITIAN_DRIFT = 1e-12

# Trace convention: unnormalized by default.  Flip with set_normalized_trace.
_NORMALIZED_TRACE = False


class NotHermitianError(ValueError):
    pass


class NotPsdError(ValueError):
    pass


def set_normalized_trace(flag: bool) -> None:
    """Switch tau between tr and tr/d (process-wide, default off)."""
    global _NORMALIZED_TRACE
    _NORMALIZED_TRACE = bool(flag)


def as_matrix(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("non-finite matrix entries")
    return a


def adjoint(x) -> np.ndarray:
    a = np.asarray(x)
    return np.conj(np.swapaxes(a, -1, -2))


def trace(x) -> np.ndarray:
    """tau(x); returns complex values over the leading axes."""
    a = np.asarray(x)
    t = np.trace(a, axis1=-2, axis2=-1)
    if _NORMALIZED_TRACE:
        t = t / a.shape[-1]
    return t


def op_norm(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.complex128)
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


def hermitize(x, tol: float = HERMITIAN_DRIFT) -> np.ndarray:
    """Return (x + x*)/2 after checking the anti-Hermitian drift is small.

    The drift is measured relative to the operator norm of each matrix; an
    error is raised when it exceeds ``tol``.
    """
    a = np.asarray(x, dtype=np.complex128)
    skew = a - adjoint(a)
    scale = np.maximum(np.abs(a).max(axis=(-2, -1)), np.finfo(float).tiny)
    drift = np.abs(skew).max(axis=(-2, -1)) / scale
    if np.any(drift > tol):
        raise NotHermitianError(f"Hermitian drift {float(np.max(drift)):.3e} exceeds {tol:.1e}")
    return 0.5 * (a + adjoint(a))


def _psd_floor(w: np.ndarray, tol: float) -> np.ndarray:
    # tolerance relative to the operator norm, per matrix
    scale = np.abs(w).max(axis=-1, keepdims=True)
    return -tol * np.maximum(scale, 1.0)


def eigh_psd(a, tol: float = TOL_PSD):
    """Eigendecomposition of a psd stack, negative eigenvalues clipped to 0."""
    h = hermitize(as_matrix(a))
    w, v = np.linalg.eigh(h)
    if np.any(w < _psd_floor(w, tol)):
        raise NotPsdError(f"smallest eigenvalue {float(w.min()):.3e} below -tol")
    return np.clip(w, 0.0, None), v


def _from_eig(w, v) -> np.ndarray:
    return (v * w[..., None, :]) @ adjoint(v)


def abs_psd(x) -> np.ndarray:
    """|x| = (x* x)^{1/2}."""
    a = as_matrix(x)
    w, v = np.linalg.eigh(hermitize(adjoint(a) @ a, tol=1e-9))
    return _from_eig(np.sqrt(np.clip(w, 0.0, None)), v)


def psd_power(a, r: float, tol: float = TOL_PSD) -> np.ndarray:
    """a^r by eigenvalue powers; 0^r := 0 for every r >= 0."""
    if r < 0:
        raise ValueError("psd_power needs r >= 0")
    w, v = eigh_psd(a, tol)
    if r == 0:
        p = (w > 0).astype(float)
    else:
        p = np.where(w > 0, w, 0.0) ** r
    return _from_eig(p, v)


def psd_sqrt(a, tol: float = TOL_PSD) -> np.ndarray:
    return psd_power(a, 0.5, tol)


def singular_values(x) -> np.ndarray:
    return np.linalg.svd(as_matrix(x), compute_uv=False)


def schatten_norm(x, p: float) -> np.ndarray:
    """(tau |x|^p)^{1/p}; p = inf gives the operator norm."""
    if p < 1:
        raise ValueError("Schatten norm needs p >= 1")
    s = singular_values(x)
    if np.isinf(p):
        return s.max(axis=-1)
    tot = np.sum(s**p, axis=-1)
    if _NORMALIZED_TRACE:
        tot = tot / s.shape[-1]
    return tot ** (1.0 / p)


def psd_schatten(a, p: float) -> np.ndarray:
    """Schatten norm of psd matrices from eigenvalues (cheaper than svd)."""
    w = np.clip(np.linalg.eigvalsh(hermitize(as_matrix(a), tol=1e-9)), 0.0, None)
    if np.isinf(p):
        return w.max(axis=-1)
    tot = np.sum(w**p, axis=-1)
    if _NORMALIZED_TRACE:
        tot = tot / w.shape[-1]
    return tot ** (1.0 / p)


def power_iteration_norm(x, iters: int = 500, seed: int = 0) -> float:
    """Largest singular value by power iteration on x* x (test oracle)."""
    a = as_matrix(x)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[-1]) + 1j * rng.standard_normal(a.shape[-1])
    v /= np.linalg.norm(v)
    lam = 0.0
    ata = adjoint(a) @ a
    for _ in range(iters):
        w = ata @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        lam = nw
        v = w / nw
    return float(np.sqrt(lam))


def min_eig(a) -> np.ndarray:
    return np.linalg.eigvalsh(hermitize(as_matrix(a), tol=1e-9))[..., 0]


def loewner_leq(a, b, tol: float = 0.0, herm_tol: float = 1e-9) -> bool:
    """True iff eigmin(b - a) >= -tol for every matrix in the stack."""
    return bool(np.all(loewner_slack(a, b, herm_tol) >= -tol))


def loewner_slack(a, b, herm_tol: float = 1e-9) -> np.ndarray:
    """Smallest eigenvalue of b - a (negative means a is not below b)."""
    ha = hermitize(as_matrix(a), tol=herm_tol)
    hb = hermitize(as_matrix(b), tol=herm_tol)
    return np.linalg.eigvalsh(hb - ha)[..., 0]


def hansen_transform_bound(a, b, p: float):
    """Return (b* a b, (b* a^p b)^{1/p}) for psd a and a contraction b."""
    if p < 1:
        raise ValueError("Hansen bound needs p >= 1")
    a = as_matrix(a)
    b = as_matrix(b)
    if np.any(op_norm(b) > 1 + 1e-12):
        raise ValueError("b must be a contraction")
    lhs = hermitize(adjoint(b) @ a @ b, tol=1e-9)
    # b* a^p b = x* x with x = a^{p/2} b; the SVD of x keeps its small
    # eigenvalues accurate, which forming a^p and taking a 1/p-th root does not
    w, v = eigh_psd(a)
    x = w[..., :, None] ** (p / 2) * (adjoint(v) @ b)
    _, s, vh = np.linalg.svd(x)
    rhs = hermitize((adjoint(vh) * s[..., None, :] ** (2.0 / p)) @ vh)
    return lhs, rhs


def sq(x) -> np.ndarray:
    """|x|^2 = x* x (column square)."""
    a = np.asarray(x)
    return adjoint(a) @ a


def random_psd(rng: np.random.Generator, d: int, size=()) -> np.ndarray:
    g = rng.standard_normal((*size, d, d)) + 1j * rng.standard_normal((*size, d, d))
    return g @ adjoint(g) / d


def random_matrix(rng: np.random.Generator, d: int, size=()) -> np.ndarray:
    return (rng.standard_normal((*size, d, d)) + 1j * rng.standard_normal((*size, d, d))) / np.sqrt(2)


def random_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(random_matrix(rng, d))
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_contraction(rng: np.random.Generator, d: int) -> np.ndarray:
    b = random_matrix(rng, d)
    return b / (op_norm(b) * (1 + rng.uniform(0, 1)))
