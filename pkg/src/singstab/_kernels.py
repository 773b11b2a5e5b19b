"""Hot loop of the product-word search.

``expand(parents, letters)`` returns, for every (parent, letter) pair, the log
of the 2-norm and of the spectral radius of ``letter @ parent``. The numba
version is used for 2x2 products when numba imports and ``SINGSTAB_NO_JIT``
is unset; the pure-numpy version batches the same arithmetic. 2x2 blocks use
closed forms in both so the two backends agree to rounding. For d > 2 the
per-node LAPACK calls made from numba are slower than one batched numpy call,
so the default there is numpy (see benchmarks/bench_search.py).
"""

from __future__ import annotations

import math
import os

import numpy as np

_CHUNK = 1 << 21  # floats per batched numpy product

try:
    if os.environ.get("SINGSTAB_NO_JIT", "").strip() not in ("", "0"):
        raise ImportError("disabled by SINGSTAB_NO_JIT")
    import numba as nb
except ImportError:
    nb = None

HAVE_JIT = nb is not None


def _rho2_np(a, b, c, d):
    tr = a + d
    det = a * d - b * c
    disc = 0.25 * tr * tr - det
    root = np.sqrt(np.abs(disc))
    lam1 = 0.5 * tr + np.where(tr >= 0, root, -root)
    real = np.abs(lam1)
    cplx = np.sqrt(np.abs(det))
    return np.where(disc >= 0, real, cplx)


def _norm2_np(a, b, c, d):
    f = a * a + b * b + c * c + d * d
    det = a * d - b * c
    return np.sqrt(0.5 * (f + np.sqrt(np.maximum(f * f - 4.0 * det * det, 0.0))))


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


def expand_numpy(parents: np.ndarray, letters: np.ndarray):
    P, L, d = parents.shape[0], letters.shape[0], letters.shape[1]
    lognorm = np.empty((P, L))
    logrho = np.empty((P, L))
    step = max(1, _CHUNK // max(1, L * d * d))
    for lo in range(0, P, step):
        hi = min(P, lo + step)
        prod = np.matmul(letters[None, :, :, :], parents[lo:hi, None, :, :])
        if d == 2:
            a, b, c, e = prod[..., 0, 0], prod[..., 0, 1], prod[..., 1, 0], prod[..., 1, 1]
            nrm = _norm2_np(a, b, c, e)
            rho = _rho2_np(a, b, c, e)
        else:
            nrm = np.linalg.norm(prod, ord=2, axis=(-2, -1))
            rho = np.max(np.abs(np.linalg.eigvals(prod)), axis=-1)
        lognorm[lo:hi] = _log(nrm)
        logrho[lo:hi] = _log(rho)
    return lognorm, logrho


if HAVE_JIT:

    @nb.njit(cache=True)
    def _rho2(a, b, c, d):
        tr = a + d
        det = a * d - b * c
        disc = 0.25 * tr * tr - det
        if disc >= 0.0:
            root = math.sqrt(disc)
            lam1 = 0.5 * tr + root if tr >= 0.0 else 0.5 * tr - root
            return abs(lam1)
        return math.sqrt(abs(det))

    @nb.njit(cache=True)
    def _norm2(a, b, c, d):
        f = a * a + b * b + c * c + d * d
        det = a * d - b * c
        g = f * f - 4.0 * det * det
        if g < 0.0:
            g = 0.0
        return math.sqrt(0.5 * (f + math.sqrt(g)))

    @nb.njit(cache=True)
    def _safe_log(x):
        if x > 0.0:
            return math.log(x)
        return -np.inf

    @nb.njit(cache=True)
    def _expand_jit(parents, letters):
        P = parents.shape[0]
        L = letters.shape[0]
        d = letters.shape[1]
        lognorm = np.empty((P, L))
        logrho = np.empty((P, L))
        prod = np.empty((d, d))
        for p in range(P):
            for q in range(L):
                for i in range(d):
                    for j in range(d):
                        s = 0.0
                        for k in range(d):
                            s += letters[q, i, k] * parents[p, k, j]
                        prod[i, j] = s
                if d == 2:
                    a = prod[0, 0]
                    b = prod[0, 1]
                    c = prod[1, 0]
                    e = prod[1, 1]
                    lognorm[p, q] = _safe_log(_norm2(a, b, c, e))
                    logrho[p, q] = _safe_log(_rho2(a, b, c, e))
                else:
                    sv = np.linalg.svd(prod)[1]
                    lognorm[p, q] = _safe_log(sv[0])
                    ev = np.linalg.eigvals(prod.astype(np.complex128))
                    logrho[p, q] = _safe_log(np.max(np.abs(ev)))
        return lognorm, logrho

    def expand_jit(parents: np.ndarray, letters: np.ndarray):
        return _expand_jit(np.ascontiguousarray(parents, dtype=np.float64),
                           np.ascontiguousarray(letters, dtype=np.float64))

else:
    expand_jit = None


def expand(parents: np.ndarray, letters: np.ndarray, backend: str | None = None):
    """Log-norms and log-spectral-radii of all ``letters[q] @ parents[p]``.

    ``backend`` forces ``"jit"`` or ``"numpy"``; by default the jit path is
    taken for 2x2 letters when available.
    """
    if backend is None:
        backend = "jit" if HAVE_JIT and letters.shape[-1] == 2 else "numpy"
    if backend == "jit":
        if expand_jit is None:
            raise RuntimeError("numba backend unavailable")
        return expand_jit(parents, letters)
    if backend == "numpy":
        return expand_numpy(parents, letters)
    raise ValueError(f"unknown backend {backend!r}")


def log_rho(m: np.ndarray) -> float:
    """Same arithmetic as the search kernels, for a single matrix."""
    if m.shape == (2, 2):
        r = float(_rho2_np(m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
    else:
        r = float(np.max(np.abs(np.linalg.eigvals(m))))
    return math.log(r) if r > 0 else -math.inf


def log_norm(m: np.ndarray) -> float:
    if m.shape == (2, 2):
        n = float(_norm2_np(m[0, 0], m[0, 1], m[1, 0], m[1, 1]))
    else:
        n = float(np.linalg.norm(m, 2))
    return math.log(n) if n > 0 else -math.inf
