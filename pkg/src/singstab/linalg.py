"""Dense real matrix primitives.

Everything downstream (transforms, generator families, flows) goes through
these few helpers so that dimension checks and the singularity tolerance are
applied uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionError, SingularMatrixError

#: Relative tolerance (smallest singular value over largest) below which a
#: matrix is treated as singular.
SINGULAR_RTOL = 1e-12


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size and not np.all(np.isfinite(a)):
        raise DimensionError(f"{name} has non-finite entries")
    return a


def _square(m, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def mat_exp(m, t: float = 1.0) -> np.ndarray:
    """Return ``exp(t * m)``.

    Scaling and squaring with a Pade core (``scipy.linalg.expm``).
    """
    a = _square(m)
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0.0 or a.size == 0:
        return np.eye(a.shape[0])
    return scipy.linalg.expm(t * a)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    radius: float
    abscissa: float


def spectrum(m) -> Spectrum:
    a = _square(m)
    if a.size == 0:
        return Spectrum(np.zeros(0, dtype=complex), 0.0, -np.inf)
    # geev balances by default
    ev = np.linalg.eigvals(a)
    return Spectrum(ev, float(np.max(np.abs(ev))), float(np.max(ev.real)))


def spectral_radius(m) -> float:
    return spectrum(m).radius


def spectral_abscissa(m) -> float:
    return spectrum(m).abscissa


def operator_norm(m) -> float:
    """Induced Euclidean norm (largest singular value)."""
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def block_truncate(q, rows: int, cols: int) -> np.ndarray:
    """Top-left ``rows x cols`` block of ``q``."""
    a = as_matrix(q)
    if not (0 <= rows <= a.shape[0] and 0 <= cols <= a.shape[1]):
        raise DimensionError(
            f"cannot truncate {a.shape[0]}x{a.shape[1]} matrix to {rows}x{cols}"
        )
    return a[:rows, :cols].copy()


def block_partition(m, l: int):
    """Split a square matrix into ``(A, B, C, D)`` with ``A`` of size ``l x l``."""
    a = _square(m)
    d = a.shape[0]
    if not 1 <= l <= d - 1:
        raise DimensionError(f"block size l={l} out of range [1, {d - 1}]")
    return (
        a[:l, :l].copy(),
        a[:l, l:].copy(),
        a[l:, :l].copy(),
        a[l:, l:].copy(),
    )


def block_assemble(A, B, C, D) -> np.ndarray:
    return np.block([[A, B], [C, D]])


def condition_number(m) -> float:
    a = _square(m)
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] == 0.0:
        return np.inf
    return float(s[0] / s[-1])


def invert(m, name: str = "matrix", with_condition: bool = False):
    """Inverse of a square matrix.

    Raises SingularMatrixError when the smallest singular value is below
    ``SINGULAR_RTOL`` times the largest. With ``with_condition=True`` the
    2-norm condition number is returned alongside the inverse.
    """
    a = _square(m, name)
    if a.size == 0:
        return (a.copy(), 1.0) if with_condition else a.copy()
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= SINGULAR_RTOL * s[0]:
        raise SingularMatrixError(f"{name} is singular (sigma_min/sigma_max <= {SINGULAR_RTOL:g})")
    inv = np.linalg.inv(a)
    if with_condition:
        return inv, float(s[0] / s[-1])
    return inv


def is_hurwitz(m, margin: float = 0.0) -> bool:
    return spectral_abscissa(m) < -margin


def numerical_rank(m, rtol: float = 1e-10) -> int:
    a = as_matrix(m)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))
