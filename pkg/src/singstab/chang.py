"""Block-triangularizing change of coordinates for a two-scale mode.

With ``H = D^-1 C + eps Q`` and ``T = [[I, 0], [H, I]] P`` the generator
``G = P^-1 E_{l^c}(eps) Lambda / eps`` becomes

    T G T^-1 = [[A - B H,  B           ],
                [0,        D / eps + H B]]

provided the lower-left coupling ``H (A - B H) + (C - D H) / eps`` vanishes,
i.e. ``D Q = H (A - B H)``. At ``eps = 0`` this gives ``Q0 = D^-2 C M`` with
``M = A - B D^-1 C``.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import linalg
from .errors import SingularMatrixError, TransformConvergenceError
from .model import Mode, abcd_split, epsilon_generator

log = logging.getLogger(__name__)

MAX_ITER = 200
NEWTON_ITER = 50


def default_tol(mode: Mode) -> float:
    return 1e-12 * (1.0 + linalg.operator_norm(mode.Lambda))


def _blocks(mode: Mode):
    b = abcd_split(mode)
    try:
        D_inv = linalg.invert(b.D, "D")
    except SingularMatrixError:
        raise SingularMatrixError("fast block D is singular; the transform is undefined") from None
    return b.A, b.B, b.C, b.D, D_inv


def _equation_residual(A, B, D, H, Q):
    return D @ Q - H @ (A - B @ H)


def _newton(A, B, D, DiC, eps, Q, tol):
    """Newton steps on ``f(Q) = D Q - H (A - B H)``.

    The derivative in direction ``dQ`` is ``(D + eps H B) dQ - dQ eps (A - B H)``,
    a Sylvester operator.
    """
    for _ in range(NEWTON_ITER):
        H = DiC + eps * Q
        f = _equation_residual(A, B, D, H, Q)
        res = np.linalg.norm(f)
        if res <= tol:
            return Q, res
        try:
            dQ = scipy.linalg.solve_sylvester(D + eps * H @ B, -eps * (A - B @ H), -f)
        except (np.linalg.LinAlgError, ValueError):
            return Q, res
        if not np.all(np.isfinite(dQ)):
            return Q, res
        Q = Q + dQ
    H = DiC + eps * Q
    return Q, np.linalg.norm(_equation_residual(A, B, D, H, Q))


def _slow_subspace_guess(A, B, C, D, DiC, eps):
    """``Q`` from the invariant subspace of the l slowest eigenvalues.

    Any invariant subspace of ``[[A, B], [C/eps, D/eps]]`` that is a graph
    ``[I; -H]`` solves the coupling equation; ordering the Schur form by real
    part picks the slow one.
    """
    l = A.shape[0]
    F = np.block([[A, B], [C / eps, D / eps]])
    ev = np.linalg.eigvals(F)
    cut = np.sort(ev.real)[::-1][l - 1]
    _, Z, sdim = scipy.linalg.schur(F, output="real", sort=lambda re, im: re >= cut)
    if sdim != l:
        return None
    X1, X2 = Z[:l, :l], Z[l:, :l]
    try:
        H = -np.linalg.solve(X1.T, X2.T).T
    except np.linalg.LinAlgError:
        return None
    return (H - DiC) / eps


def solve_Q(mode: Mode, eps: float, tol: float | None = None, mode_index: int = 0) -> np.ndarray:
    """Solve the coupling-elimination equation for ``Q``.

    Fixed-point iteration ``Q <- D^-1 H (A - B H)`` from the closed form at
    ``eps = 0``. If it fails to reach ``tol`` the solver switches to Newton
    steps (warm-started from the best iterate, then from the slow invariant
    subspace) before giving up.
    """
    if eps < 0 or not np.isfinite(eps):
        raise ValueError("eps must be finite and >= 0")
    A, B, C, D, D_inv = _blocks(mode)
    DiC = D_inv @ C
    M = A - B @ DiC
    Q0 = D_inv @ (D_inv @ (C @ M))
    if eps == 0:
        return Q0
    tol = default_tol(mode) if tol is None else tol

    Q = Q0
    best, best_res = Q0, np.inf
    for _ in range(MAX_ITER):
        H = DiC + eps * Q
        res = np.linalg.norm(_equation_residual(A, B, D, H, Q))
        if not np.isfinite(res):
            break
        if res < best_res:
            best, best_res = Q, res
        if res <= tol:
            return Q
        Q = D_inv @ (H @ (A - B @ H))
        if not np.all(np.isfinite(Q)):
            break

    Q, res = _newton(A, B, D, DiC, eps, best, tol)
    if res <= tol:
        log.debug("Q for eps=%g reached by Newton refinement", eps)
        return Q
    guess = _slow_subspace_guess(A, B, C, D, DiC, eps)
    if guess is not None:
        Q, res = _newton(A, B, D, DiC, eps, guess, tol)
        if res <= tol:
            log.debug("Q for eps=%g reached from the slow invariant subspace", eps)
            return Q
    raise TransformConvergenceError(
        mode_index, eps, f"coupling residual {min(res, best_res):.3g} did not reach {tol:.3g}"
    )


@dataclass(frozen=True, eq=False)
class ChangData:
    mode: Mode
    eps: float
    Q: np.ndarray
    T: np.ndarray
    T_inv: np.ndarray
    Gamma: np.ndarray | None
    residual: float

    def gamma(self, mu: float = 0.0) -> np.ndarray:
        """Shifted generator ``Gamma + mu I`` (requires eps > 0)."""
        if self.Gamma is None:
            raise ValueError("Gamma is undefined at eps = 0; use reduced_mode")
        return self.Gamma + mu * np.eye(self.Gamma.shape[0])


def _freeze(*arrays):
    for a in arrays:
        if a is not None:
            a.setflags(write=False)


@functools.lru_cache(maxsize=4096)
def _build_cached(mode: Mode, eps: float, mode_index: int) -> ChangData:
    A, B, C, D, D_inv = _blocks(mode)
    Q = solve_Q(mode, eps, mode_index=mode_index)
    H = D_inv @ C + eps * Q
    l, d = mode.l, mode.d
    L = np.eye(d)
    L[l:, :l] = H
    L_inv = np.eye(d)
    L_inv[l:, :l] = -H
    T = L @ mode.P
    T_inv = mode.P_inv @ L_inv
    if eps == 0:
        _freeze(Q, T, T_inv)
        return ChangData(mode, 0.0, Q, T, T_inv, None, 0.0)
    Gamma = np.zeros((d, d))
    Gamma[:l, :l] = A - B @ H
    Gamma[:l, l:] = B
    Gamma[l:, l:] = D / eps + H @ B
    coupled = eps * (T @ epsilon_generator(mode, eps) @ T_inv)
    residual = float(np.linalg.norm(coupled[l:, :l], 2))
    _freeze(Q, T, T_inv, Gamma)
    return ChangData(mode, float(eps), Q, T, T_inv, Gamma, residual)


def build_transform(mode: Mode, eps: float, mode_index: int = 0) -> ChangData:
    """Transform bundle for one mode; cached per (mode, eps)."""
    if eps < 0 or not np.isfinite(eps):
        raise ValueError("eps must be finite and >= 0")
    return _build_cached(mode, float(eps), mode_index)


@dataclass(frozen=True, eq=False)
class ReducedMode:
    l: int
    M: np.ndarray
    T0: np.ndarray
    T0_inv: np.ndarray
    D: np.ndarray
    R: np.ndarray

    @property
    def d(self) -> int:
        return self.T0.shape[0]

    def M_shift(self, mu: float = 0.0) -> np.ndarray:
        return self.M + mu * np.eye(self.l)


@functools.lru_cache(maxsize=1024)
def reduced_mode(mode: Mode) -> ReducedMode:
    """Slow matrix ``M = A - B D^-1 C`` and the limit transform ``T0``."""
    A, B, C, D, D_inv = _blocks(mode)
    M = A - B @ (D_inv @ C)
    ch = build_transform(mode, 0.0)
    _freeze(M)
    return ReducedMode(mode.l, M, ch.T, ch.T_inv, D, mode.R)
