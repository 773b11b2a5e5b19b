"""Built-in families and random family generators."""

from __future__ import annotations

import numpy as np

from . import linalg
from .model import Mode, SystemFamily

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def example_jumps(r: float) -> tuple[np.ndarray, np.ndarray]:
    R1 = np.array([[2 * r, 2 * r], [r, r]])
    R2 = np.array([[-2 * r, -2 * r], [r, r]])
    return R1, R2


def two_mode_example(r: float = 0.45, variant: str = "printed", forbid_self_switch: bool = False) -> SystemFamily:
    """Planar two-mode example with rank-one jumps scaled by ``r``.

    ``variant="printed"`` uses the second mode exactly as published, whose
    fast block is D = +1 (not Hurwitz). ``variant="swapped"`` replaces its
    Lambda by ``[[1, -1], [-1, -1]]`` so that both modes share the blocks
    A = -1, B = 1, C = -1, D = -1 with the variables exchanged.
    """
    R1, R2 = example_jumps(r)
    m1 = Mode(1, np.eye(2), np.array([[-1.0, 1.0], [-1.0, -1.0]]), R1)
    if variant == "printed":
        lam2 = np.array([[-1.0, -1.0], [1.0, -1.0]])
    elif variant == "swapped":
        lam2 = np.array([[1.0, -1.0], [-1.0, -1.0]])
    else:
        raise ValueError(f"unknown variant {variant!r}")
    m2 = Mode(1, SWAP, lam2, R2)
    return SystemFamily((m1, m2), 0.0, forbid_self_switch, f"two-mode example ({variant}, r={r:g})")


def classic(tau: float = 1.0) -> SystemFamily:
    """One mode, l = 1, P = R = I, Lambda = [[-1, 1], [1, -2]]; M = -0.5."""
    m = Mode(1, np.eye(2), np.array([[-1.0, 1.0], [1.0, -2.0]]), np.eye(2))
    return SystemFamily((m,), tau, False, "classic")


def random_lambda(rng: np.random.Generator, d: int, l: int, margin: float = 1.0) -> np.ndarray:
    """Gaussian ``Lambda P^-1`` blocks (variance 1/d) with the fast block
    shifted so that ``alpha(D) <= -margin``."""
    G = rng.normal(scale=1.0 / np.sqrt(d), size=(d, d))
    a = linalg.spectral_abscissa(G[l:, l:])
    G[l:, l:] -= (a + margin + rng.uniform()) * np.eye(d - l)
    return G


def random_mode(
    rng: np.random.Generator,
    d: int | None = None,
    l: int | None = None,
    identity_P: bool = False,
    R: str | np.ndarray = "identity",
) -> Mode:
    """Random mode with a Hurwitz fast block.

    ``P = I + 0.3 G / sqrt(d)`` unless ``identity_P``; ``R`` is ``"identity"``,
    ``"gaussian"`` (entries of variance 1/d) or an explicit matrix.
    """
    d = int(rng.integers(2, 6)) if d is None else d
    l = int(rng.integers(1, d)) if l is None else l
    G = random_lambda(rng, d, l)
    P = np.eye(d) if identity_P else np.eye(d) + 0.3 * rng.normal(size=(d, d)) / np.sqrt(d)
    if isinstance(R, str):
        if R == "identity":
            Rm = np.eye(d)
        elif R == "gaussian":
            Rm = rng.normal(scale=1.0 / np.sqrt(d), size=(d, d))
        else:
            raise ValueError(f"unknown jump kind {R!r}")
    else:
        Rm = np.asarray(R, dtype=float)
    return Mode(l, P, G @ P, Rm)


def random_family(
    rng: np.random.Generator,
    n_modes: int = 2,
    d: int = 2,
    tau: float = 0.0,
    R: str = "gaussian",
    shared_l: int | None = None,
) -> SystemFamily:
    modes = tuple(
        random_mode(rng, d, shared_l if shared_l is not None else int(rng.integers(1, d)), R=R)
        for _ in range(n_modes)
    )
    return SystemFamily(modes, tau, False, "random")


def random_lyapunov_family(
    rng: np.random.Generator, n_modes: int = 2, d: int = 3, l: int = 2, tau: float = 1.0
) -> SystemFamily:
    """P = R = I, shared l, reduced matrices sharing the Lyapunov function |x|^2.

    Each reduced matrix is ``M = K - S`` with K skew and S symmetric positive
    definite, so ``M + M^T < 0``; the full Lambda is ``[[M + B D^-1 C, B], [C, D]]``.
    """
    modes = []
    for _ in range(n_modes):
        K = rng.normal(size=(l, l))
        K = 0.5 * (K - K.T)
        W = rng.normal(size=(l, l)) / np.sqrt(l)
        S = W @ W.T + (0.2 + rng.uniform()) * np.eye(l)
        M = K - S
        B = rng.normal(scale=1.0 / np.sqrt(d), size=(l, d - l))
        C = rng.normal(scale=1.0 / np.sqrt(d), size=(d - l, l))
        Dg = rng.normal(scale=1.0 / np.sqrt(d), size=(d - l, d - l))
        Dg -= (linalg.spectral_abscissa(Dg) + 1.0 + rng.uniform()) * np.eye(d - l)
        A = M + B @ np.linalg.solve(Dg, C)
        modes.append(Mode(l, np.eye(d), np.block([[A, B], [C, Dg]]), np.eye(d)))
    return SystemFamily(tuple(modes), tau, False, "random common-Lyapunov")
