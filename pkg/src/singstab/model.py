"""Mode families of singularly perturbed impulsive switched systems.

A mode is a tuple ``(l, P, Lambda, R)``: on an interval where it is active the
state obeys ``E_l(eps) P x' = Lambda x`` (the first ``l`` rows are slow, the
remaining ``d - l`` rows are multiplied by ``eps``), and when the mode is left
the state jumps through ``R``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import AdmissibilityError, DimensionError

log = logging.getLogger(__name__)

#: Condition number of P above which a warning (not an error) is attached.
P_CONDITION_WARN = 1e8


@dataclass(frozen=True, eq=False)
class Mode:
    l: int
    P: np.ndarray
    Lambda: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        P = linalg.as_matrix(self.P, "P")
        Lam = linalg.as_matrix(self.Lambda, "Lambda")
        R = linalg.as_matrix(self.R, "R")
        d = P.shape[0]
        for name, a in (("P", P), ("Lambda", Lam), ("R", R)):
            if a.shape != (d, d):
                raise DimensionError(f"{name} has shape {a.shape}, expected ({d}, {d})")
        if d < 2:
            raise DimensionError("state dimension d must be at least 2")
        if int(self.l) != self.l or not 1 <= self.l <= d - 1:
            raise DimensionError(f"l out of range [1, d-1] = [1, {d - 1}]: got {self.l}")
        P_inv, cond = linalg.invert(P, "P", with_condition=True)
        for a in (P, Lam, R, P_inv):
            a.setflags(write=False)
        object.__setattr__(self, "l", int(self.l))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Lambda", Lam)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "_P_inv", P_inv)
        object.__setattr__(self, "_P_cond", cond)

    @property
    def d(self) -> int:
        return self.P.shape[0]

    @property
    def P_inv(self) -> np.ndarray:
        return self._P_inv

    @property
    def P_condition(self) -> float:
        return self._P_cond

    def __eq__(self, other):
        if not isinstance(other, Mode):
            return NotImplemented
        return (
            self.l == other.l
            and np.array_equal(self.P, other.P)
            and np.array_equal(self.Lambda, other.Lambda)
            and np.array_equal(self.R, other.R)
        )

    def __hash__(self):
        return hash((self.l, self.P.tobytes(), self.Lambda.tobytes(), self.R.tobytes()))

    def replace(self, **changes) -> "Mode":
        kw = dict(l=self.l, P=self.P, Lambda=self.Lambda, R=self.R)
        kw.update(changes)
        return Mode(**kw)


@dataclass(frozen=True)
class AbcdBlocks:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def assemble(self) -> np.ndarray:
        return linalg.block_assemble(self.A, self.B, self.C, self.D)


@dataclass(frozen=True)
class SystemFamily:
    """Finite mode set with a dwell time.

    ``forbid_self_switch`` restricts signals to consecutive pieces with
    distinct modes. The default allows repeats, in which case the jump of the
    departing mode is still applied at every switching time.
    """

    modes: tuple[Mode, ...]
    tau: float = 0.0
    forbid_self_switch: bool = False
    name: str = ""
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        modes = tuple(self.modes)
        if not modes:
            raise DimensionError("a family needs at least one mode")
        d = modes[0].d
        for i, m in enumerate(modes):
            if m.d != d:
                raise DimensionError(f"mode {i} has d={m.d}, expected {d}")
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ValueError(f"tau must be finite and >= 0, got {self.tau}")
        if self.forbid_self_switch and len(modes) < 2:
            raise ValueError("forbid_self_switch needs at least two modes")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def d(self) -> int:
        return self.modes[0].d

    def __len__(self):
        return len(self.modes)

    def with_tau(self, tau: float) -> "SystemFamily":
        return SystemFamily(self.modes, tau, self.forbid_self_switch, self.name, self.warnings)

    def with_forbid_self_switch(self, flag: bool) -> "SystemFamily":
        return SystemFamily(self.modes, self.tau, flag, self.name, self.warnings)

    def with_warnings(self, warnings: Sequence[str]) -> "SystemFamily":
        return SystemFamily(self.modes, self.tau, self.forbid_self_switch, self.name, tuple(warnings))


@dataclass(frozen=True)
class SwitchingSignal:
    """Finitely many switches: ``pieces`` are ``(mode, duration)`` pairs and
    ``final_mode`` stays active after the last switching time."""

    pieces: tuple[tuple[int, float], ...]
    final_mode: int

    def __post_init__(self):
        pieces = tuple((int(m), float(t)) for m, t in self.pieces)
        for k, (_, t) in enumerate(pieces):
            if not (np.isfinite(t) and t > 0):
                raise AdmissibilityError(f"piece {k} has non-positive duration {t}")
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "final_mode", int(self.final_mode))

    @property
    def switching_times(self) -> np.ndarray:
        return np.cumsum([t for _, t in self.pieces]) if self.pieces else np.zeros(0)

    @property
    def mode_sequence(self) -> list[int]:
        return [m for m, _ in self.pieces] + [self.final_mode]

    def mode_at(self, t: float) -> int:
        """Active mode at time ``t`` (right-continuous)."""
        times = self.switching_times
        k = int(np.searchsorted(times, t, side="right"))
        return self.mode_sequence[k]

    def check_admissible(self, family: SystemFamily) -> None:
        n = len(family)
        seq = self.mode_sequence
        for k, m in enumerate(seq):
            if not 0 <= m < n:
                raise AdmissibilityError(f"mode index {m} at piece {k} outside [0, {n - 1}]")
        for k, (_, t) in enumerate(self.pieces):
            if t < family.tau:
                raise AdmissibilityError(
                    f"piece {k} lasts {t:g} < dwell time tau={family.tau:g}"
                )
        if family.forbid_self_switch:
            for k in range(len(seq) - 1):
                if seq[k] == seq[k + 1]:
                    raise AdmissibilityError(f"self-switch of mode {seq[k]} at switch {k + 1}")

    def is_admissible(self, family: SystemFamily) -> bool:
        try:
            self.check_admissible(family)
        except AdmissibilityError:
            return False
        return True


def scaled_mask(d: int, l: int, eps: float, complement: bool = False) -> np.ndarray:
    """``diag(1,..,1, eps,..,eps)`` with ``l`` ones, or the complement
    ``diag(eps,..,eps, 1,..,1)`` when ``complement`` is set."""
    if not 1 <= l <= d - 1:
        raise DimensionError(f"l out of range [1, {d - 1}]: got {l}")
    if eps < 0 or (eps == 0 and not complement):
        raise ValueError("eps must be > 0 (eps = 0 only for the complement mask)")
    diag = np.full(d, float(eps))
    if complement:
        diag[l:] = 1.0
    else:
        diag[:l] = 1.0
    return np.diag(diag)


def abcd_split(mode: Mode) -> AbcdBlocks:
    """Blocks of ``Lambda P^-1`` split at ``l``."""
    return AbcdBlocks(*linalg.block_partition(mode.Lambda @ mode.P_inv, mode.l))


@dataclass(frozen=True)
class DHurwitzResult:
    mode_index: int
    abscissa: float
    passed: bool


def d_hurwitz_check(family: SystemFamily) -> list[DHurwitzResult]:
    out = []
    for i, m in enumerate(family.modes):
        a = linalg.spectral_abscissa(abcd_split(m).D)
        out.append(DHurwitzResult(i, a, bool(a < 0)))
    return out


def d_hurwitz(family: SystemFamily) -> bool:
    return all(r.passed for r in d_hurwitz_check(family))


def epsilon_generator(mode: Mode, eps: float) -> np.ndarray:
    """Generator ``G`` with ``x' = G x`` equivalent to ``E_l(eps) P x' = Lambda x``."""
    if not eps > 0:
        raise ValueError("eps must be > 0")
    E = scaled_mask(mode.d, mode.l, eps, complement=True)
    return (mode.P_inv @ (E @ mode.Lambda)) / eps


def slow_limit_matrix(mode: Mode) -> np.ndarray:
    """``P^-1 E_{l^c}(0) Lambda``: ``Lambda`` with its first ``l`` rows zeroed."""
    E0 = scaled_mask(mode.d, mode.l, 0.0, complement=True)
    return mode.P_inv @ (E0 @ mode.Lambda)
