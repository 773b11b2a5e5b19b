"""Auxiliary single-scale systems and their weighted generator sets.

Four generator sets are built here, each a finite list of templates evaluated
on a time grid:

* ``N-eps``   ``R T^-1 exp(t Gamma) T``                 (full system at fixed eps)
* ``N-hat``   ``R T^-1 diag(I, exp(s D)) T``            (fast time s)
* ``N-bar``   ``R T^-1 diag(exp(t M), 0) T``            (reduced system)
* ``N-tilde`` ``F R T^-1 diag(exp(t M), 0) T``          (F a sampled transient factor)

Here ``T`` is the eps = 0 transform except for ``N-eps``. A word
``N_k ... N_1`` has weight ``t_1 + ... + t_k``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .chang import build_transform, reduced_mode
from .errors import DimensionError
from .model import Mode, SystemFamily

log = logging.getLogger(__name__)

LABELS = ("N-eps", "N-hat", "N-bar", "N-tilde")
DEFAULT_S_GRID = (0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0)
DEFAULT_N_MAX = 2
DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """Sorted admissible time weights.

    The default grid takes the global log-spaced points ``10**(k/per_decade)``
    inside ``[max(tau, t_min), t_max]`` and adds ``tau`` itself, so grids for
    different dwell times nest whenever ``tau`` is itself a grid point.
    """

    points: tuple[float, ...]
    tau: float = 0.0

    def __post_init__(self):
        pts = tuple(sorted(set(float(p) for p in self.points)))
        if not pts:
            raise ValueError("time grid is empty")
        if pts[0] <= 0 or pts[0] < self.tau:
            raise ValueError(f"grid points must be > 0 and >= tau={self.tau:g}")
        object.__setattr__(self, "points", pts)

    @classmethod
    def log_spaced(cls, tau: float = 0.0, per_decade: int = 24, t_min: float = 1e-3, t_max: float = 50.0):
        lo = max(tau, t_min)
        if lo > t_max:
            return cls((lo,), tau)
        k0 = int(np.floor(per_decade * np.log10(lo)))
        k1 = int(np.ceil(per_decade * np.log10(t_max)))
        pts = [10.0 ** (k / per_decade) for k in range(k0, k1 + 1)]
        pts = [p for p in pts if lo <= p <= t_max]
        if tau > 0:
            pts.append(tau)
        return cls(tuple(pts) or (lo,), tau)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.points)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True, eq=False)
class TransientFactor:
    """``X_n ... X_1`` with ``X_i = R_i T_i^-1 diag(I, exp(s_i D_i)) T_i``.

    ``recipe`` lists ``(mode, s)`` in application order; the empty recipe is
    the identity.
    """

    recipe: tuple[tuple[int, float], ...]
    matrix: np.ndarray

    @property
    def first_mode(self) -> int | None:
        return self.recipe[0][0] if self.recipe else None

    @property
    def last_mode(self) -> int | None:
        return self.recipe[-1][0] if self.recipe else None

    def describe(self) -> str:
        if not self.recipe:
            return "I"
        return "*".join(f"X({m},s={s:g})" for m, s in reversed(self.recipe))


def _fast_factor(mode: Mode, s: float) -> np.ndarray:
    rm = reduced_mode(mode)
    mid = np.eye(mode.d)
    mid[mode.l:, mode.l:] = linalg.mat_exp(rm.D, s)
    return mode.R @ rm.T0_inv @ mid @ rm.T0


def transient_factor(family: SystemFamily, recipe: Sequence[tuple[int, float]]) -> TransientFactor:
    F = np.eye(family.d)
    for m, s in recipe:
        if not s > 0:
            raise ValueError("transient durations must be > 0")
        F = _fast_factor(family.modes[m], s) @ F
    F.setflags(write=False)
    return TransientFactor(tuple((int(m), float(s)) for m, s in recipe), F)


def sample_transients(
    family: SystemFamily,
    n_max: int = DEFAULT_N_MAX,
    s_grid: Sequence[float] = DEFAULT_S_GRID,
) -> list[TransientFactor]:
    """Identity plus every factor with at most ``n_max`` pieces from ``s_grid``.

    Near-duplicates (2-norm distance <= 1e-12) are dropped, keeping the first
    in enumeration order. With ``forbid_self_switch`` recipes never repeat a
    mode on consecutive pieces and duplicates are only merged when their
    first and last modes agree.
    """
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    forbid = family.forbid_self_switch
    pieces = [(m, float(s)) for m in range(len(family)) for s in s_grid]
    out = [transient_factor(family, ())]
    for n in range(1, n_max + 1):
        for recipe in itertools.product(pieces, repeat=n):
            if forbid and any(recipe[i][0] == recipe[i + 1][0] for i in range(n - 1)):
                continue
            f = transient_factor(family, recipe)
            dup = False
            for g in out:
                if forbid and (g.first_mode, g.last_mode) != (f.first_mode, f.last_mode):
                    continue
                if np.linalg.norm(g.matrix - f.matrix, 2) <= DEDUP_TOL:
                    dup = True
                    break
            if not dup:
                out.append(f)
    return out


def bar_projector(mode: Mode) -> np.ndarray:
    """``R T^-1 diag(I_l, 0) T``."""
    rm = reduced_mode(mode)
    return mode.R @ rm.T0_inv[:, : mode.l] @ rm.T0[: mode.l, :]


def bar_jump(to: Mode, frm: Mode) -> np.ndarray:
    """``(T_to R_from T_from^-1)`` truncated to ``l_to x l_from``."""
    if to.d != frm.d:
        raise DimensionError("modes have different state dimensions")
    full = reduced_mode(to).T0 @ frm.R @ reduced_mode(frm).T0_inv
    return linalg.block_truncate(full, to.l, frm.l)


def tilde_jump(to: Mode, frm: Mode, factor: TransientFactor | np.ndarray | None = None) -> np.ndarray:
    """``(T_to F R_from T_from^-1)`` truncated to ``l_to x l_from``."""
    if factor is None:
        return bar_jump(to, frm)
    F = factor.matrix if isinstance(factor, TransientFactor) else linalg.as_matrix(factor)
    full = reduced_mode(to).T0 @ F @ frm.R @ reduced_mode(frm).T0_inv
    return linalg.block_truncate(full, to.l, frm.l)


@dataclass(frozen=True)
class Template:
    id: int
    mode: int
    factor: int | None
    first_mode: int
    last_mode: int
    description: str


@dataclass(frozen=True, eq=False)
class GeneratorFamily:
    """Finite set of weighted generators, one template per (mode[, factor]).

    ``letters`` holds the unshifted matrices on the grid with shape
    ``(n_templates, n_grid, d, d)``; the shift ``mu`` multiplies a letter of
    weight ``t`` by ``exp(mu t)`` and is applied in :meth:`evaluate`.
    """

    label: str
    family: SystemFamily
    eps: float
    mu: float
    grid: TimeGrid
    templates: tuple[Template, ...]
    letters: np.ndarray
    transients: tuple[TransientFactor, ...] = field(default=())

    @property
    def tau(self) -> float:
        return self.grid.tau

    @property
    def d(self) -> int:
        return self.family.d

    def evaluate(self, template_id: int, t: float, shifted: bool = True) -> np.ndarray:
        tpl = self.templates[template_id]
        if t < self.tau:
            raise ValueError(f"weight {t:g} below tau={self.tau:g}")
        mat = _member(self.label, self.family, tpl.mode, self.eps, t,
                      self.transients[tpl.factor].matrix if tpl.factor is not None else None)
        return mat * np.exp(self.mu * t) if shifted and self.mu else mat

    def letter(self, template_id: int, grid_index: int, shifted: bool = True) -> np.ndarray:
        t = self.grid.points[grid_index]
        mat = self.letters[template_id, grid_index]
        return mat * np.exp(self.mu * t) if shifted and self.mu else mat.copy()

    def with_mu(self, mu: float) -> "GeneratorFamily":
        return GeneratorFamily(self.label, self.family, self.eps, float(mu), self.grid,
                               self.templates, self.letters, self.transients)


def _member(label: str, family: SystemFamily, i: int, eps: float, t: float, F=None) -> np.ndarray:
    mode = family.modes[i]
    l, d = mode.l, mode.d
    if label == "N-eps":
        ch = build_transform(mode, eps, mode_index=i)
        return mode.R @ ch.T_inv @ linalg.mat_exp(ch.Gamma, t) @ ch.T
    rm = reduced_mode(mode)
    mid = np.zeros((d, d))
    if label == "N-hat":
        mid[:l, :l] = np.eye(l)
        mid[l:, l:] = linalg.mat_exp(rm.D, t)
    elif label in ("N-bar", "N-tilde"):
        mid[:l, :l] = linalg.mat_exp(rm.M, t)
    else:
        raise ValueError(f"unknown generator label {label!r}")
    out = mode.R @ rm.T0_inv @ mid @ rm.T0
    if label == "N-tilde" and F is not None:
        out = F @ out
    return out


def build_generators(
    family: SystemFamily,
    which: str,
    eps: float = 0.0,
    mu: float = 0.0,
    grid: TimeGrid | None = None,
    transients: Sequence[TransientFactor] | None = None,
    allow_nonfinite: bool = False,
) -> GeneratorFamily:
    """Evaluate one generator set on a grid.

    ``N-eps`` needs ``eps > 0``; ``N-tilde`` uses ``transients`` (sampled with
    defaults when omitted). Letters that overflow raise ``FloatingPointError``
    unless ``allow_nonfinite`` is set.
    """
    if which not in LABELS:
        raise ValueError(f"which must be one of {LABELS}, got {which!r}")
    if which == "N-eps" and not eps > 0:
        raise ValueError("N-eps needs eps > 0")
    if grid is None:
        grid = TimeGrid.log_spaced(family.tau if which in ("N-eps", "N-bar") else 0.0)
    n = len(family)
    templates = []
    factors: tuple[TransientFactor, ...] = ()
    if which == "N-tilde":
        factors = tuple(sample_transients(family) if transients is None else transients)
        for i in range(n):
            for k, f in enumerate(factors):
                if family.forbid_self_switch and f.first_mode == i:
                    continue
                last = i if f.last_mode is None else f.last_mode
                templates.append(Template(len(templates), i, k, i, last, f"{f.describe()}*Nbar({i})"))
    else:
        for i in range(n):
            templates.append(Template(i, i, None, i, i, f"{which}({i})"))

    pts = grid.points
    d = family.d
    letters = np.empty((len(templates), len(pts), d, d))
    if which == "N-tilde":
        base = np.array([[_member("N-bar", family, i, 0.0, t) for t in pts] for i in range(n)])
        for tpl in templates:
            letters[tpl.id] = factors[tpl.factor].matrix @ base[tpl.mode]
    else:
        with np.errstate(over="ignore", invalid="ignore"):
            for tpl in templates:
                for j, t in enumerate(pts):
                    letters[tpl.id, j] = _member(which, family, tpl.mode, eps, t)
    if not allow_nonfinite and not np.all(np.isfinite(letters)):
        raise FloatingPointError(f"{which}: non-finite generator on the grid")
    letters.setflags(write=False)
    return GeneratorFamily(which, family, float(eps), float(mu), grid, tuple(templates), letters, factors)


@dataclass(frozen=True, eq=False)
class JumpSet:
    label: str
    members: tuple[np.ndarray, ...]
    first_modes: tuple[int, ...]
    last_modes: tuple[int, ...]
    forbid_self_switch: bool = False

    def __len__(self):
        return len(self.members)


def jump_set(
    family: SystemFamily, which: str, transients: Sequence[TransientFactor] | None = None
) -> JumpSet:
    """``R`` (the raw jumps), ``R-bar`` (``R T^-1 diag(I,0) T``) or
    ``R-tilde`` (``F`` times ``R-bar`` over sampled transients)."""
    forbid = family.forbid_self_switch
    n = len(family)
    if which == "R":
        mats = [m.R for m in family.modes]
        tags = [(i, i) for i in range(n)]
    elif which == "R-bar":
        mats = [bar_projector(m) for m in family.modes]
        tags = [(i, i) for i in range(n)]
    elif which == "R-tilde":
        factors = sample_transients(family) if transients is None else transients
        mats, tags = [], []
        for i, m in enumerate(family.modes):
            rb = bar_projector(m)
            for f in factors:
                if forbid and f.first_mode == i:
                    continue
                mats.append(f.matrix @ rb)
                tags.append((i, i if f.last_mode is None else f.last_mode))
    else:
        raise ValueError(f"unknown jump set {which!r}")
    mats = [np.array(a, dtype=float) for a in mats]
    for a in mats:
        a.setflags(write=False)
    return JumpSet(which, tuple(mats), tuple(t[0] for t in tags), tuple(t[1] for t in tags), forbid)
