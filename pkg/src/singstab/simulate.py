"""Exact piecewise-exponential simulation and decay fitting.

Every interval is propagated with ``expm((t - t_k) G)`` from the state at the
start of the interval, never by chaining steps, so sampling density does not
affect accuracy.

State carriers per target:

* ``Sigma-eps``: original coordinates, generator ``G^eps``, jump ``R``.
* ``Sigma-bar`` / ``Sigma-tilde``: slow coordinates ``(T0 x)_{:l}`` padded with
  zeros to length d, generator ``diag(M, 0)``, jump ``J`` (resp. ``J~`` with a
  transient factor) embedded in a d x d carrier.
* ``Sigma-hat``: ``T0 x`` in fast time, generator ``diag(0, D)``, jump
  ``T0_to R T0_from^-1``.
"""

from __future__ import annotations

import csv
import io as _io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .chang import reduced_mode
from .errors import AdmissibilityError, FitError, PremiseError
from .model import SwitchingSignal, SystemFamily, d_hurwitz_check, epsilon_generator
from .reduced import TransientFactor, bar_jump, tilde_jump

log = logging.getLogger(__name__)

TARGETS = ("Sigma-eps", "Sigma-bar", "Sigma-hat", "Sigma-tilde")


@dataclass(frozen=True)
class JumpEvent:
    time: float
    before: np.ndarray
    after: np.ndarray
    mode_from: int
    mode_to: int


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled flow. ``times`` is non-decreasing; a time appears twice exactly
    at a jump, first with the pre-jump state."""

    times: np.ndarray
    states: np.ndarray
    modes: np.ndarray
    jump_events: tuple[JumpEvent, ...]
    system_tag: str
    signal: SwitchingSignal
    eps: float | None = None

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def state_at(self, t: float, side: str = "right") -> np.ndarray:
        """Sampled state at exactly ``t`` (``side`` picks the post- or pre-jump row)."""
        idx = np.flatnonzero(np.isclose(self.times, t, rtol=0.0, atol=1e-12))
        if idx.size == 0:
            raise KeyError(f"time {t} was not sampled")
        return self.states[idx[-1] if side == "right" else idx[0]]

    def to_csv(self) -> str:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        d = self.states.shape[1]
        w.writerow(["t"] + [f"x{i + 1}" for i in range(d)] + ["mode"])
        for t, x, m in zip(self.times, self.states, self.modes):
            w.writerow([repr(float(t))] + [repr(float(v)) for v in x] + [int(m)])
        return buf.getvalue()

    def pair_table(self, i: int, j: int) -> str:
        """Two whitespace-separated columns ``x_i x_j`` (1-based), gnuplot style."""
        lines = [f"# x{i} x{j}"]
        lines += [f"{x[i - 1]!r} {x[j - 1]!r}" for x in self.states]
        return "\n".join(lines) + "\n"

    def to_svg(self, width: int = 640, height: int = 400) -> str:
        """Line plot of every coordinate against time."""
        t = self.times
        X = self.states
        lo, hi = float(np.min(X)), float(np.max(X))
        if hi - lo < 1e-300:
            hi, lo = lo + 1.0, lo - 1.0
        t0, t1 = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0
        pad = 30

        def px(tt, xx):
            u = pad + (tt - t0) / (t1 - t0) * (width - 2 * pad)
            v = height - pad - (xx - lo) / (hi - lo) * (height - 2 * pad)
            return f"{u:.2f},{v:.2f}"

        colours = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>',
            f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
            f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        ]
        for k in range(X.shape[1]):
            pts = " ".join(px(a, b) for a, b in zip(t, X[:, k]))
            parts.append(
                f'<polyline fill="none" stroke="{colours[k % len(colours)]}" stroke-width="1.2" points="{pts}"/>'
            )
            parts.append(
                f'<text x="{width - pad - 30}" y="{pad + 14 * (k + 1)}" fill="{colours[k % len(colours)]}">x{k + 1}</text>'
            )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"


@dataclass(frozen=True)
class DecayFit:
    rate: float
    intercept: float
    residual: float
    n_samples: int = field(default=0)


class _Carrier:
    """Per-target generator, jump map and initial embedding."""

    def __init__(self, family: SystemFamily, target: str, eps: float | None,
                 transients: Sequence[TransientFactor | np.ndarray | None] | None):
        self.family = family
        self.target = target
        self.eps = eps
        self.transients = transients
        d = family.d
        self.gens = []
        for i, m in enumerate(family.modes):
            if target == "Sigma-eps":
                self.gens.append(epsilon_generator(m, eps))
                continue
            rm = reduced_mode(m)
            G = np.zeros((d, d))
            if target == "Sigma-hat":
                G[m.l:, m.l:] = rm.D
            else:
                G[: m.l, : m.l] = rm.M
            self.gens.append(G)

    def embed(self, x0: np.ndarray, mode: int) -> np.ndarray:
        if self.target == "Sigma-eps":
            return x0.copy()
        m = self.family.modes[mode]
        y = reduced_mode(m).T0 @ x0
        if self.target == "Sigma-hat":
            return y
        out = np.zeros_like(y)
        out[: m.l] = y[: m.l]
        return out

    def jump(self, frm: int, to: int, k: int) -> np.ndarray:
        fam = self.family
        mf, mt = fam.modes[frm], fam.modes[to]
        d = fam.d
        if self.target == "Sigma-eps":
            return mf.R
        if self.target == "Sigma-hat":
            return reduced_mode(mt).T0 @ mf.R @ reduced_mode(mf).T0_inv
        if self.target == "Sigma-bar":
            J = bar_jump(mt, mf)
        else:
            F = None
            if self.transients is not None and k < len(self.transients):
                F = self.transients[k]
            J = tilde_jump(mt, mf, F)
        out = np.zeros((d, d))
        out[: mt.l, : mf.l] = J
        return out


def simulate(
    family: SystemFamily,
    signal: SwitchingSignal,
    target: str = "Sigma-eps",
    eps: float | None = None,
    x0: Sequence[float] | np.ndarray | None = None,
    t_end: float | None = None,
    dt_out: float = 0.01,
    transients: Sequence[TransientFactor | np.ndarray | None] | None = None,
    check_dwell: bool = True,
) -> Trajectory:
    """Flow of ``target`` along ``signal`` from ``x0`` on ``[0, t_end]``.

    For ``Sigma-hat`` the durations of ``signal`` and ``t_end`` are fast time.
    ``transients`` gives, for ``Sigma-tilde``, the factor inserted at each
    switch (``None`` entries mean the identity). ``Sigma-hat`` and
    ``Sigma-tilde`` ignore the dwell time; set ``check_dwell=False`` to skip
    it for the others too.
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}")
    if target == "Sigma-eps":
        if eps is None or not eps > 0:
            raise ValueError("Sigma-eps needs eps > 0")
    else:
        bad = [r.mode_index for r in d_hurwitz_check(family) if not r.passed]
        if bad:
            raise PremiseError(f"{target} needs Hurwitz fast blocks; fails for modes {bad}")
    if check_dwell and target in ("Sigma-eps", "Sigma-bar"):
        signal.check_admissible(family)
    else:
        signal.check_admissible(family.with_tau(0.0))
    if not dt_out > 0:
        raise ValueError("dt_out must be > 0")
    d = family.d
    x0 = np.ones(d) if x0 is None else linalg.as_matrix(np.asarray(x0, dtype=float).reshape(d, 1), "x0")[:, 0]
    switch_times = signal.switching_times
    if t_end is None:
        t_end = float(switch_times[-1]) if len(switch_times) else 1.0
    if not t_end > 0:
        raise ValueError("t_end must be > 0")

    car = _Carrier(family, target, eps, transients)
    seq = signal.mode_sequence
    bounds = [0.0] + [float(s) for s in switch_times if s < t_end] + [float(t_end)]
    times, states, modes, events = [], [], [], []
    state = car.embed(x0, seq[0])
    for k in range(len(bounds) - 1):
        a, b = bounds[k], bounds[k + 1]
        m = seq[k]
        G = car.gens[m]
        n = max(1, int(math.floor((b - a) / dt_out + 1e-9)))
        offs = np.arange(n + 1) * dt_out
        offs = offs[offs < (b - a) - 1e-12]
        offs = np.append(offs, b - a)
        for h in offs:
            times.append(a + h)
            states.append(linalg.mat_exp(G, h) @ state if h > 0 else state.copy())
            modes.append(m)
        end_state = states[-1]
        if k < len(bounds) - 2:
            nxt = seq[k + 1]
            after = car.jump(m, nxt, k) @ end_state
            events.append(JumpEvent(b, end_state.copy(), after.copy(), m, nxt))
            state = after
    return Trajectory(
        np.asarray(times), np.asarray(states), np.asarray(modes, dtype=int),
        tuple(events), target, signal, eps,
    )


def make_periodic_signal(modes: Sequence[int], piece: float, t_end: float, tau: float = 0.0) -> SwitchingSignal:
    """Cycle through ``modes`` with pieces of length ``piece`` until ``t_end``."""
    if not modes:
        raise ValueError("need at least one mode")
    if not piece > 0:
        raise AdmissibilityError("piece must be > 0")
    if piece < tau:
        raise AdmissibilityError(f"piece {piece:g} < dwell time tau={tau:g}")
    n = int(math.ceil(t_end / piece - 1e-9))
    pieces = tuple((modes[k % len(modes)], float(piece)) for k in range(n))
    return SwitchingSignal(pieces, modes[n % len(modes)])


def make_random_signal(
    seed: int, tau: float, mean_extra: float, t_end: float, n_modes: int = 2
) -> SwitchingSignal:
    """Durations ``tau + Exp(mean_extra)`` and uniform modes, until ``t_end``."""
    if tau < 0 or not mean_extra > 0:
        raise ValueError("need tau >= 0 and mean_extra > 0")
    rng = np.random.default_rng(seed)
    pieces = []
    total = 0.0
    while total < t_end:
        dur = tau + rng.exponential(mean_extra)
        if dur <= 0:
            continue
        pieces.append((int(rng.integers(n_modes)), float(dur)))
        total += dur
    return SwitchingSignal(tuple(pieces), int(rng.integers(n_modes)))


def signal_from_word(word, repeats: int) -> SwitchingSignal:
    """Periodic signal that replays a witness word ``repeats`` times.

    Only meaningful for words over single-mode letters (``N-eps``, ``N-bar``,
    ``N-hat``), whose first mode is the active mode of the piece.
    """
    if repeats < 1 or not word.modes:
        raise ValueError("need repeats >= 1 and a word with mode tags")
    pieces = tuple(zip(word.modes, word.weights)) * repeats
    return SwitchingSignal(pieces, word.modes[0])


def fit_decay(tr: Trajectory, window: tuple[float, float] | None = None) -> DecayFit:
    """Least-squares slope of ``log |X(t)|`` over samples with ``t`` in ``window``."""
    t = tr.times
    lo, hi = window if window is not None else (t[0], t[-1])
    sel = (t >= lo) & (t <= hi)
    if int(sel.sum()) < 10:
        raise FitError(f"only {int(sel.sum())} samples in window [{lo}, {hi}]; need 10")
    norms = tr.norms[sel]
    if np.any(norms == 0):
        raise FitError("state vanished exactly inside the fit window")
    y = np.log(norms)
    X = np.column_stack([t[sel], np.ones(y.size)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = float(np.sqrt(np.mean((X @ coef - y) ** 2)))
    return DecayFit(float(coef[0]), float(coef[1]), resid, int(y.size))
