"""Lyapunov exponent bounds by search over weighted product words.

For a weighted set ``{(N_j, t_j)}`` the quantity of interest is

    sup over words w of  log rho(Pi_w) / |w|,     Pi_w = N_k ... N_1.

Every word gives a certified lower bound (its periodic extension is an
admissible signal). The search is breadth-first with a fixed beam width per
level, so a deeper search never changes what earlier levels explored. A node
is dropped only when the mediant bound

    max(a / T, max_j (a + m b_j) / (T + m t_j))

(``a`` the log-norm of the node, ``T`` its weight, ``b_j = log ||N_j||`` and
``m`` the remaining depth) cannot beat the incumbent, so pruning never loses
a better lower bound. When no beam cut or budget stop happened, every word of
the maximal length is covered by either a frontier node or a pruned ancestor,
and ``max(incumbent, frontier log-norm rates)`` bounds the growth rate of the
grid-restricted system from above (``upper_closed``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import _kernels, linalg
from .chang import reduced_mode
from .errors import PremiseError
from .model import SystemFamily, d_hurwitz_check, epsilon_generator
from .reduced import (
    GeneratorFamily,
    JumpSet,
    TimeGrid,
    TransientFactor,
    build_generators,
    jump_set,
    sample_transients,
)

log = logging.getLogger(__name__)

DEFAULT_DEPTH = 10
DEFAULT_BUDGET = 2_000_000
MAX_BEAM = 2000
MIN_BEAM = 16
RHO_TOL = 1e-12
RATE_TOL = 1e-8
_LOG2 = math.log(2.0)
_BIG = 2.0**400

TARGETS = ("Sigma-eps", "Sigma-bar", "Sigma-hat", "Sigma-tilde")


@dataclass(frozen=True, eq=False)
class WeightedSet:
    """Flat list of weighted letters ready for the search.

    ``first``/``last`` are the modes at both ends of each letter; they only
    matter when ``forbid_self_switch`` is set.
    """

    matrices: np.ndarray
    weights: np.ndarray
    first: np.ndarray
    last: np.ndarray
    forbid_self_switch: bool = False
    names: tuple[str, ...] = ()

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError("matrices must have shape (n, d, d)")
        if w.shape != (mats.shape[0],) or np.any(w <= 0):
            raise ValueError("weights must be positive, one per matrix")
        if mats.shape[0] == 0:
            raise ValueError("empty generator set")
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "first", np.asarray(self.first, dtype=np.int64))
        object.__setattr__(self, "last", np.asarray(self.last, dtype=np.int64))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[np.ndarray, float]]) -> "WeightedSet":
        mats = [np.asarray(m, dtype=float) for m, _ in pairs]
        n = len(mats)
        return cls(np.array(mats), np.array([t for _, t in pairs]), np.arange(n), np.arange(n),
                   False, tuple(f"N{j}" for j in range(n)))

    @classmethod
    def from_generators(cls, g: GeneratorFamily) -> "WeightedSet":
        n_t, n_g = g.letters.shape[:2]
        pts = g.grid.array
        mats = g.letters.reshape(n_t * n_g, g.d, g.d)
        weights = np.tile(pts, n_t)
        first = np.repeat([t.first_mode for t in g.templates], n_g)
        last = np.repeat([t.last_mode for t in g.templates], n_g)
        names = tuple(f"{t.description}@{p:g}" for t in g.templates for p in pts)
        return cls(mats, weights, first, last, g.family.forbid_self_switch, names)

    def __len__(self):
        return self.matrices.shape[0]


@dataclass(frozen=True, eq=False)
class ProductWord:
    """Letters in application order; ``product = N_k ... N_1`` (unshifted)."""

    letters: tuple[int, ...]
    weights: tuple[float, ...]
    names: tuple[str, ...]
    product: np.ndarray
    log_scale: float = 0.0
    modes: tuple[int, ...] = ()

    @property
    def total_time(self) -> float:
        return float(sum(self.weights))

    def rate(self) -> float:
        return (_kernels.log_rho(self.product) + self.log_scale) / self.total_time

    def to_dict(self) -> dict[str, Any]:
        return {
            "letters": [
                {"index": i, "weight": w, "name": n, "mode": m}
                for i, w, n, m in zip(self.letters, self.weights, self.names,
                                      self.modes or (None,) * len(self.letters))
            ],
            "total_time": self.total_time,
        }


@dataclass(frozen=True, eq=False)
class ExponentEstimate:
    certified_lower: float
    heuristic_upper: float
    abscissa_floor: float
    witness: ProductWord | None
    witness_kind: str
    depth_reached: int
    upper_closed: bool
    mu: float = 0.0
    label: str = ""
    diagnostics: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "mu": self.mu,
            "certified_lower": self.certified_lower,
            "heuristic_upper": self.heuristic_upper,
            "upper_closed": self.upper_closed,
            "abscissa_floor": self.abscissa_floor,
            "witness_kind": self.witness_kind,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "depth_reached": self.depth_reached,
            "verdict": verdict(self),
            "diagnostics": self.diagnostics,
        }


@dataclass(frozen=True, eq=False)
class _SearchResult:
    lower: float
    upper: float
    closed: bool
    witness: tuple[int, ...] | None
    depth_reached: int
    stats: dict[str, Any]


def _rescale(prods: np.ndarray, scale: np.ndarray):
    """Exact power-of-two renormalization of products that left a safe range."""
    big = np.max(np.abs(prods), axis=(1, 2))
    bad = (big > _BIG) | ((big < 1.0 / _BIG) & (big > 0))
    if np.any(bad):
        _, e = np.frexp(big[bad])
        prods[bad] = np.ldexp(prods[bad], -e[:, None, None])
        scale[bad] += e * _LOG2
    return prods, scale


def _beam_width(n_letters: int, budget: int) -> int:
    return int(min(MAX_BEAM, max(MIN_BEAM, budget // (DEFAULT_DEPTH * max(1, n_letters)))))


def search_words(
    ws: WeightedSet,
    depth: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
    beam: int | None = None,
    incumbent: float = -math.inf,
    backend: str | None = None,
) -> _SearchResult:
    """Branch-and-bound over words of length <= depth (unshifted letters)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    L, d = ws.matrices.shape[0], ws.matrices.shape[1]
    beam = _beam_width(L, budget) if beam is None else int(beam)
    letters = np.ascontiguousarray(ws.matrices)
    w = ws.weights
    forbid = ws.forbid_self_switch
    with np.errstate(divide="ignore"):
        b = np.log(np.linalg.norm(letters, ord=2, axis=(1, 2)))
    # per distinct weight, the largest letter log-norm (for the mediant bound)
    uw, inv = np.unique(w, return_inverse=True)
    bmax = np.full(uw.shape, -np.inf)
    np.maximum.at(bmax, inv, b)

    prods = np.eye(d)[None].copy()
    scale = np.zeros(1)
    times = np.zeros(1)
    first = np.full(1, -1, dtype=np.int64)
    last = np.full(1, -1, dtype=np.int64)
    history: list[tuple[np.ndarray, np.ndarray]] = []

    best = incumbent
    best_word: tuple[int, ...] | None = None
    frontier = -math.inf
    closed = True
    evals = 0
    depth_reached = 0
    stats: dict[str, Any] = {"levels": [], "beam": beam, "budget_exhausted": False, "beam_cut": False}

    for k in range(1, depth + 1):
        P = prods.shape[0]
        if P == 0:
            break
        if evals + P * L > budget:
            stats["budget_exhausted"] = True
            closed = False
            with np.errstate(divide="ignore", invalid="ignore"):
                ln0 = np.log(np.linalg.norm(prods, ord=2, axis=(1, 2))) + scale
            frontier = max(frontier, float(np.max(ln0 / times)))
            break
        ln, lr = _kernels.expand(prods, letters, backend)
        evals += P * L
        ln = ln + scale[:, None]
        lr = lr + scale[:, None]
        T = times[:, None] + w[None, :]
        if forbid:
            adm = (last[:, None] == -1) | (last[:, None] != ws.first[None, :])
            head = np.where(first[:, None] == -1, ws.first[None, :], first[:, None])
            wrap = ws.last[None, :] != head
        else:
            adm = np.ones((P, L), dtype=bool)
            wrap = adm
        with np.errstate(invalid="ignore"):
            val = np.where(adm & wrap, lr / T, -np.inf)
        flat = int(np.argmax(val))
        level_best = float(val.flat[flat])
        if level_best > best:
            best = level_best
            p, q = divmod(flat, L)
            best_word = _trace(history, p) + (q,)
        depth_reached = k
        alive = adm & np.isfinite(ln)
        with np.errstate(invalid="ignore"):
            rate = np.where(alive, ln / T, -np.inf)
        m = depth - k
        if m == 0:
            if np.any(alive):
                frontier = max(frontier, float(np.max(rate)))
            stats["levels"].append({"depth": k, "nodes": P * L, "best": level_best, "kept": 0})
            break
        ext = _extension_bound(ln, T, m, bmax, uw)
        bound = np.maximum(rate, ext)
        keep = alive & (bound > best)
        idx = np.flatnonzero(keep)
        if idx.size > beam:
            order = np.argsort(-rate.flat[idx], kind="stable")
            cut = idx[order[beam:]]
            frontier = max(frontier, float(np.max(rate.flat[cut])))
            idx = np.sort(idx[order[:beam]])
            closed = False
            stats["beam_cut"] = True
        stats["levels"].append({"depth": k, "nodes": P * L, "best": level_best, "kept": int(idx.size)})
        pp, qq = np.divmod(idx, L)
        history.append((pp, qq))
        prods = np.matmul(letters[qq], prods[pp])
        scale = scale[pp].copy()
        prods, scale = _rescale(prods, scale)
        times = T.flat[idx]
        first = np.where(first[pp] == -1, ws.first[qq], first[pp])
        last = ws.last[qq]

    stats["evaluations"] = evals
    upper = max(best, frontier)
    return _SearchResult(best, upper, closed, best_word, depth_reached, stats)


def _extension_bound(ln, T, m, bmax, uw, chunk: int = 1 << 22):
    """``max_j (ln + m b_j) / (T + m t_j)`` elementwise, in row chunks."""
    out = np.empty_like(ln)
    rows = max(1, chunk // max(1, ln.shape[1] * uw.size))
    mb, mt = m * bmax, m * uw
    with np.errstate(invalid="ignore"):
        for lo in range(0, ln.shape[0], rows):
            a = ln[lo:lo + rows, :, None]
            t = T[lo:lo + rows, :, None]
            out[lo:lo + rows] = np.max((a + mb) / (t + mt), axis=2)
    return out


def refine_upper(
    ws: WeightedSet,
    upper: float,
    depth: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
    beam: int | None = None,
    passes: int = 8,
    backend: str | None = None,
) -> tuple[float, bool, list[dict[str, Any]]]:
    """Certify an upper bound by pruning against a threshold.

    A search whose incumbent starts at ``theta`` drops every node whose
    extensions cannot exceed ``theta``; if it closes, ``max(theta, frontier)``
    bounds the growth rate of the grid-restricted system. ``theta`` is raised
    from the open estimate ``upper`` until a pass closes, then bisected back
    down. Returns ``(bound, closed, trail)``; ``bound`` is ``upper`` when no
    pass closed.
    """
    trail: list[dict[str, Any]] = []
    if not math.isfinite(upper):
        return upper, False, trail
    step = 0.1 * max(1.0, abs(upper))
    lo, hi = upper, None
    for _ in range(passes):
        theta = lo + step if hi is None else 0.5 * (lo + hi)
        res = search_words(ws, depth, budget, beam, incumbent=theta, backend=backend)
        trail.append({"theta": theta, "closed": res.closed, "bound": res.upper})
        if res.closed:
            hi = res.upper if hi is None else min(hi, res.upper)
        else:
            lo = theta
            if hi is None:
                step *= 2.0
        if hi is not None and hi - lo <= 1e-2 * max(1.0, abs(hi)):
            break
    if hi is None:
        return upper, False, trail
    return hi, True, trail


def _trace(history, p: int) -> tuple[int, ...]:
    word = []
    for pp, qq in reversed(history):
        word.append(int(qq[p]))
        p = int(pp[p])
    return tuple(reversed(word))


def make_word(ws: WeightedSet, letters: Sequence[int]) -> ProductWord:
    d = ws.matrices.shape[1]
    prod = np.eye(d)
    scale = 0.0
    for q in letters:
        prod = ws.matrices[q] @ prod
        big = np.max(np.abs(prod))
        if big > _BIG or 0 < big < 1.0 / _BIG:
            _, e = np.frexp(big)
            prod = np.ldexp(prod, -e)
            scale += e * _LOG2
    names = tuple(ws.names[q] if ws.names else f"N{q}" for q in letters)
    return ProductWord(tuple(int(q) for q in letters), tuple(float(ws.weights[q]) for q in letters),
                       names, prod, scale, tuple(int(ws.first[q]) for q in letters))


def mu_estimate(
    g: GeneratorFamily | WeightedSet,
    depth: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
    beam: int | None = None,
    mu: float | None = None,
    backend: str | None = None,
) -> ExponentEstimate:
    """Bounds on ``sup log rho(Pi_w) / |w|`` over words of the set.

    The shift ``mu`` (taken from the generator family unless given) is added
    to both bounds: every letter of weight t scales by exp(mu t), so every
    word rate moves by exactly mu.
    """
    if isinstance(g, GeneratorFamily):
        ws = WeightedSet.from_generators(g)
        mu = g.mu if mu is None else mu
        label = g.label
    else:
        ws, label = g, "custom"
        mu = 0.0 if mu is None else mu
    res = search_words(ws, depth, budget, beam, backend=backend)
    witness = make_word(ws, res.witness) if res.witness is not None else None
    return ExponentEstimate(
        res.lower + mu, res.upper + mu, -math.inf, witness, "word" if witness else "none",
        res.depth_reached, res.closed, mu, label, res.stats,
    )


def replay_witness(est: ExponentEstimate) -> float:
    """Recompute the rate of the witness word from its stored product."""
    if est.witness is None:
        return est.certified_lower
    return est.witness.rate() + est.mu


@dataclass(frozen=True, eq=False)
class BoundednessVerdict:
    status: str
    certificate: dict[str, Any]
    label: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "status": self.status, "certificate": self.certificate}


FINITE_CHECK_MAX = 4096
MAX_JUMP_DEPTH = 64
SAME_TOL = 1e-10


def _same(a: np.ndarray, fa, la, b: np.ndarray, fb, lb) -> np.ndarray:
    """Pairwise equality (relative SAME_TOL, matching end tags) of two stacks."""
    diff = np.max(np.abs(a[:, None] - b[None, :]), axis=(-2, -1))
    size = np.maximum(1.0, np.maximum(np.max(np.abs(a), axis=(1, 2))[:, None],
                                      np.max(np.abs(b), axis=(1, 2))[None, :]))
    return (diff <= SAME_TOL * size) & (fa[:, None] == fb[None, :]) & (la[:, None] == lb[None, :])


def _distinct(prods, first, last) -> np.ndarray:
    eq = _same(prods, first, last, prods, first, last)
    dup = np.any(np.tril(eq, -1), axis=1)
    return np.flatnonzero(~dup)


def _contained(prods, first, last, seen) -> np.ndarray:
    out = np.zeros(prods.shape[0], dtype=bool)
    for sp, sf, sl in seen:
        out |= np.any(_same(prods, first, last, sp, sf, sl), axis=1)
    return out


def classify_discrete(
    y: JumpSet | Sequence[np.ndarray], depth: int | None = None, max_nodes: int = 200_000,
    backend: str | None = None,
) -> BoundednessVerdict:
    """Boundedness of the discrete semigroup generated by a jump set.

    Unbounded: an admissible cyclic product has spectral radius > 1 + 1e-12.
    Bounded: for some k every admissible product of length k has norm
    <= 1 + 1e-12 (then every product is a string of such blocks times a
    bounded remainder), or every product of length k already occurred at a
    shorter length (the semigroup is finite). Otherwise Inconclusive.

    With ``depth=None`` levels are added while the next level stays within
    ``max_nodes`` (at most ``MAX_JUMP_DEPTH``); with an explicit depth the
    widest levels are pruned to ``max_nodes`` by spectral radius instead.
    """
    if not isinstance(y, JumpSet):
        mats = tuple(np.asarray(m, dtype=float) for m in y)
        n = len(mats)
        y = JumpSet("custom", mats, tuple(range(n)), tuple(range(n)))
    auto = depth is None
    depth = MAX_JUMP_DEPTH if auto else depth
    if depth < 1:
        raise ValueError("depth must be >= 1")
    mats = np.array(y.members)
    Lm, d = mats.shape[0], mats.shape[1]
    f_tag = np.array(y.first_modes)
    l_tag = np.array(y.last_modes)
    forbid = y.forbid_self_switch
    ones = np.ones(Lm)
    ws = WeightedSet(mats, ones, f_tag, l_tag, forbid)

    prods = np.eye(d)[None].copy()
    scale = np.zeros(1)
    first = np.full(1, -1, dtype=np.int64)
    last = np.full(1, -1, dtype=np.int64)
    history: list = []
    seen: list = []
    complete = True
    best_rho = (-math.inf, None)
    for k in range(1, depth + 1):
        P = prods.shape[0]
        if P == 0:
            return BoundednessVerdict("Bounded", {"kind": "nilpotent", "depth": k - 1}, y.label)
        ln, lr = _kernels.expand(prods, mats, backend)
        ln = ln + scale[:, None]
        lr = lr + scale[:, None]
        if forbid:
            adm = (last[:, None] == -1) | (last[:, None] != f_tag[None, :])
            head = np.where(first[:, None] == -1, f_tag[None, :], first[:, None])
            wrap = l_tag[None, :] != head
        else:
            adm = np.ones((P, Lm), dtype=bool)
            wrap = adm
        rate = np.where(adm & wrap, lr / k, -np.inf)
        flat = int(np.argmax(rate))
        if rate.flat[flat] > best_rho[0]:
            p, q = divmod(flat, Lm)
            best_rho = (float(rate.flat[flat]), _trace(history, p) + (q,))
        if best_rho[0] > math.log1p(RHO_TOL):
            word = make_word(ws, best_rho[1])
            return BoundednessVerdict(
                "Unbounded",
                {"kind": "product", "letters": list(best_rho[1]),
                 "spectral_radius": float(np.exp(_kernels.log_rho(word.product) + word.log_scale))},
                y.label,
            )
        alive = adm & np.isfinite(ln)
        if complete:
            top = float(np.max(np.where(adm, ln, -np.inf)))
            if top <= math.log1p(RHO_TOL):
                return BoundednessVerdict(
                    "Bounded", {"kind": "norm", "depth": k, "max_norm": float(np.exp(top))}, y.label
                )
        idx = np.flatnonzero(alive)
        if auto and idx.size * Lm > max_nodes and k < depth:
            depth = k
            break
        if idx.size > max_nodes:
            order = np.argsort(-lr.flat[idx], kind="stable")
            idx = np.sort(idx[order[:max_nodes]])
            complete = False
        pp, qq = np.divmod(idx, Lm)
        new = np.matmul(mats[qq], prods[pp])
        nfirst = np.where(first[pp] == -1, f_tag[qq], first[pp])
        nlast = l_tag[qq]
        if complete and not np.any(scale) and new.shape[0] <= FINITE_CHECK_MAX:
            keep = _distinct(new, nfirst, nlast)
            pp, qq, new, nfirst, nlast = pp[keep], qq[keep], new[keep], nfirst[keep], nlast[keep]
            fresh = ~_contained(new, nfirst, nlast, seen)
            if not np.any(fresh):
                return BoundednessVerdict(
                    "Bounded",
                    {"kind": "finite", "depth": k, "elements": int(sum(s[0].shape[0] for s in seen))},
                    y.label,
                )
            seen.append((new[fresh], nfirst[fresh], nlast[fresh]))
        history.append((pp, qq))
        scale = scale[pp].copy()
        prods, scale = _rescale(new, scale)
        first, last = nfirst, nlast
    return BoundednessVerdict(
        "Inconclusive",
        {"kind": "none", "depth": depth, "best_log_rho_rate": best_rho[0]},
        y.label,
    )


def verdict(est: ExponentEstimate) -> str:
    """``EU`` if the certified lower bound exceeds ``RATE_TOL``, ``ES`` if the
    upper bound is below ``-RATE_TOL`` and closed, otherwise ``Inconclusive``.
    The margin absorbs rounding in word rates that are exactly zero."""
    if est.certified_lower > RATE_TOL:
        return "EU"
    if est.heuristic_upper < -RATE_TOL and est.upper_closed:
        return "ES"
    return "Inconclusive"


def _require_d_hurwitz(family: SystemFamily, target: str):
    bad = [r for r in d_hurwitz_check(family) if not r.passed]
    if bad:
        names = ", ".join(f"mode {r.mode_index} (abscissa {r.abscissa:.4g})" for r in bad)
        raise PremiseError(f"{target} needs Hurwitz fast blocks; fails for {names}")


def default_grid(family: SystemFamily, target: str) -> TimeGrid:
    if target in ("Sigma-eps", "Sigma-bar"):
        return TimeGrid.log_spaced(family.tau)
    if target == "Sigma-hat":
        return TimeGrid.log_spaced(0.0)
    return TimeGrid.log_spaced(0.0, per_decade=4)


def lambda_estimate(
    family: SystemFamily,
    target: str,
    eps: float = 0.0,
    mu: float = 0.0,
    depth: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
    grid: TimeGrid | None = None,
    transients: Sequence[TransientFactor] | None = None,
    beam: int | None = None,
    jump_depth: int | None = None,
    backend: str | None = None,
    refine: bool = True,
) -> ExponentEstimate:
    """Maximal Lyapunov exponent bounds for one of the four systems.

    ``Sigma-eps`` and ``Sigma-bar`` honour the family dwell time; ``Sigma-hat``
    and ``Sigma-tilde`` are defined without dwell time. The bound is the max
    of the abscissa floor (``alpha(Gamma)``, ``alpha(M)`` or 0) and the word
    search. With no dwell time and an unbounded jump semigroup the exponent
    is reported as +inf. An open upper bound is tightened by
    :func:`refine_upper` unless ``refine`` is off.
    """
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got {target!r}")
    if target != "Sigma-eps":
        _require_d_hurwitz(family, target)
    elif not eps > 0:
        raise ValueError("Sigma-eps needs eps > 0")

    which = {"Sigma-eps": "N-eps", "Sigma-bar": "N-bar", "Sigma-hat": "N-hat", "Sigma-tilde": "N-tilde"}[target]
    jumps_label = {"Sigma-eps": "R", "Sigma-hat": "R", "Sigma-bar": "R-bar", "Sigma-tilde": "R-tilde"}[target]
    tau = family.tau if target in ("Sigma-eps", "Sigma-bar") else 0.0
    if target == "Sigma-tilde" and transients is None:
        transients = sample_transients(family)

    diagnostics: dict[str, Any] = {"target": target, "tau": tau, "eps": eps}
    closed_ok = True
    if tau == 0:
        jv = classify_discrete(jump_set(family, jumps_label, transients), depth=jump_depth, backend=backend)
        diagnostics["jumps"] = jv.to_dict()
        if jv.status == "Unbounded":
            return ExponentEstimate(math.inf, math.inf, math.nan, None, "jump", 0, True, mu,
                                    target, diagnostics)
        closed_ok = jv.status == "Bounded"

    if target == "Sigma-eps":
        floors = [linalg.spectral_abscissa(epsilon_generator(m, eps)) for m in family.modes]
    elif target == "Sigma-hat":
        floors = [0.0] * len(family)
    else:
        floors = [linalg.spectral_abscissa(reduced_mode(m).M) for m in family.modes]
    i_floor = int(np.argmax(floors))
    floor = floors[i_floor] + mu

    grid = default_grid(family, target) if grid is None else grid
    g = build_generators(family, which, eps=eps, mu=mu, grid=grid, transients=transients,
                         allow_nonfinite=True)
    ws = WeightedSet.from_generators(g)
    ok = np.all(np.isfinite(ws.matrices), axis=(1, 2)) & (np.max(np.abs(ws.matrices), axis=(1, 2)) < 1e300)
    if not np.all(ok):
        # fast growth overflows the largest weights; keep the finite letters
        diagnostics["dropped_letters"] = int(np.sum(~ok))
        ws = WeightedSet(ws.matrices[ok], ws.weights[ok], ws.first[ok], ws.last[ok],
                         ws.forbid_self_switch, tuple(n for n, k in zip(ws.names, ok) if k))
        closed_ok = False
    res = search_words(ws, depth, budget, beam, incumbent=floor - mu, backend=backend)
    diagnostics.update(res.stats)
    diagnostics["grid_points"] = len(grid)
    diagnostics["letters"] = len(ws)
    diagnostics["jump_semigroup_bounded"] = closed_ok if tau == 0 else None

    word_lower = -math.inf
    witness = None
    if res.witness is not None:
        witness = make_word(ws, res.witness)
        word_lower = res.lower + mu
    if witness is not None and word_lower >= floor:
        lower, kind = word_lower, "word"
    else:
        lower, kind = floor, "abscissa"
        diagnostics["floor_mode"] = i_floor
        witness = None
    upper = max(floor, res.upper + mu)
    closed = res.closed
    if not closed and refine:
        up, closed, trail = refine_upper(ws, upper - mu, depth, budget, beam, backend=backend)
        upper = max(floor, up + mu)
        diagnostics["upper_refinement"] = trail
    return ExponentEstimate(lower, upper, floor, witness, kind, res.depth_reached,
                            closed and closed_ok, mu, target, diagnostics)


def lambda_tilde_hat(
    family: SystemFamily,
    depth: int = DEFAULT_DEPTH,
    budget: int = DEFAULT_BUDGET,
    grid: TimeGrid | None = None,
    beam: int | None = None,
    backend: str | None = None,
) -> ExponentEstimate:
    """Growth rate of the fast-time system sampled at switching times only.

    Words over the fast-time generators without the zero floor: the lower
    bound comes from spectral radii of words, the upper bound from norms.
    """
    _require_d_hurwitz(family, "Sigma-hat")
    grid = TimeGrid.log_spaced(0.0) if grid is None else grid
    g = build_generators(family, "N-hat", grid=grid)
    est = mu_estimate(g, depth, budget, beam, backend=backend)
    return ExponentEstimate(est.certified_lower, est.heuristic_upper, -math.inf, est.witness,
                            est.witness_kind, est.depth_reached, est.upper_closed, 0.0,
                            "Sigma-hat (switching times)", est.diagnostics)
