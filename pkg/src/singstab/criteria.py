"""Stability criteria evaluated numerically, with the estimates they rely on.

Every conclusion records which premises were checked and which bounds it
used. A conclusion is only ``applied`` when all of its premises hold; a
failed premise gives ``violated-premise`` and an undecided bound gives
``inconclusive``. Claims about "small enough eps" are never certified: the
report shows the trend of the measured ``Sigma-eps`` bounds over an eps grid
as a consistency flag.
"""

from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import linalg
from .chang import build_transform, reduced_mode
from .errors import PremiseError, SingularMatrixError, TransformConvergenceError
from .exponents import (
    ExponentEstimate,
    WeightedSet,
    classify_discrete,
    lambda_estimate,
    lambda_tilde_hat,
    replay_witness,
    search_words,
    make_word,
    verdict,
)
from .model import Mode, SystemFamily, d_hurwitz_check, slow_limit_matrix
from .reduced import TimeGrid, bar_jump, jump_set
from .simulate import fit_decay, make_random_signal, simulate

log = logging.getLogger(__name__)

DEFAULT_EPS_GRID = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
TAU_SEARCH_MIN = 1e-4
APPLIED, VIOLATED, INCONCLUSIVE = "applied", "violated-premise", "inconclusive"


@dataclass
class Conclusion:
    claim: str
    status: str
    statement: str
    justification: str
    evidence: dict[str, Any] = field(default_factory=dict)
    consistency: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "claim": self.claim,
            "status": self.status,
            "statement": self.statement,
            "justification": self.justification,
            "evidence": self.evidence,
            "consistency": self.consistency,
        }


def fingerprint(family: SystemFamily) -> str:
    h = hashlib.sha256()
    h.update(f"{family.tau!r}|{family.forbid_self_switch}".encode())
    for m in family.modes:
        h.update(str(m.l).encode())
        for a in (m.P, m.Lambda, m.R):
            h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()[:16]


def _est_dict(e: ExponentEstimate | None) -> dict[str, Any] | None:
    return None if e is None else e.to_dict()


class Estimates:
    """Memoised exponent estimates for one family."""

    def __init__(self, family: SystemFamily, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                 depth: int = 8, budget: int = 300_000, backend: str | None = None):
        self.family = family
        self.eps_grid = tuple(sorted((float(e) for e in eps_grid), reverse=True))
        self.depth = depth
        self.budget = budget
        self.backend = backend
        self._cache: dict[Any, Any] = {}
        self.dh = d_hurwitz_check(family)
        self.d_hurwitz = all(r.passed for r in self.dh)

    def _memo(self, key, fn):
        if key not in self._cache:
            try:
                self._cache[key] = fn()
            except (PremiseError, TransformConvergenceError, SingularMatrixError, FloatingPointError) as exc:
                log.info("%s unavailable: %s", key, exc)
                self._cache[key] = exc
        val = self._cache[key]
        return None if isinstance(val, Exception) else val

    def error(self, key) -> str | None:
        val = self._cache.get(key)
        return str(val) if isinstance(val, Exception) else None

    def jumps(self, label: str):
        return self._memo(("jumps", label), lambda: classify_discrete(
            jump_set(self.family, label), backend=self.backend))

    def bar(self, tau: float | None = None) -> ExponentEstimate | None:
        fam = self.family if tau is None else self.family.with_tau(tau)
        return self._memo(("bar", fam.tau), lambda: lambda_estimate(
            fam, "Sigma-bar", depth=self.depth, budget=self.budget, backend=self.backend))

    def hat(self):
        return self._memo(("hat",), lambda: lambda_estimate(
            self.family, "Sigma-hat", depth=self.depth, budget=self.budget, backend=self.backend))

    def tilde_hat(self):
        return self._memo(("tilde-hat",), lambda: lambda_tilde_hat(
            self.family, depth=self.depth, budget=self.budget, backend=self.backend))

    def tilde(self):
        return self._memo(("tilde",), lambda: lambda_estimate(
            self.family, "Sigma-tilde", depth=min(self.depth, 6), budget=self.budget, backend=self.backend))

    def eps(self, eps: float, family: SystemFamily | None = None):
        fam = self.family if family is None else family
        return self._memo(("eps", float(eps), fam.tau), lambda: lambda_estimate(
            fam, "Sigma-eps", eps=eps, depth=self.depth, budget=self.budget, backend=self.backend))

    def eps_table(self, family: SystemFamily | None = None) -> list[dict[str, Any]]:
        rows = []
        for e in self.eps_grid:
            est = self.eps(e, family)
            rows.append({
                "eps": e,
                "certified_lower": None if est is None else est.certified_lower,
                "heuristic_upper": None if est is None else est.heuristic_upper,
                "upper_closed": None if est is None else est.upper_closed,
                "verdict": None if est is None else verdict(est),
                "error": self.error(("eps", float(e), (family or self.family).tau)),
            })
        return rows


def _trend(rows: list[dict[str, Any]], want: str) -> str:
    """Consistency flag from the smallest eps values of a table."""
    tail = [r for r in rows[-2:] if r["verdict"] is not None]
    if not tail:
        return "no Sigma-eps estimate available"
    if all(r["verdict"] == want for r in tail):
        return f"consistent: Sigma-eps {want} at the smallest eps of the grid (trend)"
    return f"not observed: Sigma-eps verdicts {[r['verdict'] for r in tail]} at the smallest eps (trend)"


def _dh_evidence(est: Estimates) -> list[dict[str, Any]]:
    return [{"mode": r.mode_index, "abscissa": r.abscissa, "passed": r.passed} for r in est.dh]


def _dh_failure(est: Estimates) -> str:
    bad = [f"mode {r.mode_index} (alpha(D) = {r.abscissa:.4g})" for r in est.dh if not r.passed]
    return "D-Hurwitz fails for " + ", ".join(bad)


# -- growth rate as eps -> 0 ------------------------------------------------


def prop1_check(family: SystemFamily, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                depth: int = 8, budget: int = 300_000, backend: str | None = None,
                estimates: Estimates | None = None) -> dict[str, Any]:
    """``eps * lambda(Sigma-eps)`` against ``max(0, lambda(Delta_Z))``.

    ``Delta_Z`` is the switched system with flows ``P^-1 E_{l^c}(0) Lambda``
    and the original jumps, on the family dwell time.
    """
    est = estimates or Estimates(family, eps_grid, depth, budget, backend)
    slows = [slow_limit_matrix(m) for m in family.modes]
    abscissas = [linalg.spectral_abscissa(s) for s in slows]
    floor = max(abscissas)

    grid = TimeGrid.log_spaced(family.tau)
    pairs, first = [], []
    for i, (m, S) in enumerate(zip(family.modes, slows)):
        for t in grid.points:
            pairs.append((m.R @ linalg.mat_exp(S, t), t))
            first.append(i)
    ws = WeightedSet(np.array([p for p, _ in pairs]), np.array([t for _, t in pairs]),
                     np.array(first), np.array(first), family.forbid_self_switch)
    delta: dict[str, Any] = {"jumps": None}
    if family.tau == 0:
        jv = classify_discrete(jump_set(family, "R"), backend=backend)
        delta["jumps"] = jv.to_dict()
    if delta["jumps"] is not None and delta["jumps"]["status"] == "Unbounded":
        delta.update(lower=math.inf, upper=math.inf)
    else:
        res = search_words(ws, depth, budget, incumbent=floor, backend=backend)
        delta.update(lower=max(floor, res.lower), upper=max(floor, res.upper), closed=res.closed)
        if res.witness is not None:
            delta["witness"] = make_word(ws, res.witness).to_dict()
    limit = (max(0.0, delta["lower"]), max(0.0, delta["upper"]))

    rows = []
    for r in est.eps_table():
        e = r["eps"]
        rows.append({
            "eps": e,
            "scaled_lower": None if r["certified_lower"] is None else e * r["certified_lower"],
            "scaled_upper": None if r["heuristic_upper"] is None else e * r["heuristic_upper"],
            "error": r["error"],
        })

    conclusions = []
    worst = int(np.argmax(abscissas))
    if floor > 1e-12:
        conclusions.append(Conclusion(
            "prop1-floor", APPLIED,
            f"Sigma-eps is EU for small eps; the slow-limit matrix of mode {worst} has abscissa {floor:.6g} > 0",
            "eps * lambda(Sigma-eps) tends to at least the largest slow-limit abscissa",
            {"mode": worst, "abscissa": floor},
            _trend(est.eps_table(), "EU"),
        ))
    else:
        conclusions.append(Conclusion(
            "prop1-floor", INCONCLUSIVE,
            "no slow-limit matrix has positive abscissa",
            f"largest slow-limit abscissa is {floor:.3g}; the limit of eps * lambda is max(0, lambda(Delta_Z))",
            {"abscissa": floor},
        ))
    return {
        "slow_limit_abscissas": abscissas,
        "floor": floor,
        "delta": delta,
        "limit_bounds": list(limit),
        "eps_rows": rows,
        "conclusions": [c.to_dict() for c in conclusions],
        "_conclusions": conclusions,
    }


# -- necessary conditions (instability) --------------------------------------


def _witness_replays(e: ExponentEstimate) -> bool:
    if e.witness is None:
        return True
    return abs(replay_witness(e) - e.certified_lower) <= 1e-9 * max(1.0, abs(e.certified_lower))


def tau_search(est: Estimates, tau_max: float = 1.0, tau_min: float = TAU_SEARCH_MIN):
    """Halve the dwell time from ``tau_max`` until Sigma-bar is certified EU."""
    tau = tau_max
    tried = []
    while tau >= tau_min:
        b = est.bar(tau)
        tried.append({"tau": tau, "certified_lower": None if b is None else b.certified_lower})
        if b is not None and verdict(b) == "EU":
            return tau, b, tried
        tau /= 2
    return None, None, tried


def necessary_check(family: SystemFamily, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                    depth: int = 8, budget: int = 300_000, backend: str | None = None,
                    estimates: Estimates | None = None) -> list[Conclusion]:
    est = estimates or Estimates(family, eps_grid, depth, budget, backend)
    out: list[Conclusion] = []
    tau = family.tau

    # dwell time > 0: Sigma-bar EU => Sigma-eps EU
    stmt1 = "Sigma-eps is EU for every small enough eps"
    if not est.d_hurwitz:
        out.append(Conclusion("necessary-1", VIOLATED, stmt1, _dh_failure(est), {"d_hurwitz": _dh_evidence(est)}))
    elif tau == 0:
        out.append(Conclusion("necessary-1", VIOLATED, stmt1, "needs a positive dwell time"))
    else:
        b = est.bar()
        if b is not None and verdict(b) == "EU":
            out.append(Conclusion(
                "necessary-1", APPLIED, stmt1,
                f"lambda(Sigma-bar, tau={tau:g}) >= {b.certified_lower:.6g} > 0 ({b.witness_kind} witness)",
                {"Sigma-bar": _est_dict(b), "witness_replays": _witness_replays(b)},
                _trend(est.eps_table(), "EU"),
            ))
        else:
            out.append(Conclusion("necessary-1", INCONCLUSIVE, stmt1,
                                  "Sigma-bar is not certified EU", {"Sigma-bar": _est_dict(b)}))

    # no dwell time: bounded R and R-bar semigroups and Sigma-bar EU
    stmt2 = "Sigma-eps (no dwell time) is EU for every small enough eps"
    if tau > 0:
        out.append(Conclusion("necessary-2", VIOLATED, stmt2, "applies to families without dwell time"))
    elif not est.d_hurwitz:
        out.append(Conclusion("necessary-2", VIOLATED, stmt2, _dh_failure(est)))
    else:
        jr, jb = est.jumps("R"), est.jumps("R-bar")
        ev = {"R": jr.to_dict(), "R-bar": jb.to_dict()}
        if jr.status != "Bounded" or jb.status != "Bounded":
            out.append(Conclusion("necessary-2", VIOLATED, stmt2,
                                  f"jump semigroups: R {jr.status}, R-bar {jb.status}; both must be Bounded", ev))
        else:
            b = est.bar()
            ev["Sigma-bar"] = _est_dict(b)
            if b is not None and verdict(b) == "EU":
                out.append(Conclusion("necessary-2", APPLIED, stmt2,
                                      f"R and R-bar bounded and lambda(Sigma-bar) >= {b.certified_lower:.6g} > 0",
                                      ev, _trend(est.eps_table(), "EU")))
            else:
                out.append(Conclusion("necessary-2", INCONCLUSIVE, stmt2, "Sigma-bar is not certified EU", ev))

    # bounded R and Sigma-hat EU => growth of order 1/eps
    stmt3 = "Sigma-eps is EU with growth rate of order 1/eps"
    if not est.d_hurwitz:
        out.append(Conclusion("necessary-3", VIOLATED, stmt3, _dh_failure(est)))
    else:
        jr = est.jumps("R")
        if jr.status != "Bounded":
            out.append(Conclusion("necessary-3", VIOLATED, stmt3,
                                  f"jump semigroup of R is {jr.status}; it must be Bounded", {"R": jr.to_dict()}))
        else:
            h = est.hat()
            ev = {"R": jr.to_dict(), "Sigma-hat": _est_dict(h)}
            if h is not None and verdict(h) == "EU":
                rows = est.eps_table()
                scaled = [r["eps"] * r["certified_lower"] for r in rows if r["certified_lower"] is not None]
                out.append(Conclusion("necessary-3", APPLIED, stmt3,
                                      f"R bounded and lambda(Sigma-hat) >= {h.certified_lower:.6g} > 0",
                                      {**ev, "eps_times_lower": scaled}, _trend(rows, "EU")))
            else:
                out.append(Conclusion("necessary-3", INCONCLUSIVE, stmt3, "Sigma-hat is not certified EU", ev))

    # unbounded R-bar semigroup => Sigma-bar EU for some dwell time
    stmtr = "Sigma-bar is EU for some positive dwell time"
    if not est.d_hurwitz:
        out.append(Conclusion("jump-growth-small-tau", VIOLATED, stmtr, _dh_failure(est)))
    else:
        jb = est.jumps("R-bar")
        if jb.status != "Unbounded":
            out.append(Conclusion("jump-growth-small-tau", VIOLATED, stmtr,
                                  f"R-bar semigroup is {jb.status}; needs Unbounded", {"R-bar": jb.to_dict()}))
        else:
            t_found, b, tried = tau_search(est)
            ev = {"R-bar": jb.to_dict(), "tau_search": tried}
            if t_found is not None:
                ev["Sigma-bar"] = _est_dict(b)
                out.append(Conclusion("jump-growth-small-tau", APPLIED, f"{stmtr} (found tau = {t_found:g})",
                                      f"lambda(Sigma-bar, tau={t_found:g}) >= {b.certified_lower:.6g} > 0", ev))
            else:
                out.append(Conclusion("jump-growth-small-tau", INCONCLUSIVE, stmtr,
                                      f"no certified EU dwell time down to {TAU_SEARCH_MIN:g}", ev))
    return out


# -- sufficient conditions (stability) ---------------------------------------


def simulated_rates(family: SystemFamily, eps_values: Sequence[float] = (0.1, 0.01),
                    seed: int = 0, t_end: float = 20.0) -> list[dict[str, Any]]:
    """Decay-fit rates of Sigma-eps along one random admissible signal."""
    tau = family.tau
    sig = make_random_signal(seed, tau, 1.0 if tau == 0 else tau, t_end, len(family))
    if family.forbid_self_switch:
        pieces, prev = [], None
        for m, t in sig.pieces:
            if m == prev:
                m = (m + 1) % len(family)
            pieces.append((m, t))
            prev = m
        final = (prev + 1) % len(family) if prev is not None else sig.final_mode
        sig = type(sig)(tuple(pieces), final)
    x0 = np.ones(family.d) / np.sqrt(family.d)
    out = []
    for e in eps_values:
        try:
            tr = simulate(family, sig, "Sigma-eps", eps=e, x0=x0, t_end=t_end, dt_out=0.05)
            fit = fit_decay(tr, (0.25 * t_end, t_end))
            out.append({"eps": e, "rate": fit.rate, "residual": fit.residual})
        except Exception as exc:  # reported, never fatal for the check
            out.append({"eps": e, "rate": None, "error": str(exc)})
    return out


def _is_identity_shared_family(family: SystemFamily) -> bool:
    l0 = family.modes[0].l
    d = family.d
    return all(m.l == l0 and np.array_equal(m.P, np.eye(d)) and np.array_equal(m.R, np.eye(d))
               for m in family.modes)


def sufficient_check(family: SystemFamily, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                     depth: int = 8, budget: int = 300_000, backend: str | None = None,
                     estimates: Estimates | None = None, simulate_check: bool = True) -> list[Conclusion]:
    est = estimates or Estimates(family, eps_grid, depth, budget, backend)
    out: list[Conclusion] = []
    tau = family.tau

    stmt1 = "Sigma-eps is ES for every small enough eps"
    if not est.d_hurwitz:
        out.append(Conclusion("sufficient-1", VIOLATED, stmt1, _dh_failure(est), {"d_hurwitz": _dh_evidence(est)}))
    elif tau == 0:
        out.append(Conclusion("sufficient-1", VIOLATED, stmt1, "needs a positive dwell time"))
    else:
        b = est.bar()
        ev: dict[str, Any] = {"Sigma-bar": _est_dict(b)}
        if b is not None and verdict(b) == "ES":
            cons = _trend(est.eps_table(), "ES")
            if simulate_check:
                sims = simulated_rates(family)
                ev["simulated_rates"] = sims
                ok = all(s.get("rate") is not None and s["rate"] < 0 for s in sims)
                cons += "; simulated decay " + ("negative" if ok else "not negative") + " at eps in {0.1, 0.01}"
            out.append(Conclusion("sufficient-1", APPLIED, stmt1,
                                  f"lambda(Sigma-bar, tau={tau:g}) <= {b.heuristic_upper:.6g} < 0 (closed bound)",
                                  ev, cons))
        else:
            out.append(Conclusion("sufficient-1", INCONCLUSIVE, stmt1, "Sigma-bar is not certified ES", ev))

    stmt2 = "Sigma-eps (no dwell time) is ES for every small enough eps"
    if not est.d_hurwitz:
        out.append(Conclusion("sufficient-2", VIOLATED, stmt2, _dh_failure(est)))
    else:
        g = est.tilde_hat()
        ev = {"Sigma-hat (switching times)": _est_dict(g)}
        if g is None or not (g.heuristic_upper < 0 and g.upper_closed):
            why = "gate not evaluated" if g is None else (
                f"gate needs a closed bound below 0; got upper {g.heuristic_upper:.6g}"
                f" ({'closed' if g.upper_closed else 'open'})")
            out.append(Conclusion("sufficient-2", VIOLATED, stmt2, why, ev))
        else:
            t = est.tilde()
            ev["Sigma-tilde"] = _est_dict(t)
            ev["transients"] = "sampled transient factors; bounds are for the sampled set"
            zero = family.with_tau(0.0)
            if t is not None and verdict(t) == "ES":
                out.append(Conclusion("sufficient-2", APPLIED, stmt2,
                                      f"gate upper {g.heuristic_upper:.6g} < 0 and lambda(Sigma-tilde) <= "
                                      f"{t.heuristic_upper:.6g} < 0", ev, _trend(est.eps_table(zero), "ES")))
            else:
                out.append(Conclusion("sufficient-2", INCONCLUSIVE, stmt2, "Sigma-tilde is not certified ES", ev))

    if _is_identity_shared_family(family) and est.d_hurwitz:
        b = est.bar()
        rows = est.eps_table()
        out.append(Conclusion(
            "eps-limit-equals-bar", APPLIED if b is not None else INCONCLUSIVE,
            "lambda(Sigma-eps) tends to lambda(Sigma-bar) as eps -> 0",
            "P = R = I with a shared slow dimension",
            {"Sigma-bar": _est_dict(b), "eps_rows": rows},
            "trend over the eps grid; see eps_rows",
        ))
    return out


# -- complementary two-mode construction -------------------------------------


def swap_matrix(d: int, l: int) -> np.ndarray:
    """``J = [[0, I_{d-l}], [I_l, 0]]``."""
    if not 1 <= l <= d - 1:
        raise ValueError(f"l out of range [1, {d - 1}]: got {l}")
    J = np.zeros((d, d))
    J[: d - l, l:] = np.eye(d - l)
    J[d - l:, :l] = np.eye(l)
    return J


def build_complementary_family(m_set: Sequence[np.ndarray], l: int, tau: float = 0.0) -> SystemFamily:
    """Modes ``(l, I, M, I)`` and ``(d - l, J, J M, I)`` for each ``M``."""
    mats = [linalg.as_matrix(M, "M") for M in m_set]
    if not mats:
        raise ValueError("need at least one matrix")
    d = mats[0].shape[0]
    for M in mats:
        if M.shape != (d, d):
            raise ValueError(f"all matrices must be {d}x{d}")
    J = swap_matrix(d, l)
    I = np.eye(d)
    modes = []
    for M in mats:
        modes.append(Mode(l, I, M, I))
        modes.append(Mode(d - l, J, J @ M, I))
    return SystemFamily(tuple(modes), tau, False, "complementary")


def pair_cycle_tau(M: np.ndarray, N: np.ndarray, l: int, tau_hi: float = 100.0) -> tuple[float, float]:
    """Spectral radius of the slow-limit cycle through ``(d - l, J, J M)`` and
    ``(l, I, N)`` with both pieces of length tau: its value at tau = 0 (equal to
    ``rho(M11^-1 M12 N22^-1 N21)``) and the first tau at which it drops to 1
    (``inf`` if it stays above 1 up to ``tau_hi``)."""
    d = M.shape[0]
    J = swap_matrix(d, l)
    a = Mode(l, np.eye(d), N, np.eye(d))
    b = Mode(d - l, J, J @ M, np.eye(d))
    Ma, Mb = reduced_mode(a).M, reduced_mode(b).M
    ja, jb = bar_jump(a, b), bar_jump(b, a)

    def rho(t: float) -> float:
        return linalg.spectral_radius(ja @ linalg.mat_exp(Mb, t) @ jb @ linalg.mat_exp(Ma, t))

    rho0 = rho(0.0)
    if rho0 <= 1:
        return rho0, 0.0
    lo, hi = 0.0, 1e-3
    while rho(hi) > 1:
        lo, hi = hi, 2 * hi
        if hi > tau_hi:
            return rho0, math.inf
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if rho(mid) > 1 else (lo, mid)
    return rho0, hi


def prop2_check(m_set: Sequence[np.ndarray], l: int, tau: float = 0.0) -> list[Conclusion]:
    mats = [linalg.as_matrix(M, "M") for M in m_set]
    d = mats[0].shape[0]
    blocks = [linalg.block_partition(M, l) for M in mats]
    abscissas = [max(linalg.spectral_abscissa(b[0]), linalg.spectral_abscissa(b[3])) for b in blocks]
    stmt_eu = "the complementary family is EU for small eps and every tau"
    stmt_eu_small = "the complementary family is EU for small eps and small enough tau"
    stmt_es = "the complementary family is ES for small eps and tau > 0"
    out: list[Conclusion] = []
    worst = int(np.argmax(abscissas))
    if abscissas[worst] > 0:
        out.append(Conclusion("prop2-eu", APPLIED, stmt_eu,
                              f"matrix {worst} has a diagonal block with abscissa {abscissas[worst]:.6g} > 0",
                              {"abscissas": abscissas}))
        return out

    pairs = []
    for i, (M11, M12, _, _) in enumerate(blocks):
        for j, (_, _, N21, N22) in enumerate(blocks):
            row: dict[str, Any] = {"pair": [i, j]}
            try:
                X = linalg.invert(M11, "M11") @ M12 @ linalg.invert(N22, "N22") @ N21
                row["spectral_radius"] = linalg.spectral_radius(X)
            except SingularMatrixError as exc:
                row["error"] = str(exc)
            if d == 2 and l == 1:
                row["lhs"] = abs(float(M12[0, 0] * N21[0, 0]))
                row["rhs"] = abs(float(M11[0, 0] * N22[0, 0]))
            pairs.append(row)

    hurwitz = all(a < 0 for a in abscissas)
    over = [p for p in pairs if p.get("spectral_radius", 0.0) > 1]
    if hurwitz and over:
        p = max(over, key=lambda r: r["spectral_radius"])
        i, j = p["pair"]
        rho0, tau_max = pair_cycle_tau(mats[i], mats[j], l)
        ev = {"pairs": pairs, "cycle_rho_at_tau0": rho0, "cycle_tau_max": tau_max}
        why = (f"pair {(i, j)}: rho(M11^-1 M12 N22^-1 N21) = {p['spectral_radius']:.6g} > 1; the two-mode "
               f"cycle of the slow limit grows for tau < {tau_max:.6g}")
        if tau > 0 and tau >= tau_max:
            cons = f"tau = {tau:g} is beyond the growth range of this cycle; EU is not implied at this tau"
        else:
            cons = "consistent"
        out.append(Conclusion("prop2-eu", APPLIED, stmt_eu_small, why, ev, cons))
        return out
    if d == 2 and l == 1:
        negative = all(b[0][0, 0] < 0 and b[3][0, 0] < 0 for b in blocks)
        if negative and all(p["lhs"] < p["rhs"] for p in pairs):
            out.append(Conclusion("prop2-es", APPLIED, stmt_es,
                                  "|M12 N21| < |M11 N22| for every pair with negative diagonal entries",
                                  {"pairs": pairs}))
            return out
    elif d != 2:
        out.append(Conclusion("prop2-es", VIOLATED, stmt_es, "the stability branch needs d = 2 and l = 1"))
    out.append(Conclusion("prop2", INCONCLUSIVE, "neither branch applies", "no branch condition holds",
                          {"pairs": pairs, "abscissas": abscissas}))
    return out


# -- approximation estimates -------------------------------------------------


@dataclass
class ApproximationReport:
    eps_grid: list[float]
    t_grid: list[float]
    mu: float
    rows: list[dict[str, Any]]
    fits: dict[str, float]
    ratio_by_eps: dict[str, dict[str, float]]
    divergence: dict[str, bool]
    cuts: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {
            "eps_grid": self.eps_grid, "t_grid": self.t_grid, "mu": self.mu,
            "fits": self.fits, "ratio_by_eps": self.ratio_by_eps,
            "divergence": self.divergence, "cuts": self.cuts, "rows": self.rows,
        }

    def to_csv(self) -> str:
        lines = ["kind,mode,eps,t,deviation,bound,ratio"]
        for r in self.rows:
            lines.append(f"{r['kind']},{r['mode']},{r['eps']!r},{r['t']!r},{r['deviation']!r},{r['bound']!r},{r['ratio']!r}")
        return "\n".join(lines) + "\n"


DEFAULT_T_GRID = tuple([0.0] + list(np.round(np.logspace(-4, 1, 21), 12)))


def _block_diag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    l, k = a.shape[0], b.shape[0]
    out = np.zeros((l + k, l + k))
    out[:l, :l] = a
    out[l:, l:] = b
    return out


def approx_validate(family: SystemFamily, eps_grid: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4),
                    t_grid: Sequence[float] = DEFAULT_T_GRID, mu: float = 0.0) -> ApproximationReport:
    """Measure the comparison and transformed-flow deviations per mode.

    ``comparison``: ``|exp(t Gamma^{eps,mu}) - diag(exp(t M^mu), exp(t D/eps))|``
    against ``min(eps, t)``. ``long``: ``|exp(t G^eps_mu) - T0^-1 diag(exp(t M^mu), 0) T0|``
    against ``eps`` for ``t >= C eps |log eps|``. ``short``: the same flow against
    ``T0^-1 diag(I, exp(t D/eps)) T0`` and ``eps |log eps|`` below the cut.
    ``C = max(1, 1/gamma)`` with ``gamma = |alpha(D)| / 2``.
    """
    bad = [r.mode_index for r in d_hurwitz_check(family) if not r.passed]
    if bad:
        raise PremiseError(f"approximation estimates need Hurwitz fast blocks; fails for modes {bad}")
    eps_grid = [float(e) for e in eps_grid]
    t_grid = [float(t) for t in t_grid]
    rows: list[dict[str, Any]] = []
    cuts: dict[str, float] = {}
    for i, mode in enumerate(family.modes):
        rm = reduced_mode(mode)
        l, d = mode.l, mode.d
        gamma = 0.5 * abs(linalg.spectral_abscissa(rm.D))
        C = max(1.0, 1.0 / gamma)
        Mmu = rm.M_shift(mu)
        for e in eps_grid:
            ch = build_transform(mode, e, mode_index=i)
            Gam = ch.gamma(mu)
            cut = C * e * abs(math.log(e))
            cuts[f"{i}:{e!r}"] = cut
            for t in t_grid:
                eG = linalg.mat_exp(Gam, t)
                eM = linalg.mat_exp(Mmu, t)
                eD = linalg.mat_exp(rm.D / e, t)
                dev = float(np.linalg.norm(eG - _block_diag(eM, eD), 2))
                ref = min(e, t)
                rows.append({"kind": "comparison", "mode": i, "eps": e, "t": t, "deviation": dev,
                             "bound": ref, "ratio": dev / ref if ref > 0 else 0.0})
                flow = ch.T_inv @ eG @ ch.T
                if t >= cut:
                    target = rm.T0_inv @ _block_diag(eM, np.zeros((d - l, d - l))) @ rm.T0
                    dev = float(np.linalg.norm(flow - target, 2))
                    rows.append({"kind": "long", "mode": i, "eps": e, "t": t, "deviation": dev,
                                 "bound": e, "ratio": dev / e})
                else:
                    target = rm.T0_inv @ _block_diag(np.eye(l), eD) @ rm.T0
                    dev = float(np.linalg.norm(flow - target, 2))
                    ref = e * abs(math.log(e))
                    rows.append({"kind": "short", "mode": i, "eps": e, "t": t, "deviation": dev,
                                 "bound": ref, "ratio": dev / ref})

    fits: dict[str, float] = {}
    ratio_by_eps: dict[str, dict[str, float]] = {}
    divergence: dict[str, bool] = {}
    for kind in ("comparison", "long", "short"):
        sel = [r for r in rows if r["kind"] == kind]
        if not sel:
            continue
        fits[kind] = max(r["ratio"] for r in sel)
        per = {}
        for e in eps_grid:
            vals = [r["ratio"] for r in sel if r["eps"] == e]
            if vals:
                per[repr(e)] = max(vals)
        ratio_by_eps[kind] = per
        if len(per) >= 2:
            big, small = per[repr(max(eps_grid))] if repr(max(eps_grid)) in per else None, \
                per.get(repr(min(eps_grid)))
            divergence[kind] = bool(big is not None and small is not None and small > 3 * big)
    return ApproximationReport(eps_grid, t_grid, float(mu), rows, fits, ratio_by_eps, divergence, cuts)


# -- full analysis -----------------------------------------------------------


@dataclass
class AnalysisReport:
    fingerprint: str
    name: str
    d_hurwitz: list[dict[str, Any]]
    jumps: dict[str, Any]
    estimates: dict[str, Any]
    eps_rows: list[dict[str, Any]]
    prop1: dict[str, Any]
    conclusions: list[Conclusion]

    def to_dict(self) -> dict[str, Any]:
        return {
            "fingerprint": self.fingerprint,
            "name": self.name,
            "d_hurwitz": self.d_hurwitz,
            "jumps": self.jumps,
            "estimates": self.estimates,
            "eps_rows": self.eps_rows,
            "prop1": {k: v for k, v in self.prop1.items() if not k.startswith("_")},
            "conclusions": [c.to_dict() for c in self.conclusions],
        }

    @property
    def premise_violation_only(self) -> bool:
        """True when nothing was concluded and at least one premise failed."""
        statuses = {c.status for c in self.conclusions}
        return APPLIED not in statuses and VIOLATED in statuses

    def summary(self) -> str:
        lines = [f"family {self.name or '(unnamed)'} [{self.fingerprint}]"]
        for r in self.d_hurwitz:
            mark = "ok" if r["passed"] else "FAILS"
            lines.append(f"  D-Hurwitz mode {r['mode']}: alpha(D) = {r['abscissa']:.6g} ({mark})")
        for k, v in self.jumps.items():
            lines.append(f"  jump semigroup {k}: {v['status'] if v else 'n/a'}")
        for k, v in self.estimates.items():
            if v is None:
                lines.append(f"  {k}: unavailable")
            else:
                lines.append(f"  {k}: [{v['certified_lower']:.6g}, {v['heuristic_upper']:.6g}]"
                             f" {'closed' if v['upper_closed'] else 'open'} -> {v['verdict']}")
        for r in self.eps_rows:
            if r["certified_lower"] is None:
                lines.append(f"  Sigma-eps eps={r['eps']:g}: unavailable ({r['error']})")
            else:
                lines.append(f"  Sigma-eps eps={r['eps']:g}: [{r['certified_lower']:.6g}, "
                             f"{r['heuristic_upper']:.6g}] -> {r['verdict']}")
        for c in self.conclusions:
            lines.append(f"  [{c.status}] {c.claim}: {c.statement}")
            lines.append(f"      because {c.justification}")
            if c.consistency:
                lines.append(f"      {c.consistency}")
        return "\n".join(lines) + "\n"


def analyze(family: SystemFamily, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
            depth: int = 8, budget: int = 300_000, backend: str | None = None,
            simulate_check: bool = True) -> AnalysisReport:
    est = Estimates(family, eps_grid, depth, budget, backend)
    jumps: dict[str, Any] = {}
    for label in ("R", "R-bar", "R-tilde"):
        v = est.jumps(label) if (label == "R" or est.d_hurwitz) else None
        jumps[label] = None if v is None else v.to_dict()
    estimates = {}
    if est.d_hurwitz:
        estimates[f"Sigma-bar (tau={family.tau:g})"] = _est_dict(est.bar())
        estimates["Sigma-hat"] = _est_dict(est.hat())
        estimates["Sigma-hat (switching times)"] = _est_dict(est.tilde_hat())
        estimates["Sigma-tilde (sampled transients)"] = _est_dict(est.tilde())
    p1 = prop1_check(family, estimates=est, backend=backend)
    conclusions = list(p1["_conclusions"])
    conclusions += necessary_check(family, estimates=est)
    conclusions += sufficient_check(family, estimates=est, simulate_check=simulate_check)
    return AnalysisReport(fingerprint(family), family.name, _dh_evidence(est), jumps, estimates,
                          est.eps_table(), p1, conclusions)
