"""Command-line interface.

Exit status: 0 on success, 2 when the only problem is a failed premise
(for instance a fast block that is not Hurwitz), 1 on errors. Set
``SINGSTAB_LOG`` to error, warn, info or debug for more or less chatter.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import math
import os
import platform
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__, catalog, criteria, io, linalg
from .chang import build_transform, reduced_mode
from .errors import PremiseError, SchemaError, SingstabError
from .exponents import (
    DEFAULT_BUDGET,
    DEFAULT_DEPTH,
    TARGETS,
    classify_discrete,
    lambda_estimate,
    lambda_tilde_hat,
    verdict,
)
from .model import SystemFamily, abcd_split, d_hurwitz_check
from .reduced import DEFAULT_N_MAX, DEFAULT_S_GRID, jump_set, sample_transients
from .simulate import TARGETS as SIM_TARGETS, fit_decay, make_periodic_signal, make_random_signal, simulate

log = logging.getLogger("singstab")

EXIT_OK, EXIT_ERROR, EXIT_PREMISE = 0, 1, 2
_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


@dataclass
class RunConfig:
    """Validated parameters of one invocation."""

    subcommand: str
    inputs: list[str] = field(default_factory=list)
    eps: list[float] = field(default_factory=list)
    mu: float = 0.0
    tau: float | None = None
    depth: int = DEFAULT_DEPTH
    budget: int = DEFAULT_BUDGET
    n_max: int = DEFAULT_N_MAX
    s_grid: list[float] = field(default_factory=lambda: list(DEFAULT_S_GRID))
    out: str | None = None
    seed: int = 0
    formats: list[str] = field(default_factory=lambda: ["csv"])
    forbid_self_switch: bool | None = None
    dry_run: bool = False
    extra: dict[str, Any] = field(default_factory=dict)

    def validate(self) -> None:
        if self.depth < 1 or self.depth > 40:
            raise SchemaError("must be in [1, 40]", "depth")
        if self.budget < 1:
            raise SchemaError("must be >= 1", "budget")
        if any(not (e > 0 and math.isfinite(e)) for e in self.eps):
            raise SchemaError("every eps must be finite and > 0", "eps")
        if self.tau is not None and not (self.tau >= 0 and math.isfinite(self.tau)):
            raise SchemaError("must be finite and >= 0", "tau")
        if not math.isfinite(self.mu):
            raise SchemaError("must be finite", "mu")
        if self.n_max < 0:
            raise SchemaError("must be >= 0", "n_max")
        if any(not s > 0 for s in self.s_grid):
            raise SchemaError("durations must be > 0", "s_grid")
        bad = set(self.formats) - {"csv", "json", "svg"}
        if bad:
            raise SchemaError(f"unknown formats {sorted(bad)}", "format")

    def plan(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


_CONFIG_KEYS = {"eps", "mu", "tau", "depth", "budget", "n_max", "s_grid", "seed", "format",
                "forbid_self_switch", "out"}


def _apply_config_file(args: argparse.Namespace) -> None:
    """Fill options from ``--config`` JSON; command-line values keep priority."""
    if not getattr(args, "config", None):
        return
    doc = io.load_json(args.config)
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", args.config)
    unknown = set(doc) - _CONFIG_KEYS - {"schema_version"}
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}", args.config)
    for key, val in doc.items():
        if key == "schema_version":
            continue
        if key in ("eps", "s_grid") and isinstance(val, list):
            val = [float(v) for v in val]
        if key == "format" and isinstance(val, list):
            val = ",".join(val)
        if getattr(args, key, None) in (None, [], False):
            setattr(args, key, val)


def _config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        subcommand=args.command,
        inputs=[p for p in [getattr(args, "family", None), getattr(args, "signal", None)] if p],
        eps=list(getattr(args, "eps", None) or []),
        mu=float(getattr(args, "mu", 0.0) or 0.0),
        tau=getattr(args, "tau", None),
        depth=int(getattr(args, "depth", None) or DEFAULT_DEPTH),
        budget=int(getattr(args, "budget", None) or DEFAULT_BUDGET),
        n_max=int(getattr(args, "n_max", None) if getattr(args, "n_max", None) is not None else DEFAULT_N_MAX),
        s_grid=list(getattr(args, "s_grid", None) or DEFAULT_S_GRID),
        out=getattr(args, "out", None),
        seed=int(getattr(args, "seed", 0) or 0),
        formats=[f for f in (getattr(args, "format", None) or "csv").split(",") if f],
        forbid_self_switch=getattr(args, "forbid_self_switch", None),
        dry_run=bool(getattr(args, "dry_run", False)),
    )
    cfg.validate()
    return cfg


def _family(args: argparse.Namespace, cfg: RunConfig) -> SystemFamily:
    fam = io.load_family(args.family)
    if cfg.tau is not None:
        fam = fam.with_tau(cfg.tau)
    if cfg.forbid_self_switch is not None:
        fam = fam.with_forbid_self_switch(cfg.forbid_self_switch)
    for w in fam.warnings:
        log.warning("%s: %s", args.family, w)
    return fam


def _transients(fam: SystemFamily, cfg: RunConfig):
    return sample_transients(fam, cfg.n_max, cfg.s_grid)


def _emit(cfg: RunConfig, name: str, text: str) -> None:
    """Write ``text`` under the output directory, or to stdout without one."""
    if cfg.out is None:
        sys.stdout.write(text)
        return
    io.atomic_write(Path(cfg.out) / name, text)
    log.info("wrote %s", Path(cfg.out) / name)


def _emit_json(cfg: RunConfig, name: str, doc: dict[str, Any]) -> None:
    _emit(cfg, name, io.dumps(io.json_safe({"schema_version": io.SCHEMA_VERSION, **doc})))


def _write_metadata(cfg: RunConfig) -> None:
    """Timestamps and versions live only here so other outputs stay reproducible."""
    if cfg.out is None:
        return
    meta = {
        "schema_version": io.SCHEMA_VERSION,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "singstab": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg.plan(),
    }
    io.atomic_write(Path(cfg.out) / "run_metadata.json", io.dumps(io.json_safe(meta)))


# -- subcommands -------------------------------------------------------------


def cmd_validate(args, cfg: RunConfig) -> int:
    fam = _family(args, cfg)
    dh = d_hurwitz_check(fam)
    doc = {
        "valid": True,
        "d": fam.d,
        "tau": fam.tau,
        "modes": [{"l": m.l, "P_condition": m.P_condition} for m in fam.modes],
        "d_hurwitz": [{"mode": r.mode_index, "abscissa": r.abscissa, "passed": r.passed} for r in dh],
        "warnings": list(fam.warnings),
    }
    _emit_json(cfg, "validate.json", doc)
    return EXIT_OK if all(r.passed for r in dh) else EXIT_PREMISE


def cmd_reduce(args, cfg: RunConfig) -> int:
    fam = _family(args, cfg)
    modes = []
    for i, m in enumerate(fam.modes):
        b = abcd_split(m)
        entry: dict[str, Any] = {
            "mode": i, "l": m.l,
            "A": b.A, "B": b.B, "C": b.C, "D": b.D,
            "D_abscissa": linalg.spectral_abscissa(b.D),
        }
        try:
            rm = reduced_mode(m)
            ch0 = build_transform(m, 0.0, mode_index=i)
            entry.update(M=rm.M, M_abscissa=linalg.spectral_abscissa(rm.M), Q0=ch0.Q, T0=rm.T0)
        except SingstabError as exc:
            entry["error"] = str(exc)
        per_eps = []
        for e in cfg.eps:
            try:
                ch = build_transform(m, e, mode_index=i)
                per_eps.append({"eps": e, "Q": ch.Q, "Gamma": ch.Gamma, "residual": ch.residual})
            except SingstabError as exc:
                per_eps.append({"eps": e, "error": str(exc)})
        entry["transforms"] = per_eps
        modes.append(entry)
    doc = {"modes": modes}
    for name, label in (("R", "R"), ("R_bar", "R-bar")):
        try:
            doc[f"jumps_{name}"] = classify_discrete(jump_set(fam, label)).to_dict()
        except SingstabError as exc:
            doc[f"jumps_{name}"] = {"error": str(exc)}
    _emit_json(cfg, "reduce.json", doc)
    return EXIT_OK


def cmd_exponent(args, cfg: RunConfig) -> int:
    fam = _family(args, cfg)
    eps_list = cfg.eps or ([0.1] if args.target == "Sigma-eps" else [0.0])
    trans = _transients(fam, cfg) if args.target == "Sigma-tilde" else None
    results = []
    for e in eps_list:
        est = lambda_estimate(fam, args.target, eps=e if args.target == "Sigma-eps" else 0.0, mu=cfg.mu,
                              depth=cfg.depth, budget=cfg.budget, transients=trans)
        results.append({"eps": e, **est.to_dict()})
        log.info("%s eps=%g: [%g, %g] %s", args.target, e, est.certified_lower, est.heuristic_upper, verdict(est))
    doc: dict[str, Any] = {"target": args.target, "estimates": results}
    if args.target == "Sigma-hat" and args.tilde:
        doc["switching_times"] = lambda_tilde_hat(fam, depth=cfg.depth, budget=cfg.budget).to_dict()
    _emit_json(cfg, "exponent.json", doc)
    return EXIT_OK


def _signal(args, cfg: RunConfig, fam: SystemFamily):
    if args.signal:
        return io.load_signal(args.signal)
    if args.random:
        return make_random_signal(cfg.seed, fam.tau, args.mean_extra, args.t_end, len(fam))
    modes = args.periodic or list(range(len(fam)))
    return make_periodic_signal(modes, args.piece, args.t_end, fam.tau)


def _write_trajectory(cfg: RunConfig, stem: str, tr, pairs: Sequence[tuple[int, int]]) -> None:
    if "csv" in cfg.formats:
        _emit(cfg, f"{stem}.csv", tr.to_csv())
    if "json" in cfg.formats:
        _emit_json(cfg, f"{stem}.json", {
            "system": tr.system_tag, "eps": tr.eps,
            "signal": io.signal_to_doc(tr.signal),
            "jumps": [{"t": ev.time, "from": ev.mode_from, "to": ev.mode_to,
                       "before": ev.before, "after": ev.after} for ev in tr.jump_events],
        })
    if "svg" in cfg.formats and cfg.out is not None:
        _emit(cfg, f"{stem}.svg", tr.to_svg())
    if cfg.out is not None:
        for i, j in pairs:
            _emit(cfg, f"{stem}_x{i}_x{j}.dat", tr.pair_table(i, j))


def cmd_simulate(args, cfg: RunConfig) -> int:
    fam = _family(args, cfg)
    sig = _signal(args, cfg, fam)
    eps = cfg.eps[0] if cfg.eps else None
    x0 = args.x0 or [1.0] * fam.d
    if len(x0) != fam.d:
        raise SchemaError(f"expected {fam.d} entries", "x0")
    tr = simulate(fam, sig, args.target, eps=eps, x0=x0, t_end=args.t_end, dt_out=args.dt)
    pairs = [tuple(args.pair)] if args.pair else ([(1, 2)] if fam.d >= 2 else [])
    _write_trajectory(cfg, "trajectory", tr, pairs)
    if args.fit:
        try:
            fit = fit_decay(tr, (args.t_end / 4, args.t_end))
            log.warning("decay fit: rate %.6g (residual %.3g)", fit.rate, fit.residual)
        except SingstabError as exc:
            log.warning("decay fit unavailable: %s", exc)
    return EXIT_OK


def _sweep_family(args, cfg: RunConfig, value: float) -> SystemFamily:
    if args.param == "r":
        fam = catalog.two_mode_example(value, args.variant, bool(cfg.forbid_self_switch))
        return fam.with_tau(cfg.tau) if cfg.tau is not None else fam
    fam = _family(args, cfg)
    if args.param == "tau":
        return fam.with_tau(value)
    return fam


def sweep_rows(args, cfg: RunConfig) -> list[dict[str, Any]]:
    values = np.linspace(args.start, args.stop, args.steps)
    rows = []
    for v in values:
        v = float(np.round(v, 12))
        fam = _sweep_family(args, cfg, v)
        eps = v if args.param == "eps" else (cfg.eps[0] if cfg.eps else 0.1)
        mu = v if args.param == "mu" else cfg.mu
        row: dict[str, Any] = {args.param: v}
        try:
            trans = _transients(fam, cfg) if args.target == "Sigma-tilde" else None
            est = lambda_estimate(fam, args.target, eps=eps if args.target == "Sigma-eps" else 0.0, mu=mu,
                                  depth=cfg.depth, budget=cfg.budget, transients=trans)
            row.update(lower=est.certified_lower, upper=est.heuristic_upper,
                       closed=est.upper_closed, verdict=verdict(est))
        except PremiseError as exc:
            row.update(lower=math.nan, upper=math.nan, closed=False, verdict="premise: " + str(exc))
        row["jumps_R"] = classify_discrete(jump_set(fam, "R")).status
        if args.gate:
            try:
                g = lambda_tilde_hat(fam, depth=min(cfg.depth, 8), budget=min(cfg.budget, 200_000))
                row.update(gate_lower=g.certified_lower, gate_upper=g.heuristic_upper, gate_closed=g.upper_closed)
            except PremiseError:
                row.update(gate_lower=math.nan, gate_upper=math.nan, gate_closed=False)
        rows.append(row)
    return rows


def sign_changes(rows: list[dict[str, Any]], param: str) -> dict[str, Any]:
    """Where the bounds certify a change of sign, and where the R verdict flips."""
    out: dict[str, Any] = {"lambda": None, "jumps_R": None}
    for a, b in zip(rows, rows[1:]):
        if out["lambda"] is None and a["upper"] < 0 and a["closed"] and b["lower"] > 0:
            out["lambda"] = {"between": [a[param], b[param]], "kind": "certified"}
        if out["lambda"] is None and (a["verdict"] != b["verdict"]) and "premise" not in a["verdict"]:
            out["lambda"] = {"between": [a[param], b[param]], "kind": f"verdict {a['verdict']} -> {b['verdict']}"}
        if out["jumps_R"] is None and a["jumps_R"] != b["jumps_R"]:
            out["jumps_R"] = {"between": [a[param], b[param]], "from": a["jumps_R"], "to": b["jumps_R"]}
    return out


def _rows_csv(rows: list[dict[str, Any]]) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    lines = [",".join(keys)]
    for r in rows:
        vals = []
        for k in keys:
            v = r.get(k)
            vals.append(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v).replace(",", ";"))
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def cmd_sweep(args, cfg: RunConfig) -> int:
    if args.param != "r" and not args.family:
        raise SchemaError("a family file is required unless --param r", "family")
    rows = sweep_rows(args, cfg)
    changes = sign_changes(rows, args.param)
    _emit(cfg, f"sweep_{args.param}.csv", _rows_csv(rows))
    if cfg.out is not None:
        _emit_json(cfg, f"sweep_{args.param}.json", {"target": args.target, "param": args.param,
                                                     "sign_change": changes, "rows": rows})
    log.warning("sign change of %s bounds: %s; R semigroup change: %s", args.target,
                changes["lambda"] or "none observed", changes["jumps_R"] or "none observed")
    return EXIT_OK


def cmd_complementary(args, cfg: RunConfig) -> int:
    doc = io.load_json(args.matrices)
    mats = doc.get("matrices") if isinstance(doc, dict) else doc
    if not isinstance(mats, list) or not mats:
        raise SchemaError("expected a non-empty list of matrices", "matrices")
    arrays = [linalg.as_matrix(np.asarray(m, dtype=float), f"matrices[{k}]") for k, m in enumerate(mats)]
    tau = cfg.tau if cfg.tau is not None else 0.0
    conclusions = criteria.prop2_check(arrays, args.l, tau)
    fam = criteria.build_complementary_family(arrays, args.l, tau)
    out: dict[str, Any] = {"conclusions": [c.to_dict() for c in conclusions], "family": io.family_to_doc(fam)}
    if args.check:
        suff = criteria.sufficient_check(fam, cfg.eps or criteria.DEFAULT_EPS_GRID,
                                         depth=min(cfg.depth, 8), budget=min(cfg.budget, 300_000))
        out["sufficient_check"] = [c.to_dict() for c in suff]
    _emit_json(cfg, "complementary.json", out)
    return EXIT_OK


def cmd_approx(args, cfg: RunConfig) -> int:
    fam = _family(args, cfg)
    eps = cfg.eps or [1e-1, 1e-2, 1e-3, 1e-4]
    t_grid = args.t_grid or list(criteria.DEFAULT_T_GRID)
    rep = criteria.approx_validate(fam, eps, t_grid, cfg.mu)
    _emit(cfg, "approx.csv", rep.to_csv())
    if cfg.out is not None:
        doc = rep.to_dict()
        doc.pop("rows")
        _emit_json(cfg, "approx.json", doc)
    return EXIT_OK


def cmd_analyze(args, cfg: RunConfig) -> int:
    fam = _family(args, cfg)
    rep = criteria.analyze(fam, cfg.eps or criteria.DEFAULT_EPS_GRID,
                           depth=min(cfg.depth, args.depth_cap), budget=cfg.budget)
    if cfg.out is None:
        sys.stdout.write(rep.summary())
    else:
        _emit_json(cfg, "analysis.json", rep.to_dict())
        _emit(cfg, "analysis.txt", rep.summary())
    return EXIT_PREMISE if rep.premise_violation_only else EXIT_OK


def example_diagnostics(r: float) -> dict[str, Any]:
    """Hand-checkable facts about both variants of the two-mode example."""
    out: dict[str, Any] = {"r": r}
    for variant in ("printed", "swapped"):
        fam = catalog.two_mode_example(r, variant)
        modes = []
        for i, m in enumerate(fam.modes):
            b = abcd_split(m)
            entry = {"mode": i, "A": b.A, "B": b.B, "C": b.C, "D": b.D,
                     "D_hurwitz": bool(linalg.spectral_abscissa(b.D) < 0),
                     "rho_R": linalg.spectral_radius(m.R)}
            try:
                rm = reduced_mode(m)
                entry.update(M=rm.M, Q0=build_transform(m, 0.0).Q, R_bar=criteria_bar(m))
            except SingstabError as exc:
                entry["error"] = str(exc)
            modes.append(entry)
        R1, R2 = (m.R for m in fam.modes)
        out[variant] = {
            "modes": modes,
            "rho_R2_R1": linalg.spectral_radius(R2 @ R1),
            "d_hurwitz_all": all(x["D_hurwitz"] for x in modes),
        }
    out["alternating_threshold"] = 1 / math.sqrt(3)
    return out


def criteria_bar(mode):
    from .reduced import bar_projector

    return bar_projector(mode)


def cmd_example(args, cfg: RunConfig) -> int:
    r = args.r
    eps = cfg.eps[0] if cfg.eps else 0.1
    diag = example_diagnostics(r)
    _emit_json(cfg, "diagnostics.json", diag)
    d2 = diag["printed"]["modes"][1]["D"]
    log.warning("printed variant: D(mode 2) = %s (Hurwitz: %s); rho(R1) = %.6g",
                np.asarray(d2).ravel().tolist(), diag["printed"]["modes"][1]["D_hurwitz"],
                diag["printed"]["modes"][0]["rho_R"])

    sig = make_periodic_signal([0, 1], args.piece, args.t_end)
    status = EXIT_OK
    for variant in ("printed", "swapped"):
        fam = catalog.two_mode_example(r, variant)
        tr = simulate(fam, sig, "Sigma-eps", eps=eps, x0=[1.0, 1.0], t_end=args.t_end, dt_out=args.dt)
        _write_trajectory(cfg, f"trajectory_{variant}", tr, [(1, 2)])
        for forbid in (False, True):
            tag = f"{variant}_{'alternating' if forbid else 'free'}"
            rep = criteria.analyze(fam.with_forbid_self_switch(forbid), cfg.eps or criteria.DEFAULT_EPS_GRID,
                                   depth=min(cfg.depth, 8), budget=min(cfg.budget, 300_000),
                                   simulate_check=False)
            _emit_json(cfg, f"analysis_{tag}.json", rep.to_dict())
            _emit(cfg, f"analysis_{tag}.txt", rep.summary())

    if args.sweep_steps > 0:
        for forbid in (False, True):
            sweep_args = argparse.Namespace(param="r", start=args.sweep_from, stop=args.sweep_to,
                                            steps=args.sweep_steps, variant="swapped",
                                            target="Sigma-tilde", gate=args.gate, family=None)
            sub = RunConfig(**{**cfg.plan(), "forbid_self_switch": forbid,
                               "depth": min(cfg.depth, 6), "budget": min(cfg.budget, 200_000)})
            rows = sweep_rows(sweep_args, sub)
            changes = sign_changes(rows, "r")
            tag = "alternating" if forbid else "free"
            _emit(cfg, f"sweep_r_{tag}.csv", _rows_csv(rows))
            _emit_json(cfg, f"sweep_r_{tag}.json", {"target": "Sigma-tilde", "param": "r",
                                                    "forbid_self_switch": forbid,
                                                    "sign_change": changes, "rows": rows})
            log.warning("r-sweep (%s): lambda(Sigma-tilde) sign change %s; R semigroup change %s",
                        tag, changes["lambda"] or "none observed", changes["jumps_R"] or "none observed")
    return status


# -- parser ------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, family: bool = True) -> None:
    if family:
        p.add_argument("family", help="family JSON file")
    p.add_argument("--out", "-o", help="output directory (stdout when omitted)")
    p.add_argument("--eps", type=_floats, help="comma-separated eps values")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--tau", type=float, default=None, help="override the dwell time")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--n-max", dest="n_max", type=int, default=None, help="pieces per transient factor")
    p.add_argument("--s-grid", dest="s_grid", type=_floats, default=None, help="transient durations")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", default=None, help="comma-separated subset of csv,json,svg")
    p.add_argument("--forbid-self-switch", dest="forbid_self_switch", action="store_const", const=True,
                   default=None, help="consecutive pieces must use distinct modes")
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--dry-run", action="store_true", help="validate inputs and print the plan")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="singstab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a family file")
    _common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("reduce", help="blocks, reduced matrices and transforms per mode")
    _common(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("exponent", help="bounds on the maximal Lyapunov exponent")
    _common(p)
    p.add_argument("--target", choices=TARGETS, default="Sigma-bar")
    p.add_argument("--tilde", action="store_true", help="with Sigma-hat, also the switching-time exponent")
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("simulate", help="exact trajectory along a switching signal")
    _common(p)
    p.add_argument("--signal", help="signal JSON file")
    p.add_argument("--periodic", type=_ints, help="mode cycle, e.g. 0,1")
    p.add_argument("--piece", type=float, default=0.4, help="piece duration for --periodic")
    p.add_argument("--random", action="store_true", help="random signal from --seed")
    p.add_argument("--mean-extra", dest="mean_extra", type=float, default=1.0)
    p.add_argument("--target", choices=SIM_TARGETS, default="Sigma-eps")
    p.add_argument("--x0", type=_floats)
    p.add_argument("--t-end", dest="t_end", type=float, default=8.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--pair", type=_ints, help="coordinates for the two-column table, e.g. 1,2")
    p.add_argument("--fit", action="store_true", help="log a decay-rate fit")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="exponent bounds along a parameter")
    p.add_argument("family", nargs="?", help="family JSON file (not needed for --param r)")
    _common(p, family=False)
    p.add_argument("--param", choices=("r", "tau", "mu", "eps"), required=True)
    p.add_argument("--from", dest="start", type=float, required=True)
    p.add_argument("--to", dest="stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=41)
    p.add_argument("--variant", choices=("printed", "swapped"), default="swapped")
    p.add_argument("--target", choices=TARGETS, default="Sigma-tilde")
    p.add_argument("--gate", action="store_true", help="also the switching-time exponent of Sigma-hat")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("complementary", help="two-mode complementary construction and its checks")
    p.add_argument("matrices", help='JSON list of d x d matrices (or {"matrices": [...]})')
    _common(p, family=False)
    p.add_argument("--l", type=int, required=True)
    p.add_argument("--check", action="store_true", help="also run the sufficient-condition check")
    p.set_defaults(func=cmd_complementary)

    p = sub.add_parser("approx", help="approximation estimates of the transformed flows")
    _common(p)
    p.add_argument("--t-grid", dest="t_grid", type=_floats)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("analyze", help="all criteria with their evidence")
    _common(p)
    p.add_argument("--depth-cap", dest="depth_cap", type=int, default=8)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("example", help="built-in two-mode example, both variants")
    _common(p, family=False)
    p.add_argument("--r", type=float, default=0.45)
    p.add_argument("--piece", type=float, default=0.4, help="duration of each piece of the periodic signal")
    p.add_argument("--t-end", dest="t_end", type=float, default=8.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--sweep-from", dest="sweep_from", type=float, default=0.30)
    p.add_argument("--sweep-to", dest="sweep_to", type=float, default=0.70)
    p.add_argument("--sweep-steps", dest="sweep_steps", type=int, default=41)
    p.add_argument("--gate", action="store_true", help="add the switching-time exponent to the sweep")
    p.set_defaults(func=cmd_example)
    return ap


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("SINGSTAB_LOG", "warn").strip().lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _dry_run(args, cfg: RunConfig) -> int:
    plan = cfg.plan()
    if getattr(args, "family", None):
        fam = _family(args, cfg)
        plan["family"] = {"d": fam.d, "modes": len(fam), "tau": fam.tau,
                          "forbid_self_switch": fam.forbid_self_switch, "warnings": list(fam.warnings)}
    if getattr(args, "signal", None):
        sig = io.load_signal(args.signal)
        plan["signal"] = {"pieces": len(sig.pieces)}
    if getattr(args, "matrices", None):
        doc = io.load_json(args.matrices)
        mats = doc.get("matrices") if isinstance(doc, dict) else doc
        plan["matrices"] = len(mats) if isinstance(mats, list) else None
    sys.stdout.write(io.dumps(io.json_safe({"schema_version": io.SCHEMA_VERSION, "dry_run": True, "plan": plan})))
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        cfg = _config(args)
        if cfg.dry_run:
            return _dry_run(args, cfg)
        status = args.func(args, cfg)
        _write_metadata(cfg)
        return status
    except PremiseError as exc:
        log.error("premise violated: %s", exc)
        return EXIT_PREMISE
    except (SingstabError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
