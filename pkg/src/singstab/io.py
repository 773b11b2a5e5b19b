"""JSON documents for system families and switching signals.

System file::

    {"d": 2, "tau": 0.0,
     "modes": [{"l": 1, "P": [[1, 0], [0, 1]], "Lambda": [...], "R": [...]}, ...]}

Optional keys: ``"name"`` (string) and ``"forbid_self_switch"`` (bool).

Signal file::

    {"pieces": [{"mode": 0, "duration": 0.4}, ...], "final_mode": 1}

Floats are written with ``repr`` so every double survives a round trip.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DimensionError, SchemaError, SingularMatrixError
from .model import P_CONDITION_WARN, Mode, SwitchingSignal, SystemFamily, d_hurwitz_check

SCHEMA_VERSION = 1

_FAMILY_KEYS = {"d", "tau", "modes", "name", "forbid_self_switch", "schema_version"}
_MODE_KEYS = {"l", "P", "Lambda", "R"}


def _number(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise SchemaError(f"expected a number, got {type(x).__name__}", path)
    if not np.isfinite(x):
        raise SchemaError("number must be finite", path)
    return float(x)


def _integer(x, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise SchemaError(f"expected an integer, got {x!r}", path)
    return x


def _matrix(x, d: int, path: str) -> np.ndarray:
    if not isinstance(x, list) or len(x) != d:
        raise SchemaError(f"expected {d} rows", path)
    rows = []
    for i, row in enumerate(x):
        if not isinstance(row, list) or len(row) != d:
            raise SchemaError(f"expected {d} entries", f"{path}[{i}]")
        rows.append([_number(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=float)


def parse_family(doc: dict[str, Any]) -> SystemFamily:
    """Validate a decoded system document.

    Non-fatal findings (ill-conditioned P, non-Hurwitz fast block) are
    attached to ``family.warnings``.
    """
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    unknown = set(doc) - _FAMILY_KEYS
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}")
    for key in ("d", "modes"):
        if key not in doc:
            raise SchemaError("missing key", key)
    d = _integer(doc["d"], "d")
    if d < 2:
        raise SchemaError("d must be >= 2", "d")
    tau = _number(doc.get("tau", 0.0), "tau")
    if tau < 0:
        raise SchemaError("tau must be >= 0", "tau")
    modes_doc = doc["modes"]
    if not isinstance(modes_doc, list) or not modes_doc:
        raise SchemaError("expected a non-empty list", "modes")

    modes = []
    warnings = []
    for i, md in enumerate(modes_doc):
        path = f"modes[{i}]"
        if not isinstance(md, dict):
            raise SchemaError("expected an object", path)
        unknown = set(md) - _MODE_KEYS
        if unknown:
            raise SchemaError(f"unknown keys {sorted(unknown)}", path)
        for key in sorted(_MODE_KEYS):
            if key not in md:
                raise SchemaError("missing key", f"{path}.{key}")
        l = _integer(md["l"], f"{path}.l")
        if not 1 <= l <= d - 1:
            raise SchemaError(f"l out of range [1, d-1] = [1, {d - 1}]", f"{path}.l")
        P = _matrix(md["P"], d, f"{path}.P")
        Lam = _matrix(md["Lambda"], d, f"{path}.Lambda")
        R = _matrix(md["R"], d, f"{path}.R")
        try:
            mode = Mode(l, P, Lam, R)
        except SingularMatrixError as exc:
            raise SchemaError(str(exc), f"{path}.P") from None
        except DimensionError as exc:
            raise SchemaError(str(exc), path) from None
        if mode.P_condition > P_CONDITION_WARN:
            warnings.append(f"{path}.P: condition number {mode.P_condition:.3g} exceeds {P_CONDITION_WARN:g}")
        modes.append(mode)

    forbid = doc.get("forbid_self_switch", False)
    if not isinstance(forbid, bool):
        raise SchemaError("expected a boolean", "forbid_self_switch")
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise SchemaError("expected a string", "name")
    try:
        family = SystemFamily(tuple(modes), tau, forbid, name)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None
    for r in d_hurwitz_check(family):
        if not r.passed:
            warnings.append(
                f"modes[{r.mode_index}]: fast block D is not Hurwitz (abscissa {r.abscissa:.6g})"
            )
    return family.with_warnings(warnings)


def family_to_doc(family: SystemFamily) -> dict[str, Any]:
    doc: dict[str, Any] = {"d": family.d, "tau": family.tau}
    if family.name:
        doc["name"] = family.name
    if family.forbid_self_switch:
        doc["forbid_self_switch"] = True
    doc["modes"] = [
        {"l": m.l, "P": m.P.tolist(), "Lambda": m.Lambda.tolist(), "R": m.R.tolist()}
        for m in family.modes
    ]
    return doc


def parse_signal(doc: dict[str, Any]) -> SwitchingSignal:
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    unknown = set(doc) - {"pieces", "final_mode", "schema_version"}
    if unknown:
        raise SchemaError(f"unknown keys {sorted(unknown)}")
    if "pieces" not in doc or not isinstance(doc["pieces"], list):
        raise SchemaError("expected a list", "pieces")
    if "final_mode" not in doc:
        raise SchemaError("missing key", "final_mode")
    pieces = []
    for k, p in enumerate(doc["pieces"]):
        path = f"pieces[{k}]"
        if not isinstance(p, dict) or set(p) != {"mode", "duration"}:
            raise SchemaError('expected {"mode", "duration"}', path)
        m = _integer(p["mode"], f"{path}.mode")
        t = _number(p["duration"], f"{path}.duration")
        if t <= 0:
            raise SchemaError("duration must be > 0", f"{path}.duration")
        pieces.append((m, t))
    return SwitchingSignal(tuple(pieces), _integer(doc["final_mode"], "final_mode"))


def signal_to_doc(signal: SwitchingSignal) -> dict[str, Any]:
    return {
        "pieces": [{"mode": m, "duration": t} for m, t in signal.pieces],
        "final_mode": signal.final_mode,
    }


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=False, allow_nan=False) + "\n"


def load_json(path: str | os.PathLike) -> Any:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot read file: {exc.strerror}", str(p)) from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", str(p)) from None


def load_family(path: str | os.PathLike) -> SystemFamily:
    return parse_family(load_json(path))


def load_signal(path: str | os.PathLike) -> SwitchingSignal:
    return parse_signal(load_json(path))


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the target directory, then rename."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=p.parent, prefix=f".{p.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_safe(obj: Any) -> Any:
    """Convert numpy values and non-finite floats into JSON-compatible data.

    Infinities become the strings ``"inf"``/``"-inf"`` (and NaN ``"nan"``) so
    that reports stay strict JSON.
    """
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, complex):
        return {"re": json_safe(obj.real), "im": json_safe(obj.imag)}
    return obj
