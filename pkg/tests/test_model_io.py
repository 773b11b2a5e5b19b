from __future__ import annotations

import json

import numpy as np
import pytest

from singstab import io
from singstab.errors import AdmissibilityError, DimensionError, SchemaError, SingularMatrixError
from singstab.model import (
    Mode,
    SwitchingSignal,
    SystemFamily,
    abcd_split,
    d_hurwitz,
    d_hurwitz_check,
    epsilon_generator,
    scaled_mask,
    slow_limit_matrix,
)


def _doc(**over):
    doc = {
        "d": 2,
        "tau": 0.5,
        "modes": [{"l": 1, "P": [[1, 0], [0, 1]], "Lambda": [[-1, 1], [1, -2]], "R": [[1, 0], [0, 1]]}],
    }
    doc.update(over)
    return doc


def test_mode_validation():
    with pytest.raises(DimensionError):
        Mode(2, np.eye(2), np.eye(2), np.eye(2))  # l = d
    with pytest.raises(DimensionError):
        Mode(0, np.eye(2), np.eye(2), np.eye(2))
    with pytest.raises(DimensionError):
        Mode(1, np.eye(2), np.eye(3), np.eye(2))
    with pytest.raises(SingularMatrixError):
        Mode(1, np.ones((2, 2)), np.eye(2), np.eye(2))


def test_mode_is_immutable_and_hashable():
    m = Mode(1, np.eye(2), np.array([[-1.0, 1.0], [1.0, -2.0]]), np.eye(2))
    with pytest.raises(ValueError):
        m.Lambda[0, 0] = 5.0
    assert m == m.replace()
    assert hash(m) == hash(m.replace())
    assert m != m.replace(l=1, R=2 * np.eye(2))


def test_abcd_split_uses_lambda_p_inverse():
    P = np.array([[0.0, 1.0], [1.0, 0.0]])
    Lam = np.array([[-1.0, -1.0], [1.0, -1.0]])
    b = abcd_split(Mode(1, P, Lam, np.eye(2)))
    # Lambda P^-1 swaps the columns: [[-1, -1], [-1, 1]]
    assert (b.A[0, 0], b.B[0, 0], b.C[0, 0], b.D[0, 0]) == (-1.0, -1.0, -1.0, 1.0)
    assert np.array_equal(b.assemble(), Lam @ np.linalg.inv(P))


def test_epsilon_generator_definition():
    rng = np.random.default_rng(1)
    P = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
    Lam = rng.normal(size=(3, 3))
    m = Mode(1, P, Lam, np.eye(3))
    eps = 0.01
    G = epsilon_generator(m, eps)
    E = np.diag([1.0, eps, eps])
    # E P G = Lambda
    assert np.allclose(E @ P @ G, Lam, atol=1e-12)


def test_scaled_mask_and_slow_limit():
    assert np.array_equal(scaled_mask(3, 1, 0.5), np.diag([1.0, 0.5, 0.5]))
    assert np.array_equal(scaled_mask(3, 1, 0.0, complement=True), np.diag([0.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        scaled_mask(3, 1, 0.0)
    m = Mode(1, np.eye(2), np.array([[-1.0, 1.0], [1.0, -2.0]]), np.eye(2))
    assert np.array_equal(slow_limit_matrix(m), [[0.0, 0.0], [1.0, -2.0]])


def test_d_hurwitz(printed_family, swapped_family):
    res = d_hurwitz_check(printed_family)
    assert [r.passed for r in res] == [True, False]
    assert res[1].abscissa == pytest.approx(1.0)
    assert d_hurwitz(swapped_family)


def test_family_checks():
    m = Mode(1, np.eye(2), np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        SystemFamily((m,), -1.0)
    with pytest.raises(ValueError):
        SystemFamily((m,), 0.0, forbid_self_switch=True)
    with pytest.raises(DimensionError):
        SystemFamily((m, Mode(1, np.eye(3), np.eye(3), np.eye(3))))
    fam = SystemFamily((m, m), 0.0)
    assert fam.with_tau(2.0).tau == 2.0
    assert fam.with_forbid_self_switch(True).forbid_self_switch


def test_signal_admissibility():
    m = Mode(1, np.eye(2), np.eye(2), np.eye(2))
    fam = SystemFamily((m, m), 1.0)
    sig = SwitchingSignal(((0, 1.0), (1, 2.0)), 0)
    sig.check_admissible(fam)
    assert list(sig.switching_times) == [1.0, 3.0]
    assert sig.mode_at(0.5) == 0 and sig.mode_at(1.0) == 1 and sig.mode_at(10.0) == 0
    assert not SwitchingSignal(((0, 0.5),), 1).is_admissible(fam)
    assert not SwitchingSignal(((0, 1.0),), 2).is_admissible(fam)
    with pytest.raises(AdmissibilityError, match="self-switch"):
        SwitchingSignal(((0, 1.0), (0, 1.0)), 1).check_admissible(fam.with_forbid_self_switch(True))
    with pytest.raises(AdmissibilityError):
        SwitchingSignal(((0, 0.0),), 0)


def test_parse_roundtrip():
    fam = io.parse_family(_doc(name="x", forbid_self_switch=False))
    again = io.parse_family(json.loads(io.dumps(io.family_to_doc(fam))))
    assert again.modes == fam.modes and again.tau == fam.tau and again.name == "x"


@pytest.mark.parametrize(
    "over, path",
    [
        ({"extra": 1}, ""),
        ({"d": 1}, "d"),
        ({"tau": -1}, "tau"),
        ({"modes": []}, "modes"),
        ({"modes": [{"l": 2, "P": [[1, 0], [0, 1]], "Lambda": [[0, 0], [0, 0]], "R": [[1, 0], [0, 1]]}]},
         "modes[0].l"),
        ({"modes": [{"l": 1, "P": [[1, 2], [2, 4]], "Lambda": [[0, 0], [0, 0]], "R": [[1, 0], [0, 1]]}]},
         "modes[0].P"),
        ({"modes": [{"l": 1, "P": [[1, 0]], "Lambda": [[0, 0], [0, 0]], "R": [[1, 0], [0, 1]]}]},
         "modes[0].P"),
        ({"modes": [{"l": 1, "P": [[1, 0], [0, 1]], "Lambda": [[0, "a"], [0, 0]], "R": [[1, 0], [0, 1]]}]},
         "modes[0].Lambda[0][1]"),
    ],
)
def test_parse_errors_name_the_path(over, path):
    with pytest.raises(SchemaError) as exc:
        io.parse_family(_doc(**over))
    assert exc.value.path == path


def test_parse_warnings():
    doc = _doc(modes=[{"l": 1, "P": [[1, 0], [0, 1]], "Lambda": [[-1, 1], [1, 2]], "R": [[1, 0], [0, 1]]}])
    fam = io.parse_family(doc)
    assert any("not Hurwitz" in w for w in fam.warnings)
    doc = _doc(modes=[{"l": 1, "P": [[1, 0], [0, 1e-9]], "Lambda": [[-1, 1], [1, -2]], "R": [[1, 0], [0, 1]]}])
    assert any("condition number" in w for w in io.parse_family(doc).warnings)


def test_signal_roundtrip_and_errors():
    sig = SwitchingSignal(((0, 0.5), (1, 0.25)), 0)
    assert io.parse_signal(io.signal_to_doc(sig)) == sig
    with pytest.raises(SchemaError):
        io.parse_signal({"pieces": [{"mode": 0, "duration": -1}], "final_mode": 0})
    with pytest.raises(SchemaError):
        io.parse_signal({"pieces": [], "final_mode": 0, "x": 1})


def test_load_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"d\": 2,\n  oops\n}")
    with pytest.raises(SchemaError, match="line 3"):
        io.load_json(bad)
    with pytest.raises(SchemaError, match="cannot read"):
        io.load_json(tmp_path / "missing.json")


def test_atomic_write_and_json_safe(tmp_path):
    target = tmp_path / "sub" / "out.json"
    io.atomic_write(target, io.dumps(io.json_safe({"a": np.float64(np.inf), "b": np.arange(2), "c": np.nan})))
    doc = json.loads(target.read_text())
    assert doc == {"a": "inf", "b": [0, 1], "c": "nan"}
    assert [p.name for p in target.parent.iterdir()] == ["out.json"]
