from __future__ import annotations

import json

import pytest

from singstab import catalog, io
from singstab.cli import main


@pytest.fixture
def classic_file(tmp_path):
    p = tmp_path / "classic.json"
    p.write_text(io.dumps(io.family_to_doc(catalog.classic(1.0))))
    return str(p)


@pytest.fixture
def printed_file(tmp_path):
    p = tmp_path / "printed.json"
    p.write_text(io.dumps(io.family_to_doc(catalog.two_mode_example(0.45, "printed"))))
    return str(p)


def _read(path):
    return json.loads(path.read_text())


def test_validate_exit_codes(classic_file, printed_file, tmp_path):
    assert main(["validate", classic_file, "--out", str(tmp_path / "a")]) == 0
    assert _read(tmp_path / "a" / "validate.json")["schema_version"] == io.SCHEMA_VERSION
    assert main(["validate", printed_file, "--out", str(tmp_path / "b")]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 1


def test_schema_error_is_reported(tmp_path, caplog):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"d": 2, "tau": 0, "modes": [{"l": 1, "P": [[1, 2], [2, 4]],
                                                          "Lambda": [[0, 0], [0, 0]], "R": [[1, 0], [0, 1]]}]}))
    assert main(["validate", str(bad)]) == 1
    assert "modes[0].P" in caplog.text


def test_reduce(classic_file, tmp_path):
    assert main(["reduce", classic_file, "--out", str(tmp_path)]) == 0
    doc = _read(tmp_path / "reduce.json")
    assert "modes" in doc


def test_exponent(classic_file, tmp_path, capsys):
    assert main(["exponent", classic_file, "--target", "Sigma-bar", "--depth", "4", "--budget", "10000",
                 "--out", str(tmp_path)]) == 0
    doc = _read(tmp_path / "exponent.json")
    assert json.dumps(doc).count("certified_lower") >= 1
    assert main(["exponent", classic_file, "--target", "Sigma-hat", "--tilde", "--depth", "3",
                 "--budget", "5000"]) == 0
    assert "certified_lower" in capsys.readouterr().out


def test_exponent_premise(printed_file):
    assert main(["exponent", printed_file, "--target", "Sigma-bar"]) == 2


def test_simulate(classic_file, tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", classic_file, "--periodic", "0", "--piece", "1.0", "--eps", "0.1",
                 "--t-end", "3", "--dt", "0.1", "--fit", "--format", "csv,json,svg", "--out", str(out)]) == 0
    assert (out / "trajectory.csv").read_text().startswith("t,x1,x2,mode")
    assert (out / "trajectory.svg").exists()
    assert (out / "trajectory_x1_x2.dat").exists()
    assert (out / "run_metadata.json").exists()


def test_simulate_random_and_bad_x0(classic_file, tmp_path):
    assert main(["simulate", classic_file, "--random", "--seed", "3", "--eps", "0.1", "--t-end", "4",
                 "--out", str(tmp_path)]) == 0
    assert main(["simulate", classic_file, "--periodic", "0", "--piece", "1", "--eps", "0.1",
                 "--x0", "1,2,3"]) == 1


def test_simulate_dwell_violation(classic_file):
    assert main(["simulate", classic_file, "--periodic", "0", "--piece", "0.4", "--eps", "0.1"]) == 1


def test_sweep_r(tmp_path):
    assert main(["sweep", "--param", "r", "--from", "0.2", "--to", "0.4", "--steps", "3",
                 "--depth", "3", "--budget", "5000", "--out", str(tmp_path)]) == 0
    doc = _read(tmp_path / "sweep_r.json")
    assert len(doc["rows"]) == 3 and "sign_change" in doc


def test_sweep_needs_family():
    assert main(["sweep", "--param", "tau", "--from", "0.1", "--to", "1", "--steps", "2"]) == 1


def test_sweep_tau(classic_file, tmp_path):
    assert main(["sweep", classic_file, "--param", "tau", "--from", "0.5", "--to", "1", "--steps", "2",
                 "--target", "Sigma-bar", "--depth", "3", "--budget", "5000", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "sweep_tau.csv").exists()


def test_complementary(tmp_path):
    mats = tmp_path / "m.json"
    mats.write_text(json.dumps({"matrices": [[[-1, 0.5], [0.3, -1]]]}))
    assert main(["complementary", str(mats), "--l", "1", "--tau", "0.5", "--check", "--eps", "0.01",
                 "--depth", "4", "--budget", "10000", "--out", str(tmp_path)]) == 0
    doc = _read(tmp_path / "complementary.json")
    assert doc["conclusions"][0]["claim"] == "prop2-es"
    assert any(c["claim"] == "sufficient-1" for c in doc["sufficient_check"])


def test_approx(classic_file, tmp_path):
    assert main(["approx", classic_file, "--eps", "0.1,0.01", "--t-grid", "0,0.1,1", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "approx.csv").read_text().startswith("kind,mode,eps")
    assert "fits" in _read(tmp_path / "approx.json")


def test_analyze(classic_file, printed_file, tmp_path, capsys):
    assert main(["analyze", classic_file, "--eps", "0.1", "--depth", "4", "--budget", "20000",
                 "--out", str(tmp_path)]) == 0
    assert (tmp_path / "analysis.txt").exists()
    assert main(["analyze", printed_file, "--eps", "0.1", "--depth", "3", "--budget", "5000"]) in (0, 2)
    assert "sufficient-1" in capsys.readouterr().out


def test_dry_run(classic_file, capsys, tmp_path):
    assert main(["exponent", classic_file, "--dry-run", "--out", str(tmp_path / "x")]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["dry_run"] is True and doc["plan"]["family"]["d"] == 2
    assert not (tmp_path / "x").exists()


def test_config_file(classic_file, tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"depth": 3, "budget": 4000}))
    assert main(["exponent", classic_file, "--config", str(cfg), "--dry-run"]) == 0
    plan = json.loads(capsys.readouterr().out)["plan"]
    assert plan["depth"] == 3 and plan["budget"] == 4000
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["exponent", classic_file, "--config", str(cfg)]) == 1


def test_invalid_options(classic_file):
    assert main(["exponent", classic_file, "--eps", "-1"]) == 1
    assert main(["exponent", classic_file, "--format", "xml"]) == 1
    with pytest.raises(SystemExit):
        main(["exponent", classic_file, "--target", "bogus"])


def test_output_is_deterministic(classic_file, tmp_path):
    args = ["exponent", classic_file, "--depth", "3", "--budget", "5000"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a" / "exponent.json").read_bytes() == (tmp_path / "b" / "exponent.json").read_bytes()


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "singstab", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "singstab" in res.stdout
