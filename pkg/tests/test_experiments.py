import math
import subprocess
import sys
from pathlib import Path

import pytest

from lmqc import scatter
from lmqc.errors import ParameterError, UnknownScenarioError
from lmqc.experiments import scenarios, verify
from lmqc.experiments.cli import main
from lmqc.experiments.config import ScenarioConfig, format_value, parse_value
from lmqc.experiments.results import ResultTable, table_from_columns
from lmqc.experiments.svgplot import line_chart
from lmqc.scatter import synthetic_sparams, write_sparams_csv

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("text,value", [
    ("true", True), ("off", False), ("3", 3), ("0.25", 0.25), ("1, 2.5", [1, 2.5]), ("echo", "echo"),
])
def test_parse_value(text, value):
    assert parse_value(text) == value


def test_config_round_trip():
    text = "# comment\nscenario = mz_scan\noutput = out\nphase_points = 12  # trailing\nq1.t1_us = 26.7\n"
    cfg = ScenarioConfig.parse(text)
    assert cfg.scenario == "mz_scan" and cfg.output == "out"
    assert cfg.parameters == {"phase_points": 12, "q1.t1_us": 26.7}
    assert ScenarioConfig.parse(cfg.dumps()) == cfg
    assert format_value(0.1) == "0.1"


@pytest.mark.parametrize("text,match", [
    ("eta = 0.5\n", "missing"),
    ("scenario = a\nscenario = b\n", "duplicate"),
    ("scenario = a\nnot a pair\n", "expected"),
    ("scenario = a\n1bad = 2\n", "invalid key"),
])
def test_config_errors(text, match):
    with pytest.raises(ParameterError, match=match):
        ScenarioConfig.parse(text)


def test_shipped_configs_parse():
    names = {ScenarioConfig.load(p).scenario for p in CONFIGS.glob("*.cfg")}
    assert names == set(scenarios.SCENARIOS)


def test_result_table_round_trip(tmp_path):
    t = table_from_columns([("x", [0.1, 1 / 3]), ("y", [2.0, math.pi])], {"a": "1", "b": "x = y"})
    t.write(tmp_path)
    back = ResultTable.read(tmp_path)
    assert back.columns == t.columns and back.rows == t.rows and back.metadata == t.metadata
    with pytest.raises(ParameterError):
        ResultTable(["a", "b"], [[1.0]])
    with pytest.raises(ParameterError):
        t.column("z")


def test_svg_chart():
    t = table_from_columns([("x", [0, 1, 2]), ("y", [1, 0, 1])])
    svg = line_chart(t, ["y"], "demo")
    assert svg.startswith("<svg") and "polyline" in svg


def test_unknown_scenario_and_parameter():
    with pytest.raises(UnknownScenarioError):
        scenarios.run(ScenarioConfig("nope"))
    with pytest.raises(ParameterError, match="unknown parameter"):
        scenarios.run(ScenarioConfig("eta_from_vna", {"bogus": 1}))


def _write_cfg(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


def test_cli_run_writes_outputs(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, "scenario = mz_scan\nmodel = analytic\nlossless = true\neta = 0.5\n")
    out = tmp_path / "out"
    assert main(["run", str(cfg), "--out", str(out), "--plot"]) == 0
    assert (out / "result.csv").exists() and (out / "metadata.txt").exists() and (out / "plot.svg").exists()
    meta = ResultTable.read(out).metadata
    assert float(meta["visibility_q1"]) == pytest.approx(1.0, abs=1e-12)
    assert "wrote" in capsys.readouterr().out


@pytest.mark.parametrize("text,code", [
    ("scenario = no_such_thing\n", 2),
    ("scenario = mz_scan\neta = 1.7\nmodel = analytic\n", 3),
    ("scenario = mz_scan\nphase_points = 4\nmodel = analytic\n", 3),
])
def test_cli_exit_codes(tmp_path, text, code):
    assert main(["run", str(_write_cfg(tmp_path, text)), "--out", str(tmp_path / "o")]) == code


def test_cli_io_errors(tmp_path):
    assert main(["run", str(tmp_path / "missing.cfg")]) == 4
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = _write_cfg(tmp_path, "scenario = eta_from_vna\n")
    assert main(["run", str(cfg), "--out", str(blocker / "sub")]) == 4
    assert main(["eta", str(tmp_path / "missing.csv")]) == 4


def test_cli_eta(tmp_path, capsys):
    path = tmp_path / "s.csv"
    write_sparams_csv(path, synthetic_sparams(0.612, 3.925))
    assert main(["eta", str(path), "--f0", "3.925"]) == 0
    out = capsys.readouterr().out
    assert "eta = 0.612000" in out and f"theta_sum = {math.pi:.6f}" in out


def test_cli_list(capsys):
    assert main(["list"]) == 0
    assert "hom_delay_scan" in capsys.readouterr().out


def test_verify_all_pass(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "10/10 checks passed" in out
    assert "p11_far_delay" in out and "margin=" in out


def test_verify_filter():
    results = verify.run_checks("unitarity", echo=None)
    assert [r.name for r in results] == ["bs_unitarity"]
    assert main(["verify", "--filter", "no-match"]) == 1


def test_mutation_canary(monkeypatch, capsys):
    honest = scatter.coincidence_probability_time

    def tampered(phi1, phi2, tau, eta, method="linear"):
        return honest(phi1, phi2, tau, min(1.0, eta + 0.01), method)

    monkeypatch.setattr(scatter, "coincidence_probability_time", tampered)
    results = {r.name: r for r in verify.run_checks("oracle", echo=None)}
    assert not results["oracle_equivalence"].passed
    assert main(["verify", "--filter", "oracle"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_determinism_with_shots(tmp_path):
    text = "scenario = hom_delay_scan\ntau_points = 9\nshots = 500\nseed = 11\nreadout = device\n"
    cfg = _write_cfg(tmp_path, text)
    main(["run", str(cfg), "--out", str(tmp_path / "a")])
    main(["run", str(cfg), "--out", str(tmp_path / "b")])
    main(["run", str(cfg), "--out", str(tmp_path / "c"), "--seed", "12"])
    a, b, c = (ResultTable.read(tmp_path / k) for k in "abc")
    assert (tmp_path / "a" / "result.csv").read_bytes() == (tmp_path / "b" / "result.csv").read_bytes()
    assert a.stable_metadata() == b.stable_metadata()
    assert a.rows != c.rows
    assert a.metadata["config.seed"] == "11"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "lmqc", "list"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and "eta_from_vna" in proc.stdout


def test_hom_delay_scan_metadata():
    t = scenarios.run(ScenarioConfig("hom_delay_scan", {"tau_points": 21}))
    assert t.columns[:5] == ["tau_ns", "p11", "p_q1", "p_q2", "p_ee"]
    assert float(t.metadata["alpha_fit"]) == pytest.approx(0.265, abs=1e-3)
    assert t.metadata["scenario"] == "hom_delay_scan"
