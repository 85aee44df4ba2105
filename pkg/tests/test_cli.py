import csv
import json
import subprocess
import sys

import pytest

from lrperc.cli import RunConfig, main
from lrperc.config import read_configuration
from lrperc.errors import DomainError

PARAMS = """# acceptance ladder
beta = 2.0
p = 0.9
alpha = 1.5
alpha_prime = 1.4
delta = 2.1
l1 = 10
M = 2
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(PARAMS)
    return path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_params_check(cfg_file, capsys):
    code, out, _ = run(["params", "check", "-c", cfg_file], capsys)
    data = json.loads(out)
    assert code == 0 and data["feasible"] is False
    assert {q["name"] for q in data["inequalities"]} >= {"coupling", "delta_floor", "induction"}
    assert 0 < data["p_threshold"] < 1
    assert data["scales"] == [1, 10, 30] and data["bridge_caps"] == [8, 23]


def test_sample_analyze_round_trip(cfg_file, tmp_path, capsys):
    conf = tmp_path / "c.txt"
    assert run(["sample", "-c", cfg_file, "--seed", 3, "-o", conf], capsys)[0] == 0
    config = read_configuration(conf)
    assert config.L == 30
    code, out, _ = run(["sample", "-c", cfg_file, "--seed", 3], capsys)
    assert code == 0 and out == conf.read_text()
    out_json = tmp_path / "it.json"
    assert run(["analyze", "-i", conf, "-c", cfg_file, "-o", out_json], capsys)[0] == 0
    data = json.loads(out_json.read_text())
    assert data["scales"] == [1, 10, 30] and len(data["levels"]) == 3
    code, out, _ = run(["analyze", "-i", conf], capsys)  # M inferred from L
    assert code == 0 and json.loads(out) == data


def test_seed_environment_override(cfg_file, tmp_path, capsys, monkeypatch):
    a = run(["sample", "-c", cfg_file, "--seed", 1], capsys)[1]
    monkeypatch.setenv("LRPERC_SEED", "1")
    b = run(["sample", "-c", cfg_file, "--seed", 99], capsys)[1]
    assert a == b


def test_experiment_outputs(cfg_file, tmp_path, capsys):
    out = tmp_path / "span.csv"
    code = run(["experiment", "span", "-c", cfg_file, "--trials", 50, "--seed", 2, "-o", out],
               capsys)[0]
    rows = list(csv.DictReader(out.open()))
    assert code == 0 and rows[0]["name"] == "span" and rows[0]["trials"] == "50"
    code, text, _ = run(["experiment", "defect", "-c", cfg_file, "--trials", 20, "--level", 1],
                        capsys)
    rep = json.loads(text)
    assert code == 0 and rep["name"] == "defect" and rep["params_echo"]["k"] == 1


def test_oracle_tiny(tmp_path, capsys):
    path = tmp_path / "fk.cfg"
    path.write_text("beta = 1\np = 0.6\nkappa = 2\n")
    code, out, _ = run(["oracle", "tiny", "-c", path, "--interval", 0, 2, "--sweeps", 20000],
                       capsys)
    data = json.loads(out)
    assert code == 0 and len(data["edges"]) == 3
    assert data["mcmc"]["total_variation"] < 0.05
    code, _, err = run(["oracle", "tiny", "-c", path, "--interval", 0, 1, "--sweeps", 10], capsys)
    assert code == 1 and "odd vertex count" in err


@pytest.mark.parametrize("argv", [
    ["params", "check", "-c", "/nonexistent/file"],
    ["experiment", "repair", "-c", "{bad}", "--trials", 1],
])
def test_domain_errors_exit_1(argv, tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("beta = 2\nwibble = 3\n")
    argv = [str(bad) if a == "{bad}" else a for a in argv]
    code, _, err = run(argv, capsys)
    assert code == 1 and err.startswith("lrperc: error:")


def test_usage_errors_exit_2(capsys):
    assert run([], capsys)[0] == 2
    assert run(["experiment", "nope", "-c", "x"], capsys)[0] == 2
    assert run(["--help"], capsys)[0] == 0


def test_run_config_parsing():
    rc = RunConfig.from_text("beta = 2  # comment\n\nl1 = 16\n")
    assert rc.values == {"beta": 2.0, "l1": 16}
    with pytest.raises(DomainError):
        RunConfig.from_text("beta 2\n")
    with pytest.raises(DomainError):
        rc.model()
    with pytest.raises(DomainError):
        RunConfig().scales(31)


def test_module_entry_point(cfg_file):
    res = subprocess.run([sys.executable, "-m", "lrperc", "params", "check", "-c", str(cfg_file)],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and json.loads(res.stdout)["feasible"] is False
