import json
import subprocess
import sys

import pytest

from otto_cavity import config
from otto_cavity.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from otto_cavity.errors import ConfigError

SMALL = """
[truncation]
d_c = 4
d_1 = 3
d_2 = 3

[drive]
dt_hot = 100.0
dt_cold = 100.0
n_cycles = {n_cycles}

[plateau]
window = 100
rel_tol = 1e-3
max_extension = 100.0

[scan]
n_points = 51
"""


def write(tmp_path, text, name="c.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_defaults_are_documented_and_valid():
    cfg = config.from_dict({})
    assert cfg.data == config.DEFAULTS
    assert "model.omega_1" in cfg.defaults_applied
    assert cfg.model().omega_c == 1.0
    assert cfg.truncation.dims == (8, 5, 5)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as err:
        config.from_dict({"model": {"omega_3": 1.0}, "extra": {}})
    assert "model.omega_3: unknown key" in err.value.problems
    assert "extra: unknown section" in err.value.problems


def test_type_errors_named():
    with pytest.raises(ConfigError) as err:
        config.from_dict({"truncation": {"d_c": 2.5}, "model": {"omega_c": "auto"}})
    text = " ".join(err.value.problems)
    assert "truncation.d_c" in text and "model.omega_c" in text


def test_hash_tracks_physics_only():
    a = config.from_dict({})
    b = config.from_dict({"outputs": {"directory": "elsewhere"}})
    c = config.from_dict({"baths": {"T_h": 0.5}})
    assert a.hash == b.hash != c.hash
    assert len(a.hash) == 64


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", "--config", write(tmp_path, "")]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["resolved"]["model"]["omega_1"] == 2.0


def test_validate_negative_rate(tmp_path, capsys):
    code = main(["validate", "--config", write(tmp_path, "[baths]\ngamma_1 = -0.1\n")])
    assert code == EXIT_CONFIG
    assert "baths.gamma_1" in capsys.readouterr().err


def test_validate_frequency_ordering(tmp_path, capsys):
    code = main(["validate", "--config", write(tmp_path, "[model]\nomega_1 = 3.0\n")])
    assert code == EXIT_CONFIG
    err = capsys.readouterr().err
    assert "model.omega_1" in err and "omega_2" in err


def test_missing_and_malformed_config(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "nope.toml")]) == EXIT_CONFIG
    assert main(["validate", "--config", write(tmp_path, "[model\n")]) == EXIT_CONFIG


def test_scan_writes_crossings(tmp_path):
    cfg = write(tmp_path, "[truncation]\nd_c = 6\nd_1 = 4\nd_2 = 4\n")
    out = tmp_path / "scan"
    assert main(["scan", "--config", cfg, "--out", str(out)]) == EXIT_OK
    data = json.loads((out / "crossings.json").read_text())
    assert data["omega_eff_1"] == pytest.approx(1.01, abs=0.01)
    assert data["omega_eff_2"] == pytest.approx(1.31, abs=0.01)
    assert data["gap_1"] > 0 and data["gap_2"] > 0
    lines = (out / "spectrum.csv").read_text().splitlines()
    assert lines[0] == f"# config_hash={data['config_hash']}"
    assert len(lines) == 2 + 201


def test_scan_uncoupled_reports_bare_resonance(tmp_path):
    cfg = write(tmp_path, "[model]\ng_1 = 0.0\ng_2 = 0.0\n[truncation]\nd_c = 4\nd_1 = 3\nd_2 = 3\n")
    assert main(["scan", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    data = json.loads((tmp_path / "crossings.json").read_text())
    assert data["omega_eff_1"] == 1.0 and data["omega_eff_2"] == 1.3
    assert data["crossings"]["wall1"]["kind"] == "bare"


def test_scan_without_crossing_exits(tmp_path, capsys):
    cfg = write(tmp_path, "[scan]\nomega_min = 1.1\nomega_max = 1.2\n[truncation]\nd_c = 4\nd_1 = 3\nd_2 = 3\n")
    assert main(["scan", "--config", cfg, "--out", str(tmp_path)]) == EXIT_NUMERICAL
    assert "no avoided crossing" in capsys.readouterr().err


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("run")
    cfg = write(tmp, SMALL.format(n_cycles=1))
    assert main(["run", "--config", cfg, "--out", str(tmp / "a")]) == EXIT_OK
    assert main(["run", "--config", cfg, "--out", str(tmp / "b"), "--seed", "5"]) == EXIT_OK
    return tmp


def test_run_outputs(run_dir):
    out = run_dir / "a"
    cycles = json.loads((out / "cycles.json").read_text())
    meta = json.loads((out / "run_meta.json").read_text())
    assert cycles["eta_carnot"] == 0.625
    assert len(cycles["cycles"]) == 1
    c = cycles["cycles"][0]
    assert {"eta", "W_out", "Q_in", "eta_carnot", "engine"} <= set(c)
    assert meta["config_hash"] == cycles["config_hash"]
    assert meta["code_version"] and meta["wall_clock_s"] > 0
    assert meta["omega_c_hamiltonian"] == cycles["omega_eff_1"]
    assert meta["checks"]["first_law_max"] < 1e-6
    header = (out / "ledger.csv").read_text().splitlines()[:2]
    assert header == [f"# config_hash={meta['config_hash']}", "t,U,W,Q,P,N_c,N_w1,N_w2,f"]


def test_run_is_byte_reproducible(run_dir):
    assert (run_dir / "a" / "ledger.csv").read_bytes() == (run_dir / "b" / "ledger.csv").read_bytes()


def test_transient_only_run(tmp_path):
    cfg = write(tmp_path, SMALL.format(n_cycles=0))
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == EXIT_OK
    assert json.loads((tmp_path / "cycles.json").read_text())["cycles"] == []


def test_equal_temperatures_flagged(tmp_path):
    text = SMALL.format(n_cycles=1) + "\n[baths]\nT_c = 0.3\nT_h = 0.3\n"
    assert main(["run", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == EXIT_OK
    c = json.loads((tmp_path / "cycles.json").read_text())["cycles"][0]
    assert c["W_out"] <= 1e-4


def test_sweep(tmp_path):
    text = SMALL.format(n_cycles=0) + '\n[sweep]\nparameter = "baths.T_h"\nvalues = [0.3, 0.4]\n'
    cfg = write(tmp_path, text)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--threads", "2"]) == EXIT_OK
    summary = json.loads((tmp_path / "sweep.json").read_text())
    assert [p["value"] for p in summary["points"]] == [0.3, 0.4]
    hashes = {p["config_hash"] for p in summary["points"]}
    assert len(hashes) == 2
    for p in summary["points"]:
        assert (tmp_path / p["directory"] / "ledger.csv").exists()


def test_sweep_requires_parameter(tmp_path):
    cfg = write(tmp_path, SMALL.format(n_cycles=0))
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "otto_cavity", "validate", "--config", write(tmp_path, "")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "config_hash" in proc.stdout
