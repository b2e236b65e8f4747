import json

import pytest

from qworkmeter.cli import main
from qworkmeter.harness import SUMMARY_COLUMNS

GOOD = """
Omega_over_2pi = 1e5
gamma_over_Omega = 5
omega0_over_theta = 1.2
temperature_K = 80
g_m_over_Omega = 10
beta0_modulus = 5000
n_traj = 500
"""

SMALL = """
Omega_over_2pi = 1e5
gamma_over_Omega = 0.05
omega0_over_theta = 1.2
temperature_K = 80
g_m_over_Omega = 10
beta0_modulus = 500
n_steps = 10
"""

SWEEP = GOOD + """
axis = gm_over_Omega_ratio
values = 1, 10
label = cli-demo
"""


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_run_writes_summary(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.txt", GOOD)
    out = tmp_path / "out"
    rc = main(["run", "--config", cfg, "--out", str(out), "--emit-raw"])
    assert rc == 0
    lines = (out / "summary.csv").read_text().strip().split("\n")
    assert lines[0] == ",".join(SUMMARY_COLUMNS)
    assert len(lines) == 2
    assert (out / "raw.csv").exists()
    assert "je_deviation" in capsys.readouterr().out


def test_run_seed_override_changes_output(tmp_path):
    cfg = write(tmp_path, "cfg.txt", GOOD)
    rows = []
    for seed in (0, 1):
        out = tmp_path / f"s{seed}"
        assert main(["run", "--config", cfg, "--out", str(out),
                     "--seed", str(seed)]) == 0
        rows.append((out / "summary.csv").read_text().split("\n")[1])
    assert rows[0] != rows[1]


def test_run_bad_config_exit_code(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.txt", "Omega_over_2pi = -3\n")
    rc = main(["run", "--config", cfg, "--out", str(tmp_path / "o")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_sweep_from_spec_file(tmp_path):
    spec = write(tmp_path, "sweep.txt", SWEEP)
    out = tmp_path / "sw"
    rc = main(["sweep", "--spec", spec, "--out", str(out), "--n-traj", "300"])
    assert rc == 0
    lines = (out / "summary.csv").read_text().strip().split("\n")
    assert len(lines) == 3
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "complete"
    assert manifest["label"] == "cli-demo"


def test_sweep_preset_with_overrides(tmp_path):
    out = tmp_path / "f4"
    rc = main(["sweep", "--preset", "fig4", "--out", str(out),
               "--n-traj", "200"])
    assert rc == 0
    lines = (out / "summary.csv").read_text().strip().split("\n")
    assert len(lines) == 6  # header + five temperatures


def test_sweep_manifest_rerun(tmp_path):
    spec = write(tmp_path, "sweep.txt", SWEEP)
    first = tmp_path / "one"
    assert main(["sweep", "--spec", spec, "--out", str(first),
                 "--n-traj", "300"]) == 0
    again = tmp_path / "two"
    assert main(["sweep", "--manifest", str(first / "manifest.json"),
                 "--out", str(again)]) == 0
    assert ((first / "summary.csv").read_bytes()
            == (again / "summary.csv").read_bytes())


def test_oracle_trace(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.txt", GOOD)
    out = tmp_path / "orc"
    rc = main(["oracle", "--config", cfg, "--out", str(out),
               "--substeps", "2000"])
    assert rc == 0
    lines = (out / "oracle_trace.csv").read_text().strip().split("\n")
    assert lines[0] == "t,p_e,mean_work_cumulative"
    assert len(lines) == 201
    assert "p_e(t_N)" in capsys.readouterr().out


def test_enumerate_small_instance(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.txt", SMALL)
    rc = main(["enumerate", "--config", cfg, "--out", str(tmp_path / "e")])
    assert rc == 0
    text = capsys.readouterr().out
    assert "paths enumerated   = 2048" in text
    assert "drive JE mean" in text


def test_unknown_preset_rejected(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["sweep", "--preset", "fig9", "--out", str(tmp_path / "x")])
