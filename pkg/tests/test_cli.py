import json

import numpy as np
import pytest

from nmfluor.cli import format_csv, main
from nmfluor.config import (ConfigError, MemoryCapError, config_text, memory_estimate,
                            parse_config)

DECAY = """# undriven band-gap decay
experiment = decay
kernel = bandgap
beta_lambda_delta = 0.0204, 300, 10
M = 4
dt = 0.04   # time step
t_max = 1
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return str(p)


def test_parse_example():
    cfg = parse_config(DECAY)
    assert (cfg.experiment, cfg.kernel, cfg.M, cfg.dt) == ("decay", "bandgap", 4, 0.04)
    assert (cfg.beta, cfg.lam, cfg.delta) == (0.0204, 300.0, 10.0)
    assert cfg.steps == 25 and cfg.omega == 0.0


def test_parse_errors():
    with pytest.raises(ConfigError, match="'foo'"):
        parse_config(DECAY + "foo = 1\n")
    with pytest.raises(ConfigError, match="M"):
        parse_config(DECAY.replace("M = 4", ""))
    with pytest.raises(ConfigError, match="'dt'"):
        parse_config(DECAY.replace("dt = 0.04", "dt = fast"))
    with pytest.raises(ConfigError):
        parse_config(DECAY + "just words\n")
    with pytest.raises(ConfigError):
        parse_config(DECAY.replace("experiment = decay", "experiment = dance"))
    with pytest.raises(ConfigError):
        parse_config(DECAY + "omega = 2\n")
    with pytest.raises(ConfigError):
        parse_config("experiment = driven\nkernel = cavity\nM = 3\ndt = 0.1\n")


def test_memory_cap():
    assert memory_estimate(20) > 3**20 * 4 * 16
    with pytest.raises(MemoryCapError):
        parse_config(DECAY, overrides=["M=20"], environ={})
    with pytest.raises(MemoryCapError):
        parse_config(DECAY, environ={"NMFLUOR_MEMORY_CAP": "1k"})
    assert parse_config(DECAY, overrides=["M=12"], environ={"NMFLUOR_MEMORY_CAP": "8G"}).M == 12
    with pytest.raises(MemoryCapError):
        parse_config(DECAY + "memory_cap = 10K\n", environ={"NMFLUOR_MEMORY_CAP": "8G"})


def test_overrides_and_roundtrip():
    cfg = parse_config(DECAY, overrides=["deltas=-10,0,10", "lambda = 1e5"])
    assert cfg.deltas == (-10.0, 0.0, 10.0) and cfg.lam == 1e5
    assert parse_config(config_text(cfg)) == cfg


def test_csv_format():
    text = format_csv(("t", "P"), ([0.0, 0.1], [1.0, 1 / 3]))
    assert text == "t,P\n0.0,1.0\n0.1,0.3333333333333333\n"


def test_decay_run_outputs(tmp_path, capsys):
    cfg = write(tmp_path, DECAY)
    assert main(["run", cfg, "--out", str(tmp_path / "a")]) == 0
    lines = (tmp_path / "a" / "decay.csv").read_text().splitlines()
    assert lines[0] == "t,P" and len(lines) == 27
    assert (tmp_path / "a" / "decay_log.csv").read_text().startswith("t,logP\n")
    meta = json.loads((tmp_path / "a" / "decay.meta.json").read_text())
    for key in ("config", "kernel_truncation", "trace_drift", "wall_time_s"):
        assert key in meta
    assert meta["trace_drift"] < 1e-12


def test_determinism_and_sidecar_reproduces(tmp_path):
    cfg = write(tmp_path, DECAY.replace("experiment = decay", "experiment = driven")
                .replace("M = 4", "M = 4\nomega = 10"))
    assert main(["run", cfg, "--out", str(tmp_path / "a")]) == 0
    assert main(["run", cfg, "--out", str(tmp_path / "b")]) == 0
    first = (tmp_path / "a" / "trajectory.csv").read_bytes()
    assert first == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert first.startswith(b"t,P,Re_coh,Im_coh,trace\n")
    meta = json.loads((tmp_path / "a" / "trajectory.meta.json").read_text())
    again = write(tmp_path, meta["config_text"], "again.cfg")
    assert main(["run", again, "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "trajectory.csv").read_bytes() == first


def test_detuning_sweep_spectrum(tmp_path):
    text = ("experiment = spectrum\nkernel = bandgap\nlam = 300\ndeltas = -10, 10\n"
            "omega = 10\nM = 3\ndt = 0.05\ntau_max = 8\n")
    assert main(["run", write(tmp_path, text), "--out", str(tmp_path)]) == 0
    for d in ("-10", "+10"):
        S = (tmp_path / f"spectrum_delta{d}.csv").read_text().splitlines()
        C = (tmp_path / f"correlation_delta{d}.csv").read_text().splitlines()
        assert S[0] == "omega,S" and C[0] == "tau,ReC,ImC"
        omega = np.array([float(line.split(",")[0]) for line in S[1:]])
        assert np.diff(omega).max() <= 10 / 40 + 1e-12


def test_validation_experiments(tmp_path, capsys):
    cav = ("experiment = validate-cavity\nkernel = cavity\ndetuning = 4\nkappa2 = 8\n"
           "omega = 4\nM = 6\ndt = 0.14285714285714285\nt_max = 8\n")
    assert main(["run", write(tmp_path, cav), "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "validate_cavity.meta.json").read_text())
    assert meta["max_deviation"] < 0.05
    assert "max |P_alg - P_ref|" in capsys.readouterr().out
    conv = cav.replace("validate-cavity", "convergence").replace("M = 6", "M = 3")
    assert main(["run", write(tmp_path, conv, "c.cfg"), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "convergence.csv").read_text().splitlines()
    assert rows[0] == "dt,M,max_dev" and len(rows) == 3
    dec = DECAY.replace("experiment = decay", "experiment = validate-decay")
    assert main(["run", write(tmp_path, dec, "d.cfg"), "--out", str(tmp_path)]) == 0
    ml = DECAY.replace("experiment = decay", "experiment = markov-limit") + "deltas=-10,0,10\n"
    assert main(["run", write(tmp_path, ml, "m.cfg"), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "markov_limit.csv").read_text().startswith("delta,rate,markov_rate\n")


def test_exit_codes(tmp_path, capsys):
    cfg = write(tmp_path, DECAY)
    assert main(["run", cfg, "--override", "foo=1"]) == 1
    assert main(["run", cfg, "--override", "M=20"]) == 1
    assert main(["run", str(tmp_path / "missing.cfg")]) == 1
    never = ("experiment = correlation\nkernel = cavity\ndetuning = 0\nkappa2 = 1\n"
             "omega = 2\nM = 3\ndt = 0.1\nsteady_max_time = 3\n")
    assert main(["run", write(tmp_path, never, "n.cfg"), "--out", str(tmp_path)]) == 2
    assert "runtime error" in capsys.readouterr().err
