import os
import subprocess
import sys

import numpy as np
import pytest

from kernel_spv import cli, io
from kernel_spv import config as cfgmod


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in list(os.environ):
        if key.startswith(cfgmod.ENV_PREFIX):
            monkeypatch.delenv(key)


def run(tmp_path, command, cfg, *extra):
    path = tmp_path / "cfg.json"
    io.write_json(path, cfg)
    return cli.main([command, "--config", str(path), "--out", str(tmp_path / "out"), *extra])


def pipeline(tmp_path, cfg, commands, *extra):
    return [run(tmp_path, c, cfg, *extra) for c in commands]


SMALL = {"N": 60, "s": 8, "D_list": [20, 40], "landmark_seeds": [0, 1], "D_prune": 40,
         "approx_cosine_tol": 1.0}
IDENTITY = dict(SMALL, system={"name": "identity", "state_dim": 2})
FULL = {"N": 30, "s": 10, "D_list": [30], "landmark_seeds": [0], "D_prune": 30,
        "lambda_scale": 1e-12, "nystrom_lambda_scale": 1e-12, "landmark_threshold": 1e-14,
        "c_V": 1e-9, "c_KV": 1e-9, "approx_cosine_tol": 1e-6}


def test_generate(tmp_path):
    assert run(tmp_path, "generate", {"N": 100}, "--seed", "7") == 0
    out = tmp_path / "out"
    header, rows = io.read_csv(out / "data.csv")
    assert header == ["x1", "x2", "tx1", "tx2"] and len(rows) == 100
    first = (out / "data.csv").read_bytes()
    assert run(tmp_path, "generate", {"N": 100}, "--seed", "7") == 0
    assert (out / "data.csv").read_bytes() == first
    assert run(tmp_path, "generate", {"N": 100}, "--seed", "8") == 0
    assert (out / "data.csv").read_bytes() != first
    manifest = io.read_json(out / "manifest-generate.json")
    assert manifest["config"]["seed"] == 8 and set(manifest["outputs"]) == {"data.csv", "data.json"}
    assert manifest["outputs"]["data.csv"] == io.sha256(out / "data.csv")


def test_generate_invalid_count(tmp_path, capsys):
    assert run(tmp_path, "generate", {"N": 0}) == 2
    assert "N" in capsys.readouterr().err


def test_dictionary_full_selection(tmp_path):
    assert pipeline(tmp_path, {"N": 12, "s": 12}, ["generate", "dictionary"]) == [0, 0]
    W = io.read_matrix(tmp_path / "out" / "dictionary.csv")
    np.testing.assert_array_equal(np.sort(W, axis=0)[-1], 1.0)
    np.testing.assert_array_equal(W.sum(axis=0), 1.0)
    np.testing.assert_array_equal(W.sum(axis=1), 1.0)


def test_dictionary_too_large(tmp_path):
    assert run(tmp_path, "generate", {"N": 5, "s": 6}) == 0
    assert run(tmp_path, "dictionary", {"N": 5, "s": 6}) == 2


def test_missing_inputs(tmp_path, capsys):
    assert run(tmp_path, "dictionary", SMALL) == 2
    assert "generate" in capsys.readouterr().err


def test_residual_sweep(tmp_path):
    assert pipeline(tmp_path, SMALL, ["generate", "dictionary", "residual-sweep"]) == [0, 0, 0]
    out = tmp_path / "out"
    header, rows = io.read_csv(out / "residual_sweep.csv")
    assert header[:2] == ["D", "landmark_seed"] and "epsilon_V" in header
    assert [(r[0], r[1]) for r in rows] == [("20", "0"), ("20", "1"), ("40", "0"), ("40", "1")]
    assert "D20_seed0" in io.read_json(out / "manifest-residual-sweep.json")["timings_ms"]


def test_residual_sweep_empty_list(tmp_path):
    cfg = dict(SMALL, D_list=[])
    assert pipeline(tmp_path, cfg, ["generate", "dictionary", "residual-sweep"]) == [0, 0, 0]
    assert (tmp_path / "out" / "residual_sweep.csv").read_text().count("\n") == 1


def test_residual_sweep_full_landmarks(tmp_path):
    assert pipeline(tmp_path, FULL, ["generate", "dictionary", "residual-sweep"]) == [0, 0, 0]
    _, rows = io.read_csv(tmp_path / "out" / "residual_sweep.csv")
    eps = [float(v) for v in rows[0][5:7]]
    assert max(eps) <= 1e-6


def test_compare_angles_identity(tmp_path):
    assert pipeline(tmp_path, IDENTITY, ["generate", "dictionary", "compare-angles"]) == [0] * 3
    header, rows = io.read_csv(tmp_path / "out" / "compare_angles.csv")
    assert header == ["index", "theta_exact", "theta_approx_D20", "theta_approx_D40"]
    values = [float(v) for r in rows for v in r[1:] if v != ""]
    assert max(values) <= 1e-4


def test_compare_angles_full_landmarks(tmp_path):
    assert pipeline(tmp_path, FULL, ["generate", "dictionary", "compare-angles"]) == [0] * 3
    _, rows = io.read_csv(tmp_path / "out" / "compare_angles.csv")
    for _, exact, approx in rows:
        assert abs(float(exact) - float(approx)) <= 1e-6
    _, summary = io.read_csv(tmp_path / "out" / "compare_angles_summary.csv")
    assert float(summary[0][6]) <= 1e-6


def test_compare_angles_sentinel(tmp_path):
    # a tiny Nystrom model cannot resolve the whole dictionary: ranks differ
    cfg = dict(SMALL, D_list=[3], landmark_seeds=[0])
    assert pipeline(tmp_path, cfg, ["generate", "dictionary", "compare-angles"]) == [0] * 3
    text = (tmp_path / "out" / "compare_angles.csv").read_text().splitlines()
    assert text[-1].endswith(",")
    assert "nan" not in (tmp_path / "out" / "compare_angles.csv").read_text().lower()


def test_prune_and_audit(tmp_path):
    cfg = dict(SMALL, epsilon=0.05)
    codes = pipeline(tmp_path, cfg, ["generate", "dictionary", "prune"], "--audit-exact")
    assert codes == [0, 0, 0]
    out = tmp_path / "out"
    report = io.read_json(out / "prune_report.json")
    assert "audited_exact_delta" in report and report["mode"] == "approximate"
    _, rows = io.read_csv(out / "prune_iterations.csv")
    assert len(rows) == len(report["iterations"])
    W = io.read_matrix(out / "prune_final_W.csv")
    assert W.shape == (60, report["final_dimension"])
    assert (out / "nystrom_model.json").exists() and (out / "nystrom_landmarks.csv").exists()


def test_prune_vacuous_epsilon(tmp_path):
    cfg = dict(SMALL, epsilon=0.999999, mode="exact")
    assert pipeline(tmp_path, cfg, ["generate", "dictionary", "prune"]) == [0, 0, 0]
    report = io.read_json(tmp_path / "out" / "prune_report.json")
    assert len(report["iterations"]) == 1 and report["converged"]
    assert "audited_exact_delta" not in report


def test_prune_modes_agree_with_full_landmarks(tmp_path):
    dims = []
    for mode in ("exact", "approximate"):
        cfg = dict(FULL, mode=mode, epsilon=0.05)
        assert pipeline(tmp_path, cfg, ["generate", "dictionary", "prune"]) == [0, 0, 0]
        _, rows = io.read_csv(tmp_path / "out" / "prune_iterations.csv")
        dims.append([r[1] for r in rows])
    assert dims[0] == dims[1]


def test_predict_error(tmp_path):
    cfg = dict(SMALL, epsilon=0.05)
    codes = pipeline(tmp_path, cfg, ["generate", "dictionary", "predict-error", "prune",
                                     "predict-error"])
    assert codes == [0] * 5
    out = tmp_path / "out"
    header, rows = io.read_csv(out / "error_unpruned.csv")
    assert header == ["x1", "x2", "error"] and len(rows) == 60
    assert (out / "error_pruned.csv").exists()
    _, summary = io.read_csv(out / "predict_error_summary.csv")
    assert [r[0] for r in summary] == ["unpruned", "pruned", "delta"]


def test_predict_error_identity(tmp_path):
    assert pipeline(tmp_path, IDENTITY, ["generate", "dictionary", "predict-error"]) == [0] * 3
    _, rows = io.read_csv(tmp_path / "out" / "error_unpruned.csv")
    assert max(float(r[2]) for r in rows) <= 1e-6


def test_numerical_failure_exit_code(tmp_path, capsys):
    cfg = dict(SMALL, threshold=1e6)
    assert pipeline(tmp_path, cfg, ["generate", "dictionary", "compare-angles"]) == [0, 0, 3]
    assert "numerical" in capsys.readouterr().err


def test_exact_cap(tmp_path):
    cfg = dict(SMALL, exact_n_cap=50)
    assert pipeline(tmp_path, cfg, ["generate", "dictionary", "compare-angles"]) == [0, 0, 3]
    assert run(tmp_path, "compare-angles", cfg, "--force-exact") == 0


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("KSPV_N", "33")
    assert run(tmp_path, "generate", {}) == 0
    _, rows = io.read_csv(tmp_path / "out" / "data.csv")
    assert len(rows) == 33


def test_global_flags_before_command(tmp_path):
    io.write_json(tmp_path / "c.json", {"N": 10})
    code = cli.main(["--config", str(tmp_path / "c.json"), "--out", str(tmp_path / "o"),
                     "generate"])
    assert code == 0 and (tmp_path / "o" / "data.csv").exists()


def test_module_entry_point(tmp_path):
    io.write_json(tmp_path / "c.json", {"N": 10})
    proc = subprocess.run([sys.executable, "-m", "kernel_spv", "generate", "--config",
                           str(tmp_path / "c.json"), "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "kernel_spv", "bogus"], capture_output=True)
    assert proc.returncode == 2
