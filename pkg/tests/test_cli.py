"""CLI behavior: exit codes, file plumbing, end-to-end localization."""

import json

import numpy as np
import pytest

import mmvspec.cli as cli
from mmvspec import (ObservationMask, SolverFailureError, sample_covariance,
                     synthesize)
from mmvspec.cli import main
from mmvspec.dataio import write_covariance_csv, write_ensemble_csv

GOOD_CONFIG = {"kind": "complete", "n": 16, "m": 8, "r_values": [2],
               "L_values": [1], "trials": 1, "seed": 3,
               "mask": "entrywise", "coeffs": "unit-phase", "min_sep": 1.5}


def write_config(tmp_path, data=None, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data if data is not None else GOOD_CONFIG))
    return path


@pytest.fixture(scope="module")
def clean_ensemble(tmp_path_factory):
    # two unit atoms with orthogonal coefficients: the sample covariance is
    # exactly Toeplitz, so both pipelines should localize near machine scale
    n = 32
    fs = np.array([0.2, 0.6])
    X = synthesize(fs, np.eye(2, dtype=complex), n).data
    d = tmp_path_factory.mktemp("loc")
    path = d / "ensemble.csv"
    write_ensemble_csv(path, X, ObservationMask.full(n, 2))
    return path, fs


# -------------------------------------------------------------------- usage


def test_no_command_is_usage(capsys):
    assert main([]) == 1


def test_help_exits_clean(capsys):
    assert main(["--help"]) == 0
    assert "localize" in capsys.readouterr().out


def test_version_flag(capsys):
    assert main(["--version"]) == 0


def test_unknown_flag_is_usage(capsys):
    assert main(["run", "--bogus"]) == 1
    assert "error" in capsys.readouterr().err


def test_localize_requires_mode(capsys, clean_ensemble):
    path, _ = clean_ensemble
    assert main(["localize", str(path)]) == 1


# ----------------------------------------------------------- validate-config


def test_validate_ok(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["validate-config", "--config", str(cfg)]) == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["kind"] == "complete"
    assert echoed["r_values"] == [2]


def test_validate_unknown_field(tmp_path, capsys):
    cfg = write_config(tmp_path, dict(GOOD_CONFIG, bogus=1))
    assert main(["validate-config", "--config", str(cfg)]) == 1
    assert "bogus" in capsys.readouterr().err


def test_validate_missing_file(tmp_path, capsys):
    assert main(["validate-config", "--config", str(tmp_path / "no.json")]) == 2


def test_validate_broken_json(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text("{oops")
    assert main(["validate-config", "--config", str(path)]) == 2


# ---------------------------------------------------------------------- run


def test_run_writes_outputs(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "complete" in stdout
    for name in ("trials.csv", "aggregate.csv", "manifest.json"):
        assert (out / name).exists()


def test_run_seed_override_changes_hash(tmp_path, capsys):
    cfg = write_config(tmp_path)
    outs = []
    for seed in (5, 7):
        out = tmp_path / f"out{seed}"
        assert main(["run", "--config", str(cfg), "--out", str(out),
                     "--seed", str(seed)]) == 0
        outs.append(json.loads((out / "manifest.json").read_text()))
    assert outs[0]["seed"] == 5 and outs[1]["seed"] == 7
    assert outs[0]["config_sha256"] != outs[1]["config_sha256"]


def test_run_trials_csv_deterministic(tmp_path, capsys):
    cfg = write_config(tmp_path)
    for name in ("a", "b"):
        assert main(["run", "--config", str(cfg),
                     "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "trials.csv").read_bytes()
    b = (tmp_path / "b" / "trials.csv").read_bytes()
    assert a == b


def test_run_bad_thread_count(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["run", "--config", str(cfg), "--threads", "0"]) == 1


def test_run_threads_env_default(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MMVSPEC_THREADS", "2")
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["threads"] == 2


def test_run_threads_env_garbage(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("MMVSPEC_THREADS", "many")
    cfg = write_config(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["threads"] == 1


def test_run_config_with_bad_fields(tmp_path, capsys):
    cfg = write_config(tmp_path, dict(GOOD_CONFIG, trials=-3))
    assert main(["run", "--config", str(cfg)]) == 1


def test_run_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "no.json")]) == 2


# ----------------------------------------------------------------- localize


def wrap(t, g):
    return min(abs(t - g), 1 - abs(t - g))


def test_localize_atomic_round_trip(tmp_path, capsys, clean_ensemble):
    path, fs = clean_ensemble
    out = tmp_path / "report.json"
    assert main(["localize", str(path), "--mode", "atomic",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    got = sorted(report["freqs"])
    assert len(got) == 2
    for t, g in zip(sorted(fs), got):
        assert wrap(t, g) <= 1e-4
    assert report["diagnostics"]["dual_norm_max"] <= 1 + 1e-3


def test_localize_covariance_round_trip(tmp_path, capsys, clean_ensemble):
    path, fs = clean_ensemble
    out = tmp_path / "report.json"
    assert main(["localize", str(path), "--mode", "covariance", "--r", "2",
                 "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    got = sorted(report["freqs"])
    assert len(got) == 2
    for t, g in zip(sorted(fs), got):
        assert wrap(t, g) <= 1e-4
    assert all(p >= 0 for p in report["powers"])


def test_localize_reads_covariance_files(tmp_path, capsys, clean_ensemble):
    src, fs = clean_ensemble
    n = 32
    X = synthesize(fs, np.eye(2, dtype=complex), n).data
    omega = ObservationMask.common_rows(range(n), n, 2)
    sample = sample_covariance(X, omega, 2)
    path = tmp_path / "cov.csv"
    write_covariance_csv(path, sample)
    assert main(["localize", str(path), "--mode", "covariance",
                 "--r", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    for t, g in zip(sorted(fs), sorted(report["freqs"])):
        assert wrap(t, g) <= 1e-4


def test_localize_atomic_rejects_covariance_file(tmp_path, capsys):
    omega = ObservationMask.common_rows([0, 1], 4, 3)
    sample = sample_covariance(np.ones((2, 3), dtype=complex), omega, 3)
    path = tmp_path / "cov.csv"
    write_covariance_csv(path, sample)
    assert main(["localize", str(path), "--mode", "atomic"]) == 1


def test_localize_covariance_rejects_entrywise(tmp_path, capsys):
    mask = ObservationMask.entrywise([(0, 0), (2, 1)], 4, 2)
    Z = np.where(mask.bool_array(), 1.0 + 0j, 0.0)
    path = tmp_path / "e.csv"
    write_ensemble_csv(path, Z, mask)
    assert main(["localize", str(path), "--mode", "covariance"]) == 1


def test_localize_missing_file(tmp_path, capsys):
    assert main(["localize", str(tmp_path / "no.csv"),
                 "--mode", "atomic"]) == 2


def test_localize_headerless_file(tmp_path, capsys):
    path = tmp_path / "e.csv"
    path.write_text("row,col,re,im\n")
    assert main(["localize", str(path), "--mode", "atomic"]) == 2
    assert "header" in capsys.readouterr().err


def test_localize_non_psd_covariance(tmp_path, capsys):
    from mmvspec import CovarianceSample
    omega = ObservationMask.common_rows([0, 1], 4, 3)
    sample = CovarianceSample(np.eye(2, dtype=complex), omega, 3)
    path = tmp_path / "cov.csv"
    write_covariance_csv(path, sample)
    text = path.read_text().replace("1,1,1.0,0.0", "1,1,-5.0,0.0")
    path.write_text(text)
    assert main(["localize", str(path), "--mode", "covariance"]) == 2


def test_localize_out_of_range_order(tmp_path, capsys, clean_ensemble):
    path, _ = clean_ensemble
    assert main(["localize", str(path), "--mode", "covariance",
                 "--r", "99"]) == 1


def test_localize_solver_failure(tmp_path, capsys, clean_ensemble, monkeypatch):
    def boom(*args, **kwargs):
        raise SolverFailureError("synthetic failure")
    monkeypatch.setattr(cli, "admm_complete", boom)
    path, _ = clean_ensemble
    assert main(["localize", str(path), "--mode", "atomic"]) == 3
    assert "solver failure" in capsys.readouterr().err
