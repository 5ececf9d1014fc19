import json

import numpy as np
import pytest

import mtppi.checks
from mtppi.cli import ESTIMATES_HEADER, main
from mtppi.experiments import read_summary_rows

TASK_CSV = """task_id,item_id,y_hat,y,label_eligible
alpha,i1,0.10,0.20,1
alpha,i2,0.50,,0
alpha,i3,0.90,0.80,1
alpha,i4,0.60,0.55,1
alpha,i5,0.30,0.35,1
alpha,i6,0.80,,0
beta,i1,0.30,0.35,1
beta,i2,0.70,,0
beta,i3,0.40,0.45,1
beta,i4,0.20,0.15,1
beta,i5,0.90,0.95,1
beta,i6,0.10,,0
"""


def write(tmp_path, name, payload):
    path = tmp_path / name
    if isinstance(payload, str):
        path.write_text(payload, encoding="utf-8")
    else:
        path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def synthetic_config(tmp_path, **run_overrides):
    run = {
        "methods": ["classical", "ppi", "ppi_pp"],
        "label_budgets": [6, 10],
        "replications": 10,
    }
    run.update(run_overrides)
    cfg = {
        "synthetic": {"n_tasks": 2, "items_per_task": 30, "p_min": 1.0, "p_max": 2.0,
                      "noise_sd": 0.05, "seed": 3},
        "run": run,
    }
    return write(tmp_path, "synth.json", cfg)


def test_verify_passes(capsys):
    assert main(["verify", "--seed", "0"]) == 0
    out = capsys.readouterr().out
    lines = [l for l in out.splitlines() if l]
    assert len(lines) >= 7
    assert all(l.startswith("PASS") for l in lines)
    assert any("estimator_law" in l for l in lines)


def test_verify_detects_corruption(capsys, monkeypatch):
    import mtppi.variance

    monkeypatch.setattr(
        mtppi.checks, "_lambda_star",
        lambda y, s: mtppi.variance.lambda_star(y, s) * 1.05,
    )
    assert main(["verify", "--seed", "0"]) == 3
    out = capsys.readouterr().out
    assert any(l.startswith("FAIL") for l in out.splitlines())


def test_synthetic_run_writes_reports(tmp_path, capsys):
    cfg = synthetic_config(tmp_path)
    out = tmp_path / "out"
    assert main(["synthetic", "--config", cfg, "--seed", "5", "--out", str(out)]) == 0
    rows = read_summary_rows(str(out / "summary.csv"))
    assert rows, "summary should not be empty"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["run"]["master_seed"] == 5
    assert manifest["extra"]["synthetic"]["p_min"] == 1.0
    assert "threads" not in json.dumps(manifest)
    # ppi_pp is configured, so it is the default reference
    assert manifest["run"]["reference_method"] == "ppi_pp"


def test_synthetic_byte_identical_across_threads(tmp_path):
    cfg = synthetic_config(tmp_path)
    out1, out8 = tmp_path / "t1", tmp_path / "t8"
    assert main(["synthetic", "--config", cfg, "--seed", "2", "--out", str(out1),
                 "--threads", "1"]) == 0
    assert main(["synthetic", "--config", cfg, "--seed", "2", "--out", str(out8),
                 "--threads", "8"]) == 0
    assert (out1 / "summary.csv").read_bytes() == (out8 / "summary.csv").read_bytes()
    assert (out1 / "manifest.json").read_bytes() == (out8 / "manifest.json").read_bytes()


def test_synthetic_p_ranges_sweep(tmp_path):
    cfg = {
        "synthetic": {"n_tasks": 2, "items_per_task": 30,
                      "p_ranges": [[1.0, 2.0], [8.0, 10.0]], "seed": 1},
        "run": {"methods": ["classical", "ppi"], "label_budgets": [6],
                "replications": 5},
    }
    path = write(tmp_path, "sweep.json", cfg)
    out = tmp_path / "sweep"
    assert main(["synthetic", "--config", path, "--out", str(out)]) == 0
    assert (out / "p1-2" / "summary.csv").exists()
    assert (out / "p8-10" / "summary.csv").exists()


def test_set_overrides_apply(tmp_path):
    cfg = synthetic_config(tmp_path)
    out = tmp_path / "ov"
    assert main(["synthetic", "--config", cfg, "--out", str(out),
                 "--set", "run.replications=3",
                 "--set", "run.label_budgets=[6]"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["run"]["replications"] == 3
    assert manifest["run"]["label_budgets"] == [6]


def test_estimate_single_shot(tmp_path):
    data = write(tmp_path, "tasks.csv", TASK_CSV)
    cfg = write(tmp_path, "est.json", {
        "input": data,
        "run": {"methods": ["classical", "ppi", "greppi", "areppi"]},
    })
    out = tmp_path / "est"
    assert main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    lines = (out / "estimates.csv").read_text().splitlines()
    assert lines[0] == ",".join(ESTIMATES_HEADER)
    body = [l.split(",") for l in lines[1:]]
    assert len(body) == 2 * 4  # tasks x methods
    assert {row[0] for row in body} == {"alpha", "beta"}
    for row in body:
        n = int(row[2])
        assert n == 4
        theta, lam, se, lo, hi, level = map(float, row[3:])
        assert np.isfinite(theta)
        assert lo <= theta <= hi
        assert level == 0.95
        if row[1] == "classical":
            assert lam == 0.0


def test_estimate_replication_mode_real_data(tmp_path):
    data = write(tmp_path, "tasks.csv", TASK_CSV)
    cfg = write(tmp_path, "est.json", {
        "input": data,
        "run": {"methods": ["classical", "ppi"], "label_budgets": [3],
                "replications": 8},
    })
    out = tmp_path / "rep"
    assert main(["estimate", "--config", cfg, "--out", str(out)]) == 0
    rows = read_summary_rows(str(out / "summary.csv"))
    metrics = {r["metric"] for r in rows}
    assert "mean_ci_width" in metrics
    assert "mse" not in metrics  # no ground truth for unlabeled items
    assert "coverage" not in metrics


def test_report_round_trip(tmp_path):
    cfg = synthetic_config(tmp_path)
    out = tmp_path / "base"
    assert main(["synthetic", "--config", cfg, "--out", str(out)]) == 0
    rep_cfg = write(tmp_path, "rep.json", {"input": str(out / "summary.csv")})
    rep_out = tmp_path / "rep"
    assert main(["report", "--config", rep_cfg, "--out", str(rep_out)]) == 0
    payload = json.loads((rep_out / "summary.json").read_text())
    assert len(payload["rows"]) == len(read_summary_rows(str(out / "summary.csv")))


def test_usage_errors_exit_1(capsys):
    assert main([]) == 1
    assert main(["bogus"]) == 1
    assert main(["verify", "--bogus-flag"]) == 1
    err = capsys.readouterr().err
    assert "usage error" in err


def test_config_errors_exit_1(tmp_path, capsys):
    # no config at all
    assert main(["synthetic"]) == 1
    # config file with an unknown method
    cfg = write(tmp_path, "bad.json", {
        "synthetic": {"p_min": 1.0, "p_max": 2.0},
        "run": {"methods": ["nope"], "label_budgets": [6], "replications": 2},
    })
    assert main(["synthetic", "--config", cfg]) == 1
    # malformed JSON
    broken = write(tmp_path, "broken.json", "{not json")
    assert main(["synthetic", "--config", broken]) == 1
    # unknown top-level key
    stray = write(tmp_path, "stray.json", {
        "synthetic": {"p_min": 1.0, "p_max": 2.0}, "run": {"methods": ["ppi"]},
        "typo_key": 1,
    })
    assert main(["synthetic", "--config", stray]) == 1
    err = capsys.readouterr().err
    assert "config error" in err


def test_data_errors_exit_2(tmp_path, capsys):
    bad_csv = write(tmp_path, "bad.csv", "task_id,item_id\nx,y\n")
    cfg = write(tmp_path, "est.json", {"input": bad_csv, "run": {"methods": ["ppi"]}})
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    # missing file is a data error too
    cfg2 = write(tmp_path, "est2.json", {"input": str(tmp_path / "absent.csv"),
                                         "run": {"methods": ["ppi"]}})
    assert main(["estimate", "--config", cfg2, "--out", str(tmp_path / "o2")]) == 2
    err = capsys.readouterr().err
    assert "data error" in err


def test_threads_env_fallback(tmp_path, monkeypatch):
    cfg = synthetic_config(tmp_path)
    monkeypatch.setenv("PPI_MT_THREADS", "2")
    out = tmp_path / "env"
    assert main(["synthetic", "--config", cfg, "--out", str(out)]) == 0
    monkeypatch.setenv("PPI_MT_THREADS", "zero")
    assert main(["synthetic", "--config", cfg, "--out", str(out)]) == 1
    monkeypatch.setenv("PPI_MT_THREADS", "0")
    assert main(["synthetic", "--config", cfg, "--out", str(out)]) == 1


def test_budget_above_pool_is_config_error(tmp_path):
    data = write(tmp_path, "tasks.csv", TASK_CSV)
    cfg = write(tmp_path, "est.json", {
        "input": data,
        "run": {"methods": ["classical"], "label_budgets": [5], "replications": 4},
    })
    # each task has only 4 eligible rows
    assert main(["estimate", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
