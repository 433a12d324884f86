"""CLI surface: argument validation, outputs, manifests, exit codes.

Runs the click commands in-process with small configurations; the full
paper-scale invocations live in test_acceptance.py.
"""

import csv
import json

import numpy as np
import pytest
from click.testing import CliRunner

from heavytail_ph import cli, phmodel


@pytest.fixture()
def runner():
    return CliRunner()


def run_fit(runner, out_dir, *extra):
    args = ["fit", "--target", "pareto", "--shape", "3.1",
            "--method", "bph_he", "--k", "2", "--bph-order", "40",
            "--grid-size", "128", "--max-iters", "30",
            "--out", str(out_dir), *extra]
    return runner.invoke(cli.main, args, catch_exceptions=False)


def test_fit_writes_model_report_manifest(runner, tmp_path):
    result = run_fit(runner, tmp_path, "--trace-csv")
    assert result.exit_code == 0
    model = phmodel.PhaseTypeModel.load(tmp_path / "model.json")
    assert model.order == 42
    assert model.is_proper

    report = json.loads((tmp_path / "report.json").read_text())
    assert report["method"] == "bph_he"
    assert report["mae"] < 1e-2
    assert report["mean_approx"] == pytest.approx(report["mean_real"],
                                                  rel=1e-9)
    assert len(report["he_points"]) == 4

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["subcommand"] == "fit"
    assert manifest["config"]["k"] == 2
    assert str(tmp_path / "model.json") in manifest["outputs"]
    assert (tmp_path / "loss_trace.csv").exists()

    # stdout carries the report as JSON.
    assert json.loads(result.output)["method"] == "bph_he"


def test_fit_requires_exactly_one_target(runner, tmp_path):
    result = runner.invoke(cli.main, ["fit", "--out", str(tmp_path)])
    assert result.exit_code == cli.EXIT_CONFIG
    result = runner.invoke(cli.main, [
        "fit", "--target", "pareto", "--shape", "3.1",
        "--target-csv", "/dev/null", "--out", str(tmp_path)])
    assert result.exit_code == cli.EXIT_CONFIG


def test_fit_missing_param_fails(runner, tmp_path):
    result = runner.invoke(cli.main, ["fit", "--target", "burr", "--c", "2",
                                      "--out", str(tmp_path)])
    assert result.exit_code == cli.EXIT_CONFIG
    assert "--d" in result.output


def test_fit_failure_exit_code(runner, tmp_path):
    # Tail points forced deep into the body are unbuildable without the
    # optimizer: the fit must fail with the dedicated exit code.
    result = runner.invoke(cli.main, [
        "fit", "--target", "pareto", "--shape", "3.1", "--method", "bph_he",
        "--k", "2", "--no-optimize", "--tail-window", "0.01,0.2",
        "--out", str(tmp_path)])
    assert result.exit_code == cli.EXIT_FIT_FAILURE


def test_no_adjust_mean_flag(runner, tmp_path):
    result = run_fit(runner, tmp_path, "--no-adjust-mean")
    assert result.exit_code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["mean_approx"] != pytest.approx(report["mean_real"],
                                                  rel=1e-9)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["adjust_mean"] is False


def test_eval_tabulates_model_and_target(runner, tmp_path):
    assert run_fit(runner, tmp_path).exit_code == 0
    out = tmp_path / "eval"
    result = runner.invoke(cli.main, [
        "eval", "--model", str(tmp_path / "model.json"),
        "--grid", "0:5:11", "--out", str(out)], catch_exceptions=False)
    assert result.exit_code == 0
    with open(out / "eval.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 11
    assert set(rows[0]) == {"x", "ccdf", "cdf", "pdf",
                            "target_ccdf", "target_cdf", "target_pdf"}
    # Complements hold row by row.
    for row in rows:
        assert float(row["ccdf"]) + float(row["cdf"]) == pytest.approx(1.0,
                                                                       abs=1e-9)
    # Model tracks the target CCDF loosely even at this small order.
    mid = rows[5]
    assert float(mid["ccdf"]) == pytest.approx(float(mid["target_ccdf"]),
                                               abs=0.05)


def test_eval_rejects_bad_model(runner, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    result = runner.invoke(cli.main, ["eval", "--model", str(bad),
                                      "--out", str(tmp_path)])
    assert result.exit_code == cli.EXIT_CONFIG


def test_compare_lists_methods(runner, tmp_path):
    result = runner.invoke(cli.main, [
        "compare", "--target", "pareto", "--shape", "3.1", "--k", "2",
        "--bph-order", "40", "--grid-size", "128", "--max-iters", "30",
        "--methods", "bph,he", "--out", str(tmp_path)],
        catch_exceptions=False)
    assert result.exit_code == 0
    with open(tmp_path / "compare.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["method"] for r in rows] == ["bph", "he"]
    for r in rows:
        assert float(r["mae"]) >= 0.0


def test_queue_metrics_and_curves(runner, tmp_path):
    assert run_fit(runner, tmp_path).exit_code == 0
    out = tmp_path / "queue"
    result = runner.invoke(cli.main, [
        "queue", "--model", str(tmp_path / "model.json"), "--lam", "0.5",
        "--wait-grid", "0:5:6", "--qlen-max", "8", "--out", str(out)],
        catch_exceptions=False)
    assert result.exit_code == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert 0.0 < metrics["rho"] < 1.0
    assert metrics["E_T"] == pytest.approx(metrics["E_W"] + metrics["E_S"],
                                           rel=1e-12)
    assert (out / "wait_ccdf.csv").exists()
    with open(out / "queue_length.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 9


def test_queue_unstable_exit_code(runner, tmp_path):
    assert run_fit(runner, tmp_path).exit_code == 0
    result = runner.invoke(cli.main, [
        "queue", "--model", str(tmp_path / "model.json"), "--lam", "50",
        "--out", str(tmp_path / "q")])
    assert result.exit_code == cli.EXIT_CONFIG
    assert "unstable" in result.output


def test_simulate_small_run(runner, tmp_path):
    result = runner.invoke(cli.main, [
        "simulate", "--target", "pareto", "--shape", "3.1", "--lam", "0.5",
        "--jobs", "20000", "--warmup", "2000", "--replications", "2",
        "--seed", "0", "--curves", "--out", str(tmp_path)],
        catch_exceptions=False)
    assert result.exit_code == 0
    doc = json.loads((tmp_path / "sim_metrics.json").read_text())
    est = doc["estimates"]["E_W"]
    assert est["mean"] > 0.0 and est["halfwidth95"] > 0.0
    assert (tmp_path / "sim_wait_ccdf.csv").exists()
    assert (tmp_path / "sim_queue_length.csv").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["seed"] == 0


def test_version_flag(runner):
    result = runner.invoke(cli.main, ["--version"])
    assert result.exit_code == 0
