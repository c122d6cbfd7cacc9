"""End-to-end tests of the synckern command line."""

import json
import os

import numpy as np
import pandas as pd
import pytest

from src.data.cohort import load_cohort, store_cohort
from src.errors import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from src.main import LOG_NAME, run_pipeline
from src.output.tsv_output import MANIFEST_NAME


def read_outputs(directory):
    """File name -> bytes for every artifact except the log."""
    outputs = {}
    for name in sorted(os.listdir(directory)):
        if name == LOG_NAME:
            continue
        with open(os.path.join(directory, name), "rb") as f:
            outputs[name] = f.read()
    return outputs


def test_unknown_command_is_a_usage_error():
    assert run_pipeline(["frobnicate"]) == EXIT_USAGE


def test_missing_seed_is_a_usage_error(stored_cohort, tmp_path):
    assert run_pipeline(["kernreg", "--manifest", stored_cohort, "--out", str(tmp_path / "out")]) == EXIT_USAGE


def test_early_failure_is_reported_once(stored_cohort, tmp_path, capsys):
    run_pipeline(["kernreg", "--manifest", stored_cohort, "--out", str(tmp_path / "out")])
    assert capsys.readouterr().err.count("--seed is required") == 1


def test_late_failure_is_reported_once_and_logged(stored_cohort, tmp_path, capsys):
    out = tmp_path / "out"
    args = ["sync", "--manifest", stored_cohort, "--seed", "1", "--source", "sub-999", "--target", "sub-000"]
    assert run_pipeline(args + ["--out", str(out)]) == EXIT_USAGE
    assert capsys.readouterr().err.count("'sub-999' is not in the manifest") == 1
    assert "'sub-999' is not in the manifest" in (out / LOG_NAME).read_text()


def test_undecodable_manifest_is_a_data_error(tmp_path):
    manifest = tmp_path / "manifest.json"
    manifest.write_bytes(b'{"subjects": [\xff]}')
    args = ["kernreg", "--manifest", str(manifest), "--seed", "1", "--out", str(tmp_path / "out")]
    assert run_pipeline(args) == EXIT_DATA


def test_kernreg_writes_a_stat_map(stored_cohort, tmp_path):
    out = tmp_path / "out"
    code = run_pipeline(
        ["kernreg", "--manifest", stored_cohort, "--seed", "3", "--permutations", "49", "--out", str(out)]
    )
    assert code == EXIT_OK
    table = pd.read_csv(out / "kernreg.tsv", sep="\t")
    assert list(table.columns) == ["vertex", "statistic", "p", "q", "rejected"]
    assert len(table) == 20
    assert table["p"].between(1 / 50, 1.0).all()
    manifest = json.loads((out / MANIFEST_NAME).read_text())
    assert set(manifest) == {"command", "version", "parameters", "results"}
    assert manifest["command"] == "kernreg"
    assert manifest["parameters"]["seed"] == 3
    assert (out / LOG_NAME).exists()


def test_auto_gamma_writes_bandwidth_report(stored_cohort, tmp_path):
    out = tmp_path / "out"
    args = ["kernreg", "--manifest", stored_cohort, "--seed", "3", "--permutations", "19", "--gamma", "auto"]
    assert run_pipeline(args + ["--grid-size", "5", "--out", str(out)]) == EXIT_OK
    lines = (out / "bandwidth.tsv").read_text().splitlines()
    assert lines[0] == "gamma\tloo_mse"
    assert len(lines) == 7
    assert lines[-1].startswith("selected\t")
    manifest = json.loads((out / MANIFEST_NAME).read_text())
    assert manifest["results"]["selected_gamma"] == pytest.approx(float(lines[-1].split("\t")[1]))


def test_sync_writes_transform(stored_cohort, tmp_path):
    out = tmp_path / "out"
    args = ["sync", "--manifest", stored_cohort, "--seed", "1", "--source", "sub-001", "--target", "sub-000"]
    assert run_pipeline(args + ["--out", str(out)]) == EXIT_OK
    table = pd.read_csv(out / "sync.tsv", sep="\t")
    assert table.loc[0, "source"] == "sub-001"
    assert table.loc[0, "orthogonality_error"] < 1e-10


def test_corrupt_timeseries_is_a_data_error(stored_cohort, tmp_path):
    directory = os.path.dirname(stored_cohort)
    with open(os.path.join(directory, "sub-002.skts"), "wb") as f:
        f.write(b"NOPE" + bytes(64))
    args = ["pairwise", "--manifest", stored_cohort, "--seed", "1", "--out", str(tmp_path / "out")]
    assert run_pipeline(args) == EXIT_DATA


def test_constant_scores_are_a_numerical_error(stored_cohort, tmp_path):
    cohort = load_cohort(stored_cohort)
    flat = store_cohort(cohort.with_scores(np.full(cohort.n_subjects, 1.0)), str(tmp_path / "flat"))
    args = ["pairwise", "--manifest", flat, "--seed", "1", "--permutations", "9", "--out", str(tmp_path / "out")]
    assert run_pipeline(args) == EXIT_NUMERICAL


@pytest.mark.parametrize(
    "command, extra",
    [
        ("pairwise", ["--pairs", "30"]),
        ("kernreg", ["--gamma", "auto", "--grid-size", "4"]),
        ("bootstrap", ["--nboot", "2", "--method", "pairwise"]),
    ],
)
def test_outputs_do_not_depend_on_threads(stored_cohort, tmp_path, command, extra):
    base = [command, "--manifest", stored_cohort, "--seed", "17", "--permutations", "29"] + extra
    outputs = []
    for threads in ("1", "4", "8"):
        out = tmp_path / f"threads-{threads}"
        assert run_pipeline(base + ["--threads", threads, "--out", str(out)]) == EXIT_OK
        outputs.append(read_outputs(out))
    assert outputs[0] == outputs[1] == outputs[2]


def test_rerun_from_run_manifest(stored_cohort, tmp_path):
    first = tmp_path / "first"
    args = ["kernreg", "--manifest", stored_cohort, "--seed", "8", "--permutations", "39", "--gamma", "1.5"]
    assert run_pipeline(args + ["--out", str(first)]) == EXIT_OK
    second = tmp_path / "second"
    rerun = ["kernreg", "--config", str(first / MANIFEST_NAME), "--out", str(second), "--threads", "3"]
    assert run_pipeline(rerun) == EXIT_OK
    assert read_outputs(first) == read_outputs(second)


def test_config_file_overrides_flags(stored_cohort, tmp_path):
    config = tmp_path / "options.yaml"
    config.write_text(f"seed: 4\npermutations: 19\nmanifest: {stored_cohort}\n")
    out = tmp_path / "out"
    args = ["kernreg", "--config", str(config), "--permutations", "500", "--out", str(out)]
    assert run_pipeline(args) == EXIT_OK
    manifest = json.loads((out / MANIFEST_NAME).read_text())
    assert manifest["parameters"]["permutations"] == 19


def test_simulate_writes_report_and_cohort(tmp_path):
    out = tmp_path / "out"
    args = [
        "simulate", "--seed", "5", "--subjects", "8", "--timepoints", "12", "--vertices", "10",
        "--latent-rank", "3", "--permutations", "19", "--pairs", "20",
        "--write-cohort", str(tmp_path / "cohort"), "--out", str(out),
    ]
    assert run_pipeline(args) == EXIT_OK
    report = pd.read_csv(out / "simulation.tsv", sep="\t")
    assert list(report["method"]) == ["kernel", "pairwise"]
    assert (out / "simulate-kernel.tsv").exists()
    assert (out / "simulate-pairwise.tsv").exists()
    assert load_cohort(str(tmp_path / "cohort" / "manifest.json")).n_subjects == 8
