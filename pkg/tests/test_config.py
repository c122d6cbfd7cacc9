"""Tests for config-file loading and run configuration validation."""

import json

import pytest

from src.config import AUTO, DEFAULTS, RunConfig, load_config
from src.errors import UsageError


def test_json_file_is_merged_with_defaults(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 5, "permutations": 99}))
    config = load_config(str(path))
    assert config["seed"] == 5
    assert config["permutations"] == 99
    assert config["alpha"] == DEFAULTS["alpha"]


def test_yaml_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("seed: 3\ngamma: auto\nroi: [1, 2, 3]\n")
    config = load_config(str(path))
    assert config["gamma"] == "auto"
    assert config["roi"] == [1, 2, 3]


def test_file_values_win_over_given_defaults(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"alpha": 0.1}))
    merged = dict(DEFAULTS, alpha=0.01, seed=9)
    config = load_config(str(path), defaults=merged)
    assert config["alpha"] == 0.1
    assert config["seed"] == 9


def test_run_manifest_is_a_config(tmp_path):
    path = tmp_path / "run-manifest.json"
    manifest = {"command": "kernreg", "version": "0.1.0", "parameters": {"command": "x", "seed": 4}, "results": {}}
    path.write_text(json.dumps(manifest))
    config = load_config(str(path))
    assert config["seed"] == 4
    assert "command" not in config


@pytest.mark.parametrize(
    "name, text",
    [
        ("run.json", '{"seed": 1, "colour": "red"}'),
        ("run.json", "{not json"),
        ("run.yaml", "- a\n- b\n"),
        ("run.toml", "seed = 1"),
    ],
)
def test_bad_config_files(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    with pytest.raises(UsageError):
        load_config(str(path))


def test_missing_config_file(tmp_path):
    with pytest.raises(UsageError):
        load_config(str(tmp_path / "nope.json"))


def test_seed_is_required():
    with pytest.raises(UsageError):
        RunConfig(command="simulate", seed=None)


def test_manifest_must_exist(tmp_path):
    with pytest.raises(UsageError):
        RunConfig(command="kernreg", seed=1, manifest=str(tmp_path / "missing.json"))


def test_sync_needs_subject_ids(stored_cohort):
    with pytest.raises(UsageError):
        RunConfig(command="sync", seed=1, manifest=stored_cohort, source="sub-000")


def test_gamma_parsing(stored_cohort):
    assert RunConfig(command="kernreg", seed=1, manifest=stored_cohort, gamma="AUTO").gamma == AUTO
    assert RunConfig(command="kernreg", seed=1, manifest=stored_cohort, gamma="2.5").gamma == 2.5
    with pytest.raises(UsageError):
        RunConfig(command="kernreg", seed=1, manifest=stored_cohort, gamma="wide")
    with pytest.raises(UsageError):
        RunConfig(command="pairwise", seed=1, manifest=stored_cohort, gamma="auto")


@pytest.mark.parametrize(
    "kwargs",
    [{"alpha": 1.5}, {"permutations": 0}, {"grid_size": 0}, {"sigma_max": -1.0}, {"background_weight": 2.0}],
)
def test_ranges_are_validated(kwargs):
    with pytest.raises(UsageError):
        RunConfig(command="simulate", seed=1, **kwargs)


def test_parameters_leave_out_location_and_threads():
    params = RunConfig(command="simulate", seed=1, out="elsewhere", threads=8, roi=(3, 1)).to_parameters()
    assert not {"command", "out", "threads"} & set(params)
    assert params["roi"] == [3, 1]
    assert set(params) == set(DEFAULTS) - {"out", "threads"}


def test_typed_views():
    run = RunConfig(command="simulate", seed=11, subjects=12, score_low=1, score_high=2, threads=3)
    sim = run.simulation_config()
    assert (sim.seed, sim.n_subjects, sim.score_range) == (11, 12, (1.0, 2.0))
    test_cfg = run.test_config(gamma=4.0)
    assert (test_cfg.gamma, test_cfg.n_jobs) == (4.0, 3)
