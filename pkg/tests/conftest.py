"""Shared fixtures: small random cohorts and stored copies of them."""

import numpy as np
import pytest

from src.data.cohort import Cohort, Subject, store_cohort
from src.data.timeseries import TimeSeriesMatrix, normalize_columns
from src.sim.synthetic import SimulationConfig, generate_synthetic_cohort


def random_matrix(rng, n_timepoints, n_vertices):
    return normalize_columns(TimeSeriesMatrix(rng.standard_normal((n_timepoints, n_vertices))))


def random_cohort(rng, n_subjects=8, n_timepoints=12, n_vertices=6, scores=None):
    subjects = tuple(
        Subject(f"sub-{i:02d}", random_matrix(rng, n_timepoints, n_vertices)) for i in range(n_subjects)
    )
    if scores is None:
        scores = rng.uniform(0.0, 10.0, size=n_subjects)
    return Cohort(subjects, scores)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_cohort(rng):
    return random_cohort(rng)


@pytest.fixture
def small_sim_config():
    return SimulationConfig(
        seed=7, n_subjects=10, n_timepoints=16, n_vertices=20, sigma_max=0.3, latent_rank=4
    )


@pytest.fixture
def stored_cohort(tmp_path, small_sim_config):
    """Manifest path of a small synthetic cohort written to disk."""
    cohort = generate_synthetic_cohort(small_sim_config)
    return store_cohort(cohort, str(tmp_path / "cohort"))
