"""Tests for bootstrap p-value stability."""

import numpy as np
import pytest

from src.errors import BootstrapResampleError, UsageError
from src.stats.base_test import TestConfig
from src.stats.bootstrap import MIN_DISTINCT_SUBJECTS, bootstrap_stability, draw_resample
from tests.conftest import random_cohort


def test_resamples_have_enough_distinct_subjects():
    scores = np.arange(6.0)
    for b in range(50):
        idx = draw_resample(scores, seed=3, index=b)
        assert idx.size == 6
        assert np.unique(idx).size >= MIN_DISTINCT_SUBJECTS
        assert np.ptp(scores[idx]) > 0


def test_two_subjects_cannot_be_resampled():
    with pytest.raises(BootstrapResampleError):
        draw_resample(np.array([1.0, 2.0]), seed=1, index=0)


@pytest.mark.parametrize("method", ["pairwise", "kernel"])
def test_report_shape_and_determinism(rng, method):
    cohort = random_cohort(rng, n_subjects=8, n_vertices=5)
    cfg = TestConfig(seed=12, n_permutations=39, n_pairs=15)
    first = bootstrap_stability(cohort, method, 3, cfg)
    second = bootstrap_stability(cohort, method, 3, cfg)
    assert first.p_samples.shape == (3, 5)
    assert first.resamples.shape == (3, 8)
    np.testing.assert_array_equal(first.p_samples, second.p_samples)
    np.testing.assert_allclose(first.p_variance, first.p_samples.var(axis=0, ddof=1))
    assert np.all((first.p_samples > 0) & (first.p_samples <= 1))


def test_worker_count_does_not_change_the_report(rng):
    cohort = random_cohort(rng, n_subjects=7, n_vertices=4)
    one = bootstrap_stability(cohort, "kernel", 2, TestConfig(seed=2, n_permutations=19, n_jobs=1))
    three = bootstrap_stability(cohort, "kernel", 2, TestConfig(seed=2, n_permutations=19, n_jobs=3))
    assert one.p_samples.tobytes() == three.p_samples.tobytes()


def test_mean_variance_over_vertices(rng):
    cohort = random_cohort(rng, n_subjects=6, n_vertices=4)
    report = bootstrap_stability(cohort, "kernel", 2, TestConfig(seed=1, n_permutations=9))
    assert report.mean_variance([0, 1]) == pytest.approx(report.p_variance[:2].mean())


def test_invalid_arguments(small_cohort):
    cfg = TestConfig(seed=1, n_permutations=9)
    with pytest.raises(UsageError):
        bootstrap_stability(small_cohort, "wavelet", 3, cfg)
    with pytest.raises(UsageError):
        bootstrap_stability(small_cohort, "kernel", 1, cfg)
