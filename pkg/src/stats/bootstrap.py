"""Bootstrap stability of per-vertex p-values."""

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import BootstrapResampleError, UsageError
from src.metric.distances import EUCLIDEAN_SQ, GEODESIC, build_distance_tensor
from src.stats.kernel_test import kernel_regression_test
from src.stats.pairwise import PairwiseTest, effective_pairs, sample_pairs
from src.stats.rng import BOOTSTRAP, make_rng

logger = logging.getLogger(__name__)

METHODS = ("pairwise", "kernel")
MAX_REDRAWS = 100
MIN_DISTINCT_SUBJECTS = 3


@dataclass(frozen=True)
class BootstrapReport:
    """
    p-values of every resample and their per-vertex variance.

    Attributes:
        method (str): ``pairwise`` or ``kernel``.
        n_boot (int): Number of resamples.
        p_samples (np.ndarray): (n_boot, V) p-values, NaN at excluded vertices.
        p_variance (np.ndarray): Sample variance across resamples, length V.
        resamples (np.ndarray): (n_boot, N) subject indices drawn.
    """

    method: str
    n_boot: int
    p_samples: np.ndarray
    p_variance: np.ndarray
    resamples: np.ndarray

    def mean_variance(self, vertices):
        """Mean p-value variance over ``vertices`` (NaN entries ignored)."""
        values = self.p_variance[np.asarray(sorted(vertices), dtype=np.int64)]
        return float(np.nanmean(values)) if values.size else float("nan")


def draw_resample(scores, seed, index):
    """
    Subject indices for resample ``index``, drawn with replacement.

    Draws with fewer than 3 distinct subjects or constant scores are redrawn
    from the next sub-stream, at most MAX_REDRAWS times.
    """
    n = scores.size
    for attempt in range(MAX_REDRAWS):
        rng = make_rng(seed, BOOTSTRAP, index, attempt)
        idx = rng.integers(0, n, size=n)
        if np.unique(idx).size >= MIN_DISTINCT_SUBJECTS and np.ptp(scores[idx]) > 0:
            return idx
        logger.debug(f"Redrawing bootstrap resample {index} (attempt {attempt})")
    raise BootstrapResampleError(
        f"resample {index}: no draw with >= {MIN_DISTINCT_SUBJECTS} distinct subjects "
        f"after {MAX_REDRAWS} attempts (N={n})"
    )


def bootstrap_stability(cohort, method, n_boot, cfg, distances=None):
    """
    Rerun one pipeline on n_boot subject resamples and measure p-value spread.

    Pairwise distances are functions of the subject pair only, so the sync
    and distance computations run once on the input cohort and each
    resample reads its rows from that tensor.

    Args:
        cohort (Cohort): Normalized cohort.
        method (str): ``pairwise`` or ``kernel``.
        n_boot (int): Resamples, >= 2.
        cfg (TestConfig): Test parameters; ``cfg.seed`` also seeds the draws.
        distances (DistanceTensor, optional): Precomputed full tensor of the
            kind the method needs.

    Returns:
        BootstrapReport
    """
    if method not in METHODS:
        raise UsageError(f"method must be one of {METHODS}, got {method!r}")
    if int(n_boot) < 2:
        raise UsageError(f"n_boot must be >= 2, got {n_boot}")
    n_boot = int(n_boot)
    kind = EUCLIDEAN_SQ if method == "pairwise" else GEODESIC
    if distances is None:
        distances = build_distance_tensor(cohort, kind, n_jobs=cfg.n_jobs)
    elif distances.kind != kind or distances.is_sampled:
        raise UsageError(f"{method} bootstrap needs a full {kind} tensor")

    scores = np.asarray(cohort.scores)
    n = cohort.n_subjects
    p_samples = np.full((n_boot, cohort.n_vertices), np.nan)
    resamples = np.zeros((n_boot, n), dtype=np.int64)

    for b in range(n_boot):
        idx = draw_resample(scores, cfg.seed, b)
        resamples[b] = idx
        y_b = scores[idx]
        d_b = distances.reindex(idx)
        if method == "pairwise":
            sample = sample_pairs(n, effective_pairs(n, cfg.n_pairs), y_b, cfg.seed)
            stat_map = PairwiseTest(cfg).run(d_b.restrict(sample.pairs), sample)
        else:
            stat_map = kernel_regression_test(d_b, y_b, cfg)
        p_samples[b] = stat_map.full("p_value")
        logger.info(f"Bootstrap {method} resample {b + 1}/{n_boot} done")

    p_variance = np.full(cohort.n_vertices, np.nan)
    analysed = ~np.isnan(p_samples).any(axis=0)
    p_variance[analysed] = p_samples[:, analysed].var(axis=0, ddof=1)
    return BootstrapReport(method, n_boot, p_samples, p_variance, resamples)
