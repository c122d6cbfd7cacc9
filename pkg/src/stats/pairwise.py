"""Pairwise distance tests: signal distance against score difference over subject pairs."""

import logging
import math
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from src.errors import DegenerateCorrelationError, DegenerateScoresError, DimensionMismatchError, UsageError
from src.metric.distances import EUCLIDEAN_SQ, build_distance_tensor
from src.stats.base_test import BaseTest, TIE_TOLERANCE, permutation_pvalue, variance_ratio_result
from src.stats.rng import PAIRS, check_seed, make_rng

logger = logging.getLogger(__name__)


def pearson_correlation(a, b):
    """
    Sample Pearson correlation.

    Raises:
        DegenerateCorrelationError: Either vector is constant.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"vectors of length {a.size} and {b.size}")
    if a.size < 3:
        raise UsageError(f"correlation needs at least 3 observations, got {a.size}")
    ac, bc = a - a.mean(), b - b.mean()
    na, nb = math.sqrt(np.dot(ac, ac)), math.sqrt(np.dot(bc, bc))
    if na == 0.0 or nb == 0.0:
        raise DegenerateCorrelationError("correlation undefined: an input vector is constant")
    return float(np.clip(np.dot(ac, bc) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class PairSample:
    """
    Distinct unordered subject pairs with their score differences.

    Attributes:
        pairs (tuple): (i, j) with i < j, lexicographically ordered.
        seed (int): Seed the sample was drawn with.
        d_T (np.ndarray): |y_i - y_j| per pair.
        scores (np.ndarray): The y the differences were computed from.
    """

    pairs: Tuple[Tuple[int, int], ...]
    seed: int
    d_T: np.ndarray
    scores: np.ndarray

    @property
    def n_pairs(self):
        return len(self.pairs)

    @property
    def first(self):
        return np.array([i for i, _ in self.pairs], dtype=np.int64)

    @property
    def second(self):
        return np.array([j for _, j in self.pairs], dtype=np.int64)


def _pair_from_rank(rank, n):
    # lexicographic unranking of (i, j), i < j
    i = 0
    remaining = rank
    while remaining >= n - 1 - i:
        remaining -= n - 1 - i
        i += 1
    return i, i + 1 + remaining


def sample_pairs(n_subjects, n_pairs, y, seed):
    """
    Uniform sample of distinct unordered pairs, without replacement.

    Args:
        n_subjects (int): N.
        n_pairs (int): Number of pairs, at most C(N, 2).
        y (array-like): Scores, length N.
        seed (int): Sampling seed.

    Returns:
        PairSample
    """
    seed = check_seed(seed)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != n_subjects:
        raise DimensionMismatchError(f"{y.size} scores for {n_subjects} subjects")
    total = math.comb(n_subjects, 2)
    if n_pairs < 1 or n_pairs > total:
        raise UsageError(f"cannot sample {n_pairs} distinct pairs from {n_subjects} subjects (C(N,2)={total})")
    rng = make_rng(seed, PAIRS)
    ranks = np.sort(rng.choice(total, size=n_pairs, replace=False))
    pairs = tuple(_pair_from_rank(int(r), n_subjects) for r in ranks)
    first = np.array([i for i, _ in pairs])
    second = np.array([j for _, j in pairs])
    d_t = np.abs(y[first] - y[second])
    return PairSample(pairs, seed, d_t, y.copy())


class PairwiseTest(BaseTest):
    """
    Permutation test relating per-pair signal distance to score difference.

    ``correlation`` uses |Pearson r| between d_F and d_T (two-sided);
    ``residual`` compares residual variances of the least-squares fit of d_T
    on d_F under observed and permuted scores.
    """

    def run(self, d, sample):
        if d.kind != EUCLIDEAN_SQ or not d.is_sampled:
            raise UsageError("the pairwise test needs a sampled euclidean_sq distance tensor")
        if tuple(d.pairs) != tuple(sample.pairs):
            raise UsageError("distance tensor pairs differ from the pair sample")
        y = sample.scores
        if np.ptp(y) == 0.0:
            raise DegenerateScoresError("all subjects share the same score; d_T is identically zero")
        if sample.n_pairs < 3:
            raise UsageError(f"the pairwise test needs at least 3 pairs, got {sample.n_pairs}")

        schedule = self.schedule(y.size)
        permuted = y[schedule]
        d_t = np.vstack([sample.d_T, np.abs(permuted[:, sample.first] - permuted[:, sample.second])])
        centered = d_t - d_t.mean(axis=1, keepdims=True)
        norms = np.sqrt(np.einsum("bp,bp->b", centered, centered))
        with np.errstate(invalid="ignore", divide="ignore"):
            self._z = np.where(norms[:, None] > 0, centered / norms[:, None], 0.0)
        self._ss = norms ** 2
        self._d = d

        vertices = d.included_vertices
        logger.info(
            f"Pairwise {self.cfg.pairwise_statistic} test: {sample.n_pairs} pairs, "
            f"{self.cfg.n_permutations} permutations, {vertices.size} vertices"
        )
        return self._run_vertices(vertices, d.n_vertices)

    def _test_vertex(self, vertex):
        f = self._d.values[:, vertex]
        fc = f - f.mean()
        norm = math.sqrt(np.dot(fc, fc))
        if norm <= 1e-14 * max(1.0, float(np.abs(f).max())):
            logger.debug(f"Vertex {vertex}: constant signal distance, p = 1")
            return 0.0, 1.0
        r = self._z @ (fc / norm)
        np.clip(r, -1.0, 1.0, out=r)
        b = self.cfg.n_permutations
        if self.cfg.pairwise_statistic == "correlation":
            observed = abs(r[0])
            count = int(np.count_nonzero(np.abs(r[1:]) >= observed * (1.0 - TIE_TOLERANCE)))
            return float(r[0]), permutation_pvalue(count, b)
        n_pairs = self._d.values.shape[0]
        variances = self._ss * (1.0 - r ** 2) / (n_pairs - 1)
        return variance_ratio_result(variances[0], variances[1:], b)


def pairwise_correlation_test(d, sample, cfg):
    """Per-vertex pairwise correlation test; see PairwiseTest."""
    if cfg.pairwise_statistic != "correlation":
        cfg = replace(cfg, pairwise_statistic="correlation")
    return PairwiseTest(cfg).run(d, sample)


def pairwise_regression_test(d, sample, cfg):
    """Per-vertex residual-variance variant of the pairwise test."""
    if cfg.pairwise_statistic != "residual":
        cfg = replace(cfg, pairwise_statistic="residual")
    return PairwiseTest(cfg).run(d, sample)


def effective_pairs(n_subjects, requested):
    total = math.comb(n_subjects, 2)
    if requested > total:
        logger.warning(f"Requested {requested} pairs but only {total} exist for N={n_subjects}; using all")
        return total
    return requested


def pairwise_pipeline(cohort, cfg, distances=None):
    """
    Sample pairs, build (or restrict) the euclidean tensor and run the test
    selected by ``cfg.pairwise_statistic``.

    Args:
        cohort (Cohort): Normalized cohort.
        cfg (TestConfig): Test parameters.
        distances (DistanceTensor, optional): Precomputed full euclidean_sq
            tensor to restrict instead of re-syncing the sampled pairs.

    Returns:
        StatMap
    """
    n_pairs = effective_pairs(cohort.n_subjects, cfg.n_pairs)
    sample = sample_pairs(cohort.n_subjects, n_pairs, cohort.scores, cfg.seed)
    if distances is None:
        d = build_distance_tensor(cohort, EUCLIDEAN_SQ, pairs=sample.pairs, n_jobs=cfg.n_jobs)
    else:
        d = distances.restrict(sample.pairs)
    return PairwiseTest(cfg).run(d, sample)
