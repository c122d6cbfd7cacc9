"""Simulation study, permuted-score null check and cohort-size comparison."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from src.errors import UsageError
from src.metric.distances import EUCLIDEAN_SQ, GEODESIC, build_distance_tensor
from src.sim.synthetic import simulate_cohort
from src.stats.kernel_test import kernel_regression_test
from src.stats.pairwise import pairwise_pipeline
from src.stats.rng import NULL_SHUFFLE, SUBSAMPLE, make_rng

logger = logging.getLogger(__name__)

PAIRWISE = "pairwise"
KERNEL = "kernel"


def _fraction(rejected, vertices):
    vertices = set(vertices)
    if not vertices:
        return 0.0
    return len(rejected & vertices) / len(vertices)


@dataclass(frozen=True)
class SimulationReport:
    """
    Per-method rates of the simulation study.

    Attributes:
        roi (tuple): ROI vertex indices.
        alpha (float): FDR level the maps were thresholded at.
        stat_maps (dict): method -> StatMap.
        roi_detection_rate (dict): method -> fraction of analysed ROI
            vertices with q <= alpha.
        false_positive_rate (dict): method -> fraction of analysed non-ROI
            vertices with q <= alpha.
    """

    roi: Tuple[int, ...]
    alpha: float
    stat_maps: Dict[str, object]
    roi_detection_rate: Dict[str, float]
    false_positive_rate: Dict[str, float]

    @classmethod
    def from_maps(cls, stat_maps, roi, alpha):
        detection, false_positive = {}, {}
        for method, stat_map in stat_maps.items():
            analysed = {int(v) for v in stat_map.vertex_index}
            roi_analysed = analysed & set(roi)
            rejected = stat_map.rejected_vertices()
            detection[method] = _fraction(rejected, roi_analysed)
            false_positive[method] = _fraction(rejected, analysed - roi_analysed)
        return cls(tuple(roi), alpha, dict(stat_maps), detection, false_positive)


def run_simulation_study(cfg, test_cfg, cohort=None, distances=None):
    """
    Generate the noisy cohort and run both tests on it.

    Args:
        cfg (SimulationConfig): Cohort and noise parameters.
        test_cfg (TestConfig): Test parameters.
        cohort (Cohort, optional): Already simulated cohort for ``cfg``.
        distances (DistanceTensor, optional): Full geodesic tensor of
            ``cohort``.

    Returns:
        SimulationReport
    """
    if cohort is None:
        cohort = simulate_cohort(cfg, n_jobs=test_cfg.n_jobs)
    if distances is None:
        distances = build_distance_tensor(cohort, GEODESIC, n_jobs=test_cfg.n_jobs)

    stat_maps = {
        PAIRWISE: pairwise_pipeline(cohort, test_cfg),
        KERNEL: kernel_regression_test(distances, cohort.scores, test_cfg),
    }
    report = SimulationReport.from_maps(stat_maps, cfg.roi, test_cfg.alpha)
    for method in (PAIRWISE, KERNEL):
        logger.info(
            f"{method}: ROI detection {report.roi_detection_rate[method]:.3f}, "
            f"false positives {report.false_positive_rate[method]:.3f}"
        )
    return report


@dataclass(frozen=True)
class NullCheckReport:
    """FDR-rejected vertex counts per method for each score shuffle."""

    n_repeats: int
    rejected_counts: Dict[str, List[int]]

    def clean_repeats(self, method):
        """Number of repetitions without any rejected vertex."""
        return sum(1 for count in self.rejected_counts[method] if count == 0)


def permuted_null_check(cfg, test_cfg, n_repeats=10):
    """
    Shuffle the simulated scores n_repeats times and count rejections.

    Transforms depend on the subjects only, so both distance tensors are
    built once and shared by every repetition.

    Returns:
        NullCheckReport
    """
    if int(n_repeats) < 1:
        raise UsageError(f"n_repeats must be >= 1, got {n_repeats}")
    cohort = simulate_cohort(cfg, n_jobs=test_cfg.n_jobs)
    geodesic = build_distance_tensor(cohort, GEODESIC, n_jobs=test_cfg.n_jobs)
    euclidean = build_distance_tensor(cohort, EUCLIDEAN_SQ, n_jobs=test_cfg.n_jobs)

    counts = {PAIRWISE: [], KERNEL: []}
    for r in range(int(n_repeats)):
        rng = make_rng(test_cfg.seed, NULL_SHUFFLE, r)
        shuffled = cohort.with_scores(cohort.scores[rng.permutation(cohort.n_subjects)])
        counts[PAIRWISE].append(len(pairwise_pipeline(shuffled, test_cfg, distances=euclidean).rejected_vertices()))
        counts[KERNEL].append(len(kernel_regression_test(geodesic, shuffled.scores, test_cfg).rejected_vertices()))
        logger.info(f"Null repeat {r + 1}/{n_repeats}: pairwise {counts[PAIRWISE][-1]}, kernel {counts[KERNEL][-1]}")
    return NullCheckReport(int(n_repeats), counts)


def dice_overlap(a, b):
    """2|A & B| / (|A| + |B|); two empty sets overlap perfectly."""
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return 2.0 * len(a & b) / (len(a) + len(b))


@dataclass(frozen=True)
class PopulationSizeReport:
    """
    Rejections on the full cohort and on a subsample.

    Attributes:
        subsample (tuple): Subject indices of the small cohort.
        rows (list): (cohort label, N, method, rejected count, Dice overlap
            with the full-cohort pairwise map).
        stat_maps (dict): (cohort label, method) -> StatMap.
    """

    subsample: Tuple[int, ...]
    rows: List[Tuple[str, int, str, int, float]]
    stat_maps: Dict[Tuple[str, str], object]


def compare_population_sizes(cohort, n_small, test_cfg):
    """
    Run both tests on the full cohort and a seeded subsample of n_small
    subjects, comparing each rejected set with the full pairwise map.

    Args:
        cohort (Cohort): Normalized cohort.
        n_small (int): Subsample size, 3 <= n_small < N.
        test_cfg (TestConfig): Test parameters.

    Returns:
        PopulationSizeReport
    """
    n = cohort.n_subjects
    if not 3 <= int(n_small) < n:
        raise UsageError(f"n_small must satisfy 3 <= n_small < N={n}, got {n_small}")
    rng = make_rng(test_cfg.seed, SUBSAMPLE)
    subsample = np.sort(rng.choice(n, size=int(n_small), replace=False))

    geodesic = build_distance_tensor(cohort, GEODESIC, n_jobs=test_cfg.n_jobs)
    euclidean = build_distance_tensor(cohort, EUCLIDEAN_SQ, n_jobs=test_cfg.n_jobs)
    small = cohort.subset(subsample)

    stat_maps = {
        ("full", PAIRWISE): pairwise_pipeline(cohort, test_cfg, distances=euclidean),
        ("full", KERNEL): kernel_regression_test(geodesic, cohort.scores, test_cfg),
        ("small", PAIRWISE): pairwise_pipeline(small, test_cfg, distances=euclidean.reindex(subsample)),
        ("small", KERNEL): kernel_regression_test(geodesic.reindex(subsample), small.scores, test_cfg),
    }
    reference = stat_maps[("full", PAIRWISE)].rejected_vertices()
    rows = []
    for (label, method), stat_map in stat_maps.items():
        rejected = stat_map.rejected_vertices()
        size = n if label == "full" else int(n_small)
        rows.append((label, size, method, len(rejected), dice_overlap(rejected, reference)))
        logger.info(f"{label} cohort (N={size}) {method}: {len(rejected)} rejected")
    return PopulationSizeReport(tuple(int(i) for i in subsample), rows, stat_maps)
