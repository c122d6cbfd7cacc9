"""Base class and shared machinery for the permutation tests."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import stats

from src.data.statmap import StatMap
from src.errors import UsageError
from src.metric.kernels import check_gamma
from src.parallel import chunked, parallel_map
from src.regress.bandwidth import DEFAULT_GAMMA
from src.stats.fdr import bh_fdr, check_alpha
from src.stats.rng import check_seed, permutation_schedule

logger = logging.getLogger(__name__)

DEFAULT_PERMUTATIONS = 2000
DEFAULT_ALPHA = 0.05
DEFAULT_PAIRS = 2000
PAIRWISE_STATISTICS = ("correlation", "residual")

# permuted statistics within this relative distance of the observed one count
# as ties, so the identity permutation always counts towards the p-value
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class TestConfig:
    """
    Parameters shared by every permutation test.

    Attributes:
        seed (int): Unsigned 64-bit seed for the permutation schedule and
            pair sampling.
        n_permutations (int): B.
        alpha (float): FDR level.
        gamma (float): Kernel bandwidth for the kernel-regression test.
        n_pairs (int): Sampled pairs for the pairwise tests.
        parametric_f (bool): Kernel test p-values from the F(N-1, N-1)
            distribution of the mean permuted F ratio instead of the count.
        pairwise_statistic (str): ``correlation`` or ``residual``.
        n_jobs (int): Worker threads.
    """

    __test__ = False

    seed: int
    n_permutations: int = DEFAULT_PERMUTATIONS
    alpha: float = DEFAULT_ALPHA
    gamma: float = DEFAULT_GAMMA
    n_pairs: int = DEFAULT_PAIRS
    parametric_f: bool = False
    pairwise_statistic: str = "correlation"
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seed", check_seed(self.seed))
        if int(self.n_permutations) < 1:
            raise UsageError(f"n_permutations must be >= 1, got {self.n_permutations}")
        object.__setattr__(self, "n_permutations", int(self.n_permutations))
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "gamma", check_gamma(self.gamma))
        if int(self.n_pairs) < 1:
            raise UsageError(f"n_pairs must be >= 1, got {self.n_pairs}")
        if self.pairwise_statistic not in PAIRWISE_STATISTICS:
            raise UsageError(
                f"pairwise_statistic must be one of {PAIRWISE_STATISTICS}, got {self.pairwise_statistic!r}"
            )
        if int(self.n_jobs) < 1:
            raise UsageError(f"n_jobs must be >= 1, got {self.n_jobs}")


def permutation_pvalue(count, n_permutations):
    """(1 + count) / (B + 1); never 0."""
    return (1.0 + count) / (n_permutations + 1.0)


def variance_ratio_result(var_obs, var_perm, n_permutations, parametric_dof=None):
    """
    F-ratio test of observed against permuted residual variances.

    A permuted variance no larger than the observed one is at least as
    extreme. The statistic is the mean of var_perm / var_obs.

    Args:
        var_obs (float): Residual variance under the observed scores.
        var_perm (np.ndarray): Residual variance under each permutation.
        n_permutations (int): B.
        parametric_dof (int, optional): When set, p comes from the F
            distribution with (dof, dof) degrees of freedom instead.

    Returns:
        tuple: (statistic, p_value).
    """
    if var_obs <= 0.0 and not (var_perm > 0.0).any():
        return 1.0, 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = var_perm / var_obs
    statistic = float(np.mean(ratios))
    if parametric_dof is not None:
        return statistic, float(min(1.0, stats.f.sf(statistic, parametric_dof, parametric_dof)))
    count = int(np.count_nonzero(var_perm <= var_obs * (1.0 + TIE_TOLERANCE)))
    return statistic, permutation_pvalue(count, n_permutations)


class BaseTest(ABC):
    """
    Abstract per-vertex permutation test.

    Subclasses implement ``_test_vertex`` for one vertex; ``_run_vertices``
    spreads vertices over worker threads with one shared permutation schedule
    and assembles the FDR-corrected map.
    """

    def __init__(self, cfg):
        self.name = self.__class__.__name__
        self.cfg = cfg

    @abstractmethod
    def run(self, *args, **kwargs):
        """
        Run the test on every analysed vertex.

        Returns:
            StatMap: statistic, p, q and rejection per analysed vertex.
        """
        pass

    @abstractmethod
    def _test_vertex(self, vertex):
        """Return (statistic, p_value) for one vertex."""
        pass

    def schedule(self, n_subjects):
        return permutation_schedule(n_subjects, self.cfg.n_permutations, self.cfg.seed)

    def _run_vertices(self, vertices, n_vertices):
        vertices = [int(v) for v in vertices]
        chunks = chunked(vertices, self.cfg.n_jobs)

        def work(chunk):
            return [self._test_vertex(v) for v in chunk]

        results = [r for part in parallel_map(work, chunks, n_jobs=self.cfg.n_jobs) for r in part]
        statistic = np.array([r[0] for r in results], dtype=np.float64)
        p_value = np.array([r[1] for r in results], dtype=np.float64)
        return self._finalize(vertices, statistic, p_value, n_vertices)

    def _finalize(self, vertices, statistic, p_value, n_vertices):
        q_value, rejected = bh_fdr(p_value, self.cfg.alpha)
        logger.info(
            f"{self.name}: {int(rejected.sum())} of {len(vertices)} vertices rejected "
            f"at FDR {self.cfg.alpha}"
        )
        return StatMap(
            vertex_index=np.asarray(vertices, dtype=np.int64),
            statistic=statistic,
            p_value=p_value,
            q_value=q_value,
            rejected=rejected,
            alpha=self.cfg.alpha,
            n_vertices=n_vertices,
        )
