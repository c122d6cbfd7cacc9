"""Synthetic cohorts with a shared latent signal and score-driven ROI noise."""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import helmert
from scipy.stats import ortho_group

from src.data.cohort import Cohort, Subject
from src.data.timeseries import TimeSeriesMatrix, normalize_columns
from src.errors import DegenerateScoresError, UsageError
from src.parallel import parallel_map
from src.stats.rng import ROI_NOISE, SIM_LATENT, SIM_SCORES, SIM_SUBJECT, check_seed, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimulationConfig:
    """
    Parameters of the synthetic cohort and the injected ROI noise.

    Attributes:
        seed (int): Seed for every random stream of the simulation.
        n_subjects (int): N.
        n_timepoints (int): T.
        n_vertices (int): V.
        roi (tuple, optional): ROI vertex indices; defaults to the first V/10
            vertices.
        sigma_max (float): Noise std for the subject with the highest score.
        score_range (tuple): (low, high) for the uniformly drawn scores.
        latent_rank (int): Number of temporal basis signals shared by all
            subjects.
        subject_noise (float): Norm of each column's i.i.d. subject noise
            relative to the unit-norm latent column.
        background_weight (float): Share of each latent column's energy in
            a full-rank background with no preferred temporal direction; the
            rest comes from the smooth low-rank basis.
    """

    seed: int
    n_subjects: int = 50
    n_timepoints: int = 100
    n_vertices: int = 500
    roi: Optional[Tuple[int, ...]] = None
    sigma_max: float = 0.3
    score_range: Tuple[float, float] = (20.0, 60.0)
    latent_rank: int = 10
    subject_noise: float = 0.2
    background_weight: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, "seed", check_seed(self.seed))
        for name in ("n_subjects", "n_timepoints", "n_vertices", "latent_rank"):
            if int(getattr(self, name)) < 1:
                raise UsageError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.n_timepoints < 2:
            raise UsageError(f"n_timepoints must be >= 2, got {self.n_timepoints}")
        roi = self.roi
        if roi is None:
            roi = range(max(1, self.n_vertices // 10))
        roi = tuple(sorted({int(v) for v in roi}))
        if any(not 0 <= v < self.n_vertices for v in roi):
            raise UsageError(f"ROI vertices must lie in [0, {self.n_vertices})")
        object.__setattr__(self, "roi", roi)
        if not self.sigma_max >= 0:
            raise UsageError(f"sigma_max must be >= 0, got {self.sigma_max}")
        low, high = (float(v) for v in self.score_range)
        if not low < high:
            raise UsageError(f"score_range needs low < high, got {self.score_range}")
        object.__setattr__(self, "score_range", (low, high))
        if self.subject_noise < 0:
            raise UsageError(f"subject_noise must be >= 0, got {self.subject_noise}")
        if not 0.0 <= self.background_weight <= 1.0:
            raise UsageError(f"background_weight must lie in [0, 1], got {self.background_weight}")


def _temporal_basis(cfg, rng):
    # integer-frequency cosines: smooth, zero mean, mutually orthogonal
    t = np.arange(cfg.n_timepoints)
    max_freq = max(cfg.latent_rank, cfg.n_timepoints // 4)
    freqs = np.sort(rng.choice(np.arange(1, max_freq + 1), size=cfg.latent_rank, replace=False))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=cfg.latent_rank)
    return np.cos(2.0 * np.pi * np.outer(t, freqs) / cfg.n_timepoints + phases)


def _unit_columns(values):
    values = values - values.mean(axis=0, keepdims=True)
    return values / np.linalg.norm(values, axis=0, keepdims=True)


def _background(cfg, rng, centering_basis):
    # orthonormal rows (columns when V < T - 1) spanning the zero-mean subspace
    noise = rng.standard_normal((cfg.n_timepoints - 1, cfg.n_vertices))
    u, _, wt = np.linalg.svd(noise, full_matrices=False)
    return centering_basis.T @ (u @ wt)


def _latent_signal(cfg, centering_basis):
    rng = make_rng(cfg.seed, SIM_LATENT)
    basis = _temporal_basis(cfg, rng)
    mixing = rng.standard_normal((cfg.latent_rank, cfg.n_vertices))
    smooth = _unit_columns(basis @ mixing)
    if cfg.background_weight == 0.0:
        return smooth
    background = _unit_columns(_background(cfg, rng, centering_basis))
    w = cfg.background_weight
    return _unit_columns(np.sqrt(1.0 - w) * smooth + np.sqrt(w) * background)


def _subject_matrix(cfg, latent, centering_basis, index):
    """R_i L + noise, where R_i is orthogonal and preserves zero-mean columns."""
    rng = make_rng(cfg.seed, SIM_SUBJECT, index)
    q = ortho_group.rvs(cfg.n_timepoints - 1, random_state=rng) if cfg.n_timepoints > 2 else np.eye(1)
    rotation = centering_basis.T @ q @ centering_basis + 1.0 / cfg.n_timepoints
    noise = rng.standard_normal(latent.shape) * (cfg.subject_noise / np.sqrt(cfg.n_timepoints))
    raw = TimeSeriesMatrix(rotation @ latent + noise)
    return normalize_columns(raw, "strict")


def generate_synthetic_cohort(cfg, n_jobs=1):
    """
    Build N subjects from one shared latent signal.

    The latent T x V signal mixes a smooth low-rank part with a full-rank
    background, which pins the cross-subject alignment in every temporal
    direction. Each subject's matrix is the latent signal under a
    subject-specific orthogonal temporal rotation, plus small i.i.d. noise,
    column-normalized.
    Scores are drawn uniformly in ``score_range`` and shuffled. Every subject
    has its own random stream, so the worker count does not change the output.

    Args:
        cfg (SimulationConfig): Simulation parameters.
        n_jobs (int): Worker threads for per-subject generation.

    Returns:
        Cohort
    """
    if cfg.n_timepoints < cfg.latent_rank:
        raise UsageError(
            f"T={cfg.n_timepoints} is smaller than the temporal basis rank {cfg.latent_rank}"
        )
    centering_basis = helmert(cfg.n_timepoints)
    latent = _latent_signal(cfg, centering_basis)
    matrices = parallel_map(
        lambda i: _subject_matrix(cfg, latent, centering_basis, i), range(cfg.n_subjects), n_jobs=n_jobs
    )

    rng = make_rng(cfg.seed, SIM_SCORES)
    low, high = cfg.score_range
    scores = rng.permutation(rng.uniform(low, high, size=cfg.n_subjects))

    subjects = tuple(Subject(f"sub-{i:03d}", m) for i, m in enumerate(matrices))
    logger.info(
        f"Generated synthetic cohort: N={cfg.n_subjects}, T={cfg.n_timepoints}, V={cfg.n_vertices}"
    )
    return Cohort(subjects, scores)


def inject_roi_noise(cohort, cfg):
    """
    Add score-proportional Gaussian noise to every ROI column.

    Subject i receives i.i.d. N(0, sigma_i^2) entries, in the units of the
    stored unit-norm columns, with
    sigma_i = sigma_max * (y_i - min y) / (max y - min y); its ROI columns are
    then re-normalized. Columns outside the ROI, and subjects with
    sigma_i = 0, are returned bit-identical.

    Returns:
        Cohort: Same ids, scores and exclusions.
    """
    scores = np.asarray(cohort.scores)
    if cohort.n_subjects == 0 or np.ptp(scores) == 0.0:
        raise DegenerateScoresError("score normalization undefined: max score equals min score")
    roi = [v for v in cfg.roi if v not in cohort.excluded_vertices]
    if any(v >= cohort.n_vertices for v in roi):
        raise UsageError(f"ROI exceeds the cohort's {cohort.n_vertices} vertices")
    if cfg.sigma_max == 0 or not roi:
        return cohort

    sigmas = cfg.sigma_max * (scores - scores.min()) / np.ptp(scores)
    subjects = []
    for i, (subject, sigma) in enumerate(zip(cohort.subjects, sigmas)):
        if sigma == 0.0:
            subjects.append(subject)
            continue
        rng = make_rng(cfg.seed, ROI_NOISE, i)
        values = np.array(subject.data.values)
        noisy = values[:, roi] + sigma * rng.standard_normal((cohort.n_timepoints, len(roi)))
        values[:, roi] = normalize_columns(TimeSeriesMatrix(noisy), "strict").values
        subjects.append(Subject(subject.subject_id, TimeSeriesMatrix(values, normalized=True)))
    logger.info(f"Injected ROI noise into {len(roi)} vertices (sigma_max={cfg.sigma_max})")
    return Cohort(tuple(subjects), scores, cohort.excluded_vertices)


def simulate_cohort(cfg, n_jobs=1):
    """generate_synthetic_cohort followed by inject_roi_noise."""
    return inject_roi_noise(generate_synthetic_cohort(cfg, n_jobs=n_jobs), cfg)
