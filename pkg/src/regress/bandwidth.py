"""Leave-one-out grid search for the kernel bandwidth."""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.errors import BandwidthSelectionError, DimensionMismatchError, UsageError
from src.metric.distances import GEODESIC
from src.metric.kernels import kernel_weights
from src.parallel import parallel_map
from src.regress.nadaraya_watson import loo_residuals
from src.stats.rng import VERTEX_SAMPLE, make_rng

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 2.6
DEFAULT_GRID_LOW = 0.1
DEFAULT_GRID_HIGH = 10.0
DEFAULT_GRID_SIZE = 50
DEFAULT_VERTEX_SAMPLE = 256


@dataclass(frozen=True)
class BandwidthGrid:
    """
    Candidate bandwidths and, once evaluated, their LOO mean squared errors.

    Attributes:
        values (np.ndarray): Strictly ascending positive gammas.
        selected (float, optional): The chosen gamma (a member of ``values``).
        loo_mse (np.ndarray, optional): MSE per gamma; +inf when undefined.
    """

    values: np.ndarray
    selected: Optional[float] = None
    loo_mse: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True).reshape(-1)
        if values.size == 0:
            raise UsageError("bandwidth grid is empty")
        if not np.isfinite(values).all() or (values <= 0).any():
            raise UsageError("bandwidth grid values must be positive and finite")
        if (np.diff(values) <= 0).any():
            raise UsageError("bandwidth grid values must be strictly ascending")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.loo_mse is not None:
            mse = np.array(self.loo_mse, dtype=np.float64, copy=True).reshape(-1)
            if mse.shape != values.shape:
                raise DimensionMismatchError(f"{mse.size} MSE values for {values.size} grid points")
            if (mse < 0).any() or np.isnan(mse).any():
                raise UsageError("LOO MSE values must be non-negative")
            mse.setflags(write=False)
            object.__setattr__(self, "loo_mse", mse)
        if self.selected is not None:
            if float(self.selected) not in set(values.tolist()):
                raise UsageError(f"selected gamma {self.selected} is not a grid value")
            object.__setattr__(self, "selected", float(self.selected))

    @classmethod
    def default(cls):
        return cls(np.geomspace(DEFAULT_GRID_LOW, DEFAULT_GRID_HIGH, DEFAULT_GRID_SIZE))

    @classmethod
    def log_spaced(cls, low, high, size):
        if size == 1:
            return cls([float(low)])
        return cls(np.geomspace(float(low), float(high), int(size)))


def sample_vertices(d, n_sample, seed):
    """Seeded, sorted sample of min(n_sample, #analysed) analysed vertices."""
    included = d.included_vertices
    if included.size == 0:
        raise UsageError("no analysed vertices to sample")
    n_sample = min(int(n_sample), included.size)
    if n_sample == included.size:
        return included
    rng = make_rng(seed, VERTEX_SAMPLE)
    return np.sort(rng.choice(included, size=n_sample, replace=False))


def _squared_residuals(d, y, gamma, vertex_sample):
    squares = []
    for v in vertex_sample:
        r = loo_residuals(kernel_weights(d.block(v), gamma), y)
        squares.extend((r[np.isfinite(r)] ** 2).tolist())
    return squares


def select_bandwidth(d, y, grid, vertex_sample, n_jobs=1):
    """
    Evaluate the LOO MSE of every grid gamma and pick the minimizer.

    Squared residuals are pooled over (subject, vertex) pairs and summed with
    math.fsum, so the curve does not depend on the worker count. Ties resolve
    to the smallest gamma.

    Args:
        d (DistanceTensor): Full geodesic tensor.
        y (array-like): Scores, length N.
        grid (BandwidthGrid): Candidate gammas.
        vertex_sample (array-like): Non-empty subset of analysed vertices.
        n_jobs (int): Worker threads (one gamma per task).

    Returns:
        BandwidthGrid: ``grid`` with ``loo_mse`` and ``selected`` filled.

    Raises:
        BandwidthSelectionError: Every gamma has undefined residuals.
    """
    if d.kind != GEODESIC or d.is_sampled:
        raise UsageError("bandwidth selection needs a full geodesic distance tensor")
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.shape[0] != d.n_subjects:
        raise DimensionMismatchError(f"{y.shape[0]} scores for {d.n_subjects} subjects")
    vertex_sample = np.asarray(vertex_sample, dtype=np.int64).reshape(-1)
    if vertex_sample.size == 0:
        raise UsageError("vertex sample is empty")
    excluded = d.excluded_vertices
    bad = [int(v) for v in vertex_sample if v in excluded or not 0 <= v < d.n_vertices]
    if bad:
        raise UsageError(f"vertex sample contains excluded or out-of-range vertices {bad[:10]}")

    def evaluate(gamma):
        squares = _squared_residuals(d, y, gamma, vertex_sample)
        return math.fsum(squares) / len(squares) if squares else math.inf

    mse = np.array(parallel_map(evaluate, grid.values, n_jobs=n_jobs), dtype=np.float64)
    if not np.isfinite(mse).any():
        raise BandwidthSelectionError(
            f"LOO residuals undefined for every gamma in [{grid.values[0]}, {grid.values[-1]}]"
        )
    selected = float(grid.values[int(np.argmin(mse))])
    logger.info(f"Selected gamma {selected:.6g} (LOO MSE {mse.min():.6g}) over {vertex_sample.size} vertices")
    return BandwidthGrid(grid.values, selected=selected, loo_mse=mse)
