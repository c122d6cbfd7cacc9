"""Radial basis kernels over geodesic distances."""

import logging
from dataclasses import dataclass

import numpy as np

from src.errors import UsageError
from src.metric.distances import GEODESIC

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KernelMatrix:
    """Kernel weights exp(-gamma * d) among the N subjects at one vertex."""

    vertex: int
    gamma: float
    weights: np.ndarray

    @property
    def n_subjects(self):
        return self.weights.shape[0]


def check_gamma(gamma):
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma <= 0:
        raise UsageError(f"gamma must be a positive finite number, got {gamma}")
    return gamma


def kernel_weights(distances, gamma):
    """Entrywise exp(-gamma * distances)."""
    return np.exp(-check_gamma(gamma) * np.asarray(distances, dtype=np.float64))


def kernel_from_distances(d, gamma):
    """
    Build the kernel matrix at every analysed vertex of a full geodesic tensor.

    Returns:
        list: One KernelMatrix per non-excluded vertex, in vertex order.
    """
    gamma = check_gamma(gamma)
    if d.kind != GEODESIC:
        raise UsageError(f"kernels need geodesic distances, got {d.kind}")
    if d.is_sampled:
        raise UsageError("kernels need a full distance tensor, got sampled pairs")
    kernels = []
    for v in d.included_vertices:
        weights = kernel_weights(d.block(v), gamma)
        weights.setflags(write=False)
        kernels.append(KernelMatrix(int(v), gamma, weights))
    return kernels
