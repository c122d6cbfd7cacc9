"""Orthogonal temporal synchronization of two subjects (orthogonal Procrustes)."""

import logging
from dataclasses import dataclass

import numpy as np

from src.data.binary import check_finite, pack_header, read_floats, unpack_header, write_blob
from src.data.timeseries import TimeSeriesMatrix
from src.errors import DimensionMismatchError, SVDFailureError

logger = logging.getLogger(__name__)

SKOT_MAGIC = b"SKOT"
# singular values below this fraction of the largest count as zero
NULL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class OrthogonalTransform:
    """
    T x T orthogonal matrix mapping subject ``source_id`` onto ``target_id``.

    ``apply_transform(o, source)`` is comparable column by column with the
    target's matrix.
    """

    matrix: np.ndarray
    source_id: str = ""
    target_id: str = ""

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=np.float64, copy=True)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"transform must be square, got shape {matrix.shape}")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def n_timepoints(self):
        return self.matrix.shape[0]

    def inverse(self):
        """The transpose, which maps target back onto source."""
        return OrthogonalTransform(self.matrix.T, self.target_id, self.source_id)

    def orthogonality_error(self):
        """max |O^T O - I|."""
        gram = self.matrix.T @ self.matrix
        return float(np.abs(gram - np.eye(self.n_timepoints)).max())


def _check_pair(x, y):
    if x.shape != y.shape:
        raise DimensionMismatchError(f"cannot sync matrices of shapes {x.shape} and {y.shape}")


def _null_space_block(u0, w0):
    """Orthogonal map from span(w0) onto span(u0) closest to the identity."""
    p, _, rt = np.linalg.svd(w0.T @ u0)
    return u0 @ (rt.T @ p.T) @ w0.T


def compute_sync_transform(x, y, source_id="", target_id=""):
    """
    Orthogonal O minimizing ||X - O Y||_F^2.

    With X Y^T = U S W^T, the minimizer is O = U W^T. Reflections are
    allowed. Directions with zero singular value (the constant vector for
    normalized columns, plus any excess when T > V) are mapped by the
    orthogonal map between the two null spaces closest to the identity, so
    ``compute_sync_transform(y, x)`` is exactly the transpose and O 1 = 1
    for zero-mean inputs.

    Args:
        x (TimeSeriesMatrix): Target subject.
        y (TimeSeriesMatrix): Source subject, same T and V.

    Returns:
        OrthogonalTransform: Maps y onto x.
    """
    _check_pair(x, y)
    cross = x.values @ y.values.T
    try:
        u, s, wt = np.linalg.svd(cross)
        null = s <= NULL_TOLERANCE * s[0]
        matrix = u[:, ~null] @ wt[~null]
        if null.any():
            matrix = matrix + _null_space_block(u[:, null], wt[null].T)
    except np.linalg.LinAlgError as e:
        raise SVDFailureError(f"SVD of the {cross.shape} cross-product failed to converge: {e}") from e
    return OrthogonalTransform(matrix, source_id=source_id, target_id=target_id)


def apply_transform(o, y):
    """Return O Y, preserving column norms; the normalized flag carries over."""
    if o.n_timepoints != y.n_timepoints:
        raise DimensionMismatchError(
            f"transform is {o.n_timepoints} x {o.n_timepoints} but matrix has T={y.n_timepoints}"
        )
    return TimeSeriesMatrix(o.matrix @ y.values, normalized=y.normalized, zero_columns=y.zero_columns)


def sync_error(x, y, o):
    """Squared Frobenius norm of X - O Y."""
    _check_pair(x, y)
    residual = x.values - apply_transform(o, y).values
    return float(np.einsum("ij,ij->", residual, residual))


def store_transform(o, path):
    write_blob(path, pack_header(SKOT_MAGIC, "Q", o.n_timepoints), o.matrix)


def load_transform(path, source_id="", target_id=""):
    with open(path, "rb") as f:
        blob = f.read()
    (n_timepoints,), offset = unpack_header(blob, SKOT_MAGIC, "Q", path)
    values = read_floats(blob, offset, n_timepoints * n_timepoints, path)
    check_finite(values, path)
    return OrthogonalTransform(values.reshape(n_timepoints, n_timepoints), source_id, target_id)
