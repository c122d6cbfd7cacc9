"""Per-subject time-series matrices: normalization and the SKTS format."""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.data.binary import check_finite, pack_header, read_floats, unpack_header, write_blob
from src.errors import DataError, NonFiniteValuesError, UsageError, ZeroVarianceColumnError

logger = logging.getLogger(__name__)

SKTS_MAGIC = b"SKTS"
MODES = ("strict", "permissive")


@dataclass(frozen=True)
class TimeSeriesMatrix:
    """
    One subject's T x V signal (rows are time points, columns are vertices).

    Attributes:
        values (np.ndarray): float64 matrix of shape (T, V), read-only.
        normalized (bool): True once every column has zero mean and unit norm.
        zero_columns (tuple): Vertices found constant during normalization
            (permissive mode only); those columns are all-zero.
    """

    values: np.ndarray
    normalized: bool = False
    zero_columns: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataError(f"time series must be a non-empty 2-D matrix, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise NonFiniteValuesError("time series contains NaN or infinite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "zero_columns", tuple(int(v) for v in self.zero_columns))

    @property
    def n_timepoints(self):
        return self.values.shape[0]

    @property
    def n_vertices(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape


def normalize_columns(m, mode="strict"):
    """
    Center every column and scale it to unit Euclidean norm.

    Args:
        m (TimeSeriesMatrix): Input matrix, T >= 2.
        mode (str): ``strict`` raises on constant columns; ``permissive``
            zeroes them and reports their indices in ``zero_columns``.

    Returns:
        TimeSeriesMatrix: The normalized matrix.

    Raises:
        ZeroVarianceColumnError: strict mode and at least one constant column.
    """
    if mode not in MODES:
        raise UsageError(f"mode must be one of {MODES}, got {mode!r}")
    if m.n_timepoints < 2:
        raise DataError(f"normalization needs at least 2 time points, got T={m.n_timepoints}")

    values = m.values
    centered = values - values.mean(axis=0, keepdims=True)
    norms = np.linalg.norm(centered, axis=0)
    # constant up to rounding of the mean subtraction
    scale = np.abs(values).max(axis=0)
    tolerance = 16 * np.finfo(np.float64).eps * np.sqrt(m.n_timepoints) * np.maximum(scale, 1e-300)
    flat = np.flatnonzero(norms <= tolerance)

    if flat.size and mode == "strict":
        raise ZeroVarianceColumnError(
            f"zero-variance columns at vertices {flat.tolist()}", vertices=flat
        )

    safe_norms = norms.copy()
    safe_norms[flat] = 1.0
    normalized = centered / safe_norms
    normalized[:, flat] = 0.0
    if flat.size:
        logger.warning(f"Zeroed {flat.size} zero-variance columns: {flat.tolist()[:10]}")
    return TimeSeriesMatrix(normalized, normalized=True, zero_columns=tuple(flat.tolist()))


def store_timeseries(m, path):
    """Write ``m`` in the SKTS format (row-major float64 after a 24-byte header)."""
    header = pack_header(SKTS_MAGIC, "QQ", m.n_timepoints, m.n_vertices)
    write_blob(path, header, m.values)


def load_timeseries(path):
    """
    Read a SKTS file.

    Args:
        path (str): File path.

    Returns:
        TimeSeriesMatrix: The stored values, bit-exact, ``normalized=False``.

    Raises:
        BadMagicError, VersionMismatchError, TruncatedPayloadError,
        NonFiniteValuesError: The file violates the format.
    """
    with open(path, "rb") as f:
        blob = f.read()
    (n_timepoints, n_vertices), offset = unpack_header(blob, SKTS_MAGIC, "QQ", path)
    values = read_floats(blob, offset, n_timepoints * n_vertices, path)
    check_finite(values, path)
    return TimeSeriesMatrix(values.reshape(n_timepoints, n_vertices))
