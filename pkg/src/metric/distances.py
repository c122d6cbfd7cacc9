"""Per-vertex distances between synchronized subjects."""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.data.binary import check_finite, pack_header, read_floats, unpack_header, write_blob
from src.errors import DataError, DimensionMismatchError, FormatError, UsageError
from src.parallel import parallel_map
from src.sync.align import apply_transform, compute_sync_transform

logger = logging.getLogger(__name__)

EUCLIDEAN_SQ = "euclidean_sq"
GEODESIC = "geodesic"
KINDS = (EUCLIDEAN_SQ, GEODESIC)

SKDT_MAGIC = b"SKDT"
_KIND_CODES = {EUCLIDEAN_SQ: 0, GEODESIC: 1}


def euclidean_distance_map(x, y_synced):
    """Squared Euclidean distance between matching columns of x and synced y."""
    if x.shape != y_synced.shape:
        raise DimensionMismatchError(f"shapes {x.shape} and {y_synced.shape} differ")
    diff = x.values - y_synced.values
    return np.einsum("tv,tv->v", diff, diff)


def geodesic_distance_map(x, y, o):
    """
    Arc length between x's columns and the columns of O y.

    The inner product is clamped to [-1, 1] so rounding never yields NaN.
    """
    if x.shape != y.shape:
        raise DimensionMismatchError(f"shapes {x.shape} and {y.shape} differ")
    synced = apply_transform(o, y)
    inner = np.einsum("tv,tv->v", x.values, synced.values)
    return np.arccos(np.clip(inner, -1.0, 1.0))


@dataclass(frozen=True)
class DistanceTensor:
    """
    Pairwise subject distances at every vertex.

    Full tensors store ``values`` with shape (V, N, N): one symmetric block
    per vertex, zero diagonal. Sampled tensors store shape (P, V), row k
    holding pair ``pairs[k]``. Excluded vertices hold NaN.
    """

    kind: str
    n_subjects: int
    n_vertices: int
    values: np.ndarray
    pairs: Optional[Tuple[Tuple[int, int], ...]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UsageError(f"distance kind must be one of {KINDS}, got {self.kind!r}")
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.pairs is None:
            expected = (self.n_vertices, self.n_subjects, self.n_subjects)
        else:
            pairs = tuple((int(i), int(j)) for i, j in self.pairs)
            object.__setattr__(self, "pairs", pairs)
            expected = (len(pairs), self.n_vertices)
        if values.shape != expected:
            raise DimensionMismatchError(f"distance values have shape {values.shape}, expected {expected}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def is_sampled(self):
        return self.pairs is not None

    @property
    def excluded_vertices(self):
        if self.is_sampled:
            col = self.values[0] if self.values.shape[0] else np.zeros(self.n_vertices)
            return frozenset(np.flatnonzero(np.isnan(col)).tolist())
        if self.n_subjects == 0:
            return frozenset()
        return frozenset(np.flatnonzero(np.isnan(self.values[:, 0, 0])).tolist())

    @property
    def included_vertices(self):
        excluded = self.excluded_vertices
        return np.array([v for v in range(self.n_vertices) if v not in excluded], dtype=np.int64)

    def block(self, vertex):
        """N x N distance matrix at ``vertex`` (full tensors only)."""
        if self.is_sampled:
            raise UsageError("sampled tensors have no per-vertex N x N blocks")
        return self.values[vertex]

    def restrict(self, pairs):
        """Sampled tensor holding only ``pairs``, read from this full tensor."""
        if self.is_sampled:
            raise UsageError("restrict needs a full tensor")
        pairs = _validate_pairs(pairs, self.n_subjects)
        if pairs:
            rows = np.array([i for i, _ in pairs]), np.array([j for _, j in pairs])
            values = self.values[:, rows[0], rows[1]].T
        else:
            values = np.zeros((0, self.n_vertices))
        return DistanceTensor(self.kind, self.n_subjects, self.n_vertices, values, pairs)

    def reindex(self, indices):
        """
        Full tensor over subjects ``indices`` (repeats allowed, as in a
        bootstrap resample). Repeated subjects are at distance 0.
        """
        if self.is_sampled:
            raise UsageError("reindex needs a full tensor")
        idx = np.asarray(indices, dtype=np.int64)
        values = self.values[:, idx[:, None], idx[None, :]]
        return DistanceTensor(self.kind, len(idx), self.n_vertices, values)


def _validate_pairs(pairs, n_subjects):
    out, seen = [], set()
    for i, j in pairs:
        i, j = int(i), int(j)
        if not (0 <= i < n_subjects and 0 <= j < n_subjects):
            raise UsageError(f"pair ({i}, {j}) out of range for {n_subjects} subjects")
        if i == j:
            raise UsageError(f"pair ({i}, {j}) pairs a subject with itself")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise UsageError(f"pair ({i}, {j}) listed twice")
        seen.add(key)
        out.append((i, j))
    return tuple(out)


def _pair_distances(cohort, kind, pair):
    i, j = pair
    x, y = cohort.data(i), cohort.data(j)
    o = compute_sync_transform(x, y, source_id=cohort.subject_ids[j], target_id=cohort.subject_ids[i])
    if kind == GEODESIC:
        return geodesic_distance_map(x, y, o)
    return euclidean_distance_map(x, apply_transform(o, y))


def build_distance_tensor(cohort, kind, pairs="all", n_jobs=1):
    """
    Sync every requested subject pair once and fill the distance tensor.

    Args:
        cohort (Cohort): Normalized cohort.
        kind (str): ``euclidean_sq`` or ``geodesic``.
        pairs: ``"all"`` for the full (V, N, N) tensor, or a list of distinct
            unordered (i, j) pairs for a sampled (P, V) tensor.
        n_jobs (int): Worker threads for the per-pair loop.

    Returns:
        DistanceTensor
    """
    if kind not in KINDS:
        raise UsageError(f"distance kind must be one of {KINDS}, got {kind!r}")
    n, n_vertices = cohort.n_subjects, cohort.n_vertices
    if n == 0:
        raise DataError("cannot build a distance tensor for an empty cohort")

    sampled = not (isinstance(pairs, str) and pairs == "all")
    if sampled:
        work = _validate_pairs(pairs, n)
    else:
        work = tuple(itertools.combinations(range(n), 2))

    logger.info(f"Building {kind} distances for {len(work)} subject pairs over {n_vertices} vertices")
    results = parallel_map(lambda pair: _pair_distances(cohort, kind, pair), work, n_jobs=n_jobs)
    excluded = sorted(cohort.excluded_vertices)

    if sampled:
        values = np.array(results, dtype=np.float64).reshape(len(work), n_vertices)
        values[:, excluded] = np.nan
        return DistanceTensor(kind, n, n_vertices, values, work)

    values = np.zeros((n_vertices, n, n))
    for (i, j), dist in zip(work, results):
        values[:, i, j] = dist
        values[:, j, i] = dist
    values[excluded] = np.nan
    return DistanceTensor(kind, n, n_vertices, values)


def store_distance_tensor(d, path):
    if d.is_sampled:
        raise UsageError("only full distance tensors can be stored in the SKDT format")
    header = pack_header(SKDT_MAGIC, "BQQ", _KIND_CODES[d.kind], d.n_subjects, d.n_vertices)
    write_blob(path, header, d.values)


def load_distance_tensor(path):
    with open(path, "rb") as f:
        blob = f.read()
    (code, n, n_vertices), offset = unpack_header(blob, SKDT_MAGIC, "BQQ", path)
    kinds = {c: k for k, c in _KIND_CODES.items()}
    if code not in kinds:
        raise FormatError(f"{path}: unknown distance kind code {code}")
    values = read_floats(blob, offset, n_vertices * n * n, path)
    check_finite(values, path, allow_nan=True)
    return DistanceTensor(kinds[code], n, n_vertices, values.reshape(n_vertices, n, n))
