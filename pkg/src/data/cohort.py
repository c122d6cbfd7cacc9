"""Cohort model and manifest ingestion."""

import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import FrozenSet, NamedTuple, Tuple

import numpy as np

from src.data.timeseries import (
    TimeSeriesMatrix,
    load_timeseries,
    normalize_columns,
    store_timeseries,
)
from src.errors import (
    DataError,
    DimensionMismatchError,
    DuplicateSubjectError,
    ManifestError,
    MissingScoreError,
)

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class Subject(NamedTuple):
    subject_id: str
    data: TimeSeriesMatrix


@dataclass(frozen=True)
class Cohort:
    """
    N subjects sharing T and V, with one clinical score each.

    Attributes:
        subjects (tuple): Ordered ``Subject`` entries (manifest order).
        scores (np.ndarray): Clinical scores, length N, read-only.
        excluded_vertices (frozenset): Vertices skipped by every per-vertex
            analysis (zero-variance in at least one subject).
    """

    subjects: Tuple[Subject, ...]
    scores: np.ndarray
    excluded_vertices: FrozenSet[int] = field(default_factory=frozenset)

    def __post_init__(self):
        subjects = tuple(Subject(str(s[0]), s[1]) for s in self.subjects)
        scores = np.array(self.scores, dtype=np.float64, copy=True).reshape(-1)
        if scores.shape[0] != len(subjects):
            raise MissingScoreError(
                f"cohort has {len(subjects)} subjects but {scores.shape[0]} scores"
            )
        if not np.isfinite(scores).all():
            raise ManifestError("cohort scores must be finite")
        ids = [s.subject_id for s in subjects]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DuplicateSubjectError(f"duplicate subject ids: {dupes}")
        if subjects:
            shape = subjects[0].data.shape
            for s in subjects[1:]:
                if s.data.shape != shape:
                    raise DimensionMismatchError(
                        f"subject {s.subject_id!r} has T x V = {s.data.shape}, "
                        f"expected {shape} (from {subjects[0].subject_id!r})"
                    )
        scores.setflags(write=False)
        object.__setattr__(self, "subjects", subjects)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "excluded_vertices", frozenset(int(v) for v in self.excluded_vertices))

    @property
    def n_subjects(self):
        return len(self.subjects)

    @property
    def n_timepoints(self):
        return self.subjects[0].data.n_timepoints if self.subjects else 0

    @property
    def n_vertices(self):
        return self.subjects[0].data.n_vertices if self.subjects else 0

    @property
    def subject_ids(self):
        return tuple(s.subject_id for s in self.subjects)

    @property
    def included_vertices(self):
        """Sorted indices of the vertices that analyses visit."""
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[sorted(self.excluded_vertices)] = False
        return np.flatnonzero(mask)

    def data(self, i):
        return self.subjects[i].data

    def with_scores(self, scores):
        """Same subjects, new score vector (used for permuted-index checks)."""
        return Cohort(self.subjects, scores, self.excluded_vertices)

    def subset(self, indices):
        """Subjects at ``indices`` (distinct), in the given order."""
        indices = [int(i) for i in indices]
        return Cohort(
            tuple(self.subjects[i] for i in indices),
            self.scores[indices],
            self.excluded_vertices,
        )


def _zero_excluded(matrix, excluded):
    if not excluded:
        return matrix
    values = np.array(matrix.values)
    values[:, sorted(excluded)] = 0.0
    return TimeSeriesMatrix(values, normalized=True, zero_columns=tuple(sorted(excluded)))


def load_cohort(manifest_path, mode="strict"):
    """
    Load and normalize every subject listed in a cohort manifest.

    The manifest is JSON: ``{"subjects": [{"id", "timeseries", "score"}, ...]}``
    with time-series paths relative to the manifest's directory.

    Args:
        manifest_path (str): Path to the manifest.
        mode (str): ``strict`` or ``permissive`` (see normalize_columns).

    Returns:
        Cohort: Subjects in manifest order.
    """
    try:
        with open(manifest_path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except OSError as e:
        raise DataError(f"cannot read manifest {manifest_path}: {e}") from e
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ManifestError(f"manifest {manifest_path} is not valid UTF-8 JSON: {e}") from e

    entries = manifest.get("subjects") if isinstance(manifest, dict) else None
    if not isinstance(entries, list):
        raise ManifestError(f"manifest {manifest_path} has no 'subjects' list")

    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    subjects, scores, seen = [], [], set()
    excluded = set()

    for position, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise ManifestError(f"{manifest_path}: subject #{position} is not an object")
        subject_id = entry.get("id")
        if not isinstance(subject_id, str) or not subject_id:
            raise ManifestError(f"{manifest_path}: subject #{position} has no string 'id'")
        if subject_id in seen:
            raise DuplicateSubjectError(f"{manifest_path}: duplicate subject id {subject_id!r}")
        seen.add(subject_id)
        if "score" not in entry or entry["score"] is None:
            raise MissingScoreError(f"{manifest_path}: subject {subject_id!r} has no score")
        score = entry["score"]
        if isinstance(score, bool) or not isinstance(score, (int, float)) or not math.isfinite(score):
            raise ManifestError(f"{manifest_path}: subject {subject_id!r} has invalid score {score!r}")
        relative = entry.get("timeseries")
        if not isinstance(relative, str):
            raise ManifestError(f"{manifest_path}: subject {subject_id!r} has no 'timeseries' path")

        path = os.path.join(base_dir, relative)
        try:
            raw = load_timeseries(path)
        except OSError as e:
            raise DataError(f"cannot read time series for subject {subject_id!r} at {path}: {e}") from e

        if subjects and raw.shape != subjects[0].data.shape:
            raise DimensionMismatchError(
                f"subject {subject_id!r} ({path}) has T x V = {raw.shape}, "
                f"expected {subjects[0].data.shape}"
            )
        matrix = normalize_columns(raw, mode)
        excluded.update(matrix.zero_columns)
        subjects.append(Subject(subject_id, matrix))
        scores.append(float(score))

    if excluded:
        logger.warning(f"Excluding {len(excluded)} zero-variance vertices from all subjects")
        subjects = [Subject(s.subject_id, _zero_excluded(s.data, excluded)) for s in subjects]

    cohort = Cohort(tuple(subjects), scores, frozenset(excluded))
    logger.info(
        f"Loaded cohort with {cohort.n_subjects} subjects "
        f"(T={cohort.n_timepoints}, V={cohort.n_vertices}) from {manifest_path}"
    )
    return cohort


def store_cohort(cohort, directory):
    """
    Write one SKTS file per subject plus ``manifest.json`` into ``directory``.

    Returns:
        str: Path of the written manifest.
    """
    os.makedirs(directory, exist_ok=True)
    entries = []
    for subject, score in zip(cohort.subjects, cohort.scores):
        file_name = f"{subject.subject_id}.skts"
        store_timeseries(subject.data, os.path.join(directory, file_name))
        entries.append({"id": subject.subject_id, "timeseries": file_name, "score": float(score)})
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump({"subjects": entries}, f, ensure_ascii=False, indent=2)
    logger.info(f"Stored cohort of {cohort.n_subjects} subjects in {directory}")
    return manifest_path
