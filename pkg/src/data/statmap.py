"""Per-vertex test results."""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from src.errors import UsageError


class StatRow(NamedTuple):
    vertex_index: int
    statistic: float
    p_value: float
    q_value: float
    rejected: bool


@dataclass(frozen=True)
class StatMap:
    """
    Column-oriented statistic map over the analysed (non-excluded) vertices.

    Row k describes vertex ``vertex_index[k]``. ``rejected`` is
    ``q_value <= alpha``.
    """

    vertex_index: np.ndarray
    statistic: np.ndarray
    p_value: np.ndarray
    q_value: np.ndarray
    rejected: np.ndarray
    alpha: float
    n_vertices: int

    def __post_init__(self):
        columns = {}
        for name, dtype in (
            ("vertex_index", np.int64),
            ("statistic", np.float64),
            ("p_value", np.float64),
            ("q_value", np.float64),
            ("rejected", bool),
        ):
            arr = np.array(getattr(self, name), dtype=dtype, copy=True).reshape(-1)
            arr.setflags(write=False)
            columns[name] = arr
            object.__setattr__(self, name, arr)
        lengths = {arr.shape[0] for arr in columns.values()}
        if len(lengths) != 1:
            raise UsageError(f"StatMap columns differ in length: {sorted(lengths)}")
        for name in ("p_value", "q_value"):
            arr = columns[name]
            if ((arr < 0) | (arr > 1)).any():
                raise UsageError(f"StatMap {name} outside [0, 1]")

    def __len__(self):
        return self.vertex_index.shape[0]

    def rows(self):
        for k in range(len(self)):
            yield StatRow(
                int(self.vertex_index[k]),
                float(self.statistic[k]),
                float(self.p_value[k]),
                float(self.q_value[k]),
                bool(self.rejected[k]),
            )

    def full(self, column="p_value"):
        """Expand a column to length ``n_vertices``, NaN at unanalysed vertices."""
        out = np.full(self.n_vertices, np.nan)
        out[self.vertex_index] = getattr(self, column)
        return out

    def rejected_vertices(self):
        return frozenset(int(v) for v in self.vertex_index[self.rejected])
