"""Missing-value replacement: column mean for numeric cells, column mode for
categorical cells, with statistics taken from the training rows only."""

from __future__ import annotations

import numpy as np

from .errors import SchemaError
from .matrix import FeatureMatrix


class MissingValueFilter:
    """Fitted fill values per column, applied unchanged to any later rows."""

    def __init__(self, fills):
        self.fills = fills  # column name -> fill value (float or str)

    @classmethod
    def fit(cls, matrix, train_indices=None):
        if train_indices is None:
            train_indices = np.arange(matrix.n_rows)
        else:
            train_indices = np.asarray(train_indices, dtype=np.intp)
        fills = {}
        for name, kind, col in zip(matrix.names, matrix.kinds, matrix.columns):
            train_col = col[train_indices]
            if kind == "numeric":
                present = train_col[~np.isnan(train_col)]
                if len(present) == 0:
                    raise SchemaError(f"column {name!r} has no training values")
                fills[name] = float(present.mean())
            else:
                counts = {}
                for v in train_col:
                    if v is not None:
                        counts[v] = counts.get(v, 0) + 1
                if not counts:
                    raise SchemaError(f"column {name!r} has no training values")
                # Highest count wins; ties go to the lexicographically smaller value.
                fills[name] = min(counts, key=lambda v: (-counts[v], v))
        return cls(fills)

    def transform(self, matrix):
        if list(self.fills) != matrix.names:
            raise SchemaError("matrix columns do not match the fitted filter")
        columns = []
        for name, kind, col in zip(matrix.names, matrix.kinds, matrix.columns):
            fill = self.fills[name]
            if kind == "numeric":
                out = col.copy()
                out[np.isnan(out)] = fill
            else:
                out = np.array([fill if v is None else v for v in col], dtype=object)
            columns.append(out)
        return FeatureMatrix(matrix.names, matrix.kinds, matrix.groups,
                             columns, matrix.labels, matrix.row_ids)

    def to_json(self):
        return {"fills": dict(self.fills)}

    @classmethod
    def from_json(cls, obj):
        return cls(fills=dict(obj["fills"]))


def replace_missing(matrix, train_indices=None):
    """Fill every missing cell using training-partition statistics."""
    return MissingValueFilter.fit(matrix, train_indices).transform(matrix)
