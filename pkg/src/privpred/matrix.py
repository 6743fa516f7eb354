"""Labeled feature matrix with per-column factor-group tags and explicit
missing cells (NaN for numeric columns, None for categorical)."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import ParseError, SchemaError

FACTOR_GROUPS = ("trustworthiness", "tendency", "sensitivity", "appropriateness", "context")
COLUMN_KINDS = ("numeric", "categorical")

# Display indices used in ablation reports (matching the factor list order).
GROUP_INDEX = {name: i + 1 for i, name in enumerate(FACTOR_GROUPS)}


class FeatureMatrix:
    """Column-major feature store: names, kinds, factor groups, values, labels.

    Numeric columns are float64 arrays (NaN = missing); categorical columns
    are object arrays of strings (None = missing). Labels are an int8 vector.
    """

    def __init__(self, names, kinds, groups, columns, labels, row_ids=None):
        names = list(names)
        kinds = list(kinds)
        groups = list(groups)
        if not (len(names) == len(kinds) == len(groups) == len(columns)):
            raise SchemaError("column metadata lengths disagree")
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        for kind in kinds:
            if kind not in COLUMN_KINDS:
                raise SchemaError(f"unknown column kind {kind!r}")
        for group in groups:
            if group not in FACTOR_GROUPS:
                raise SchemaError(f"unknown factor group {group!r}")

        self.names = names
        self.kinds = kinds
        self.groups = groups
        self.labels = np.asarray(labels, dtype=np.int8)
        n = len(self.labels)
        self.columns = []
        for name, kind, col in zip(names, kinds, columns):
            if kind == "numeric":
                arr = np.array([math.nan if v is None else float(v) for v in col],
                               dtype=np.float64)
            else:
                arr = np.array([None if v is None else str(v) for v in col],
                               dtype=object)
            if len(arr) != n:
                raise SchemaError(f"column {name!r} has {len(arr)} rows, expected {n}")
            self.columns.append(arr)
        if row_ids is None:
            row_ids = [str(i) for i in range(n)]
        self.row_ids = list(row_ids)
        if len(self.row_ids) != n:
            raise SchemaError("row_ids length does not match labels")
        self._index = {name: i for i, name in enumerate(names)}

    # -- basic accessors -------------------------------------------------

    @property
    def n_rows(self):
        return len(self.labels)

    @property
    def n_columns(self):
        return len(self.names)

    def column(self, name):
        return self.columns[self._index[name]]

    def kind_of(self, name):
        return self.kinds[self._index[name]]

    def group_of(self, name):
        return self.groups[self._index[name]]

    def columns_in_group(self, group):
        return [n for n, g in zip(self.names, self.groups) if g == group]

    def present_groups(self):
        return tuple(g for g in FACTOR_GROUPS if g in set(self.groups))

    def missing_mask(self, name):
        col = self.column(name)
        if self.kind_of(name) == "numeric":
            return np.isnan(col)
        return np.array([v is None for v in col], dtype=bool)

    def row(self, i):
        """Row i as a dict column name -> value (missing as None)."""
        out = {}
        for name, kind, col in zip(self.names, self.kinds, self.columns):
            v = col[i]
            if kind == "numeric" and math.isnan(v):
                v = None
            out[name] = v
        return out

    # -- structural operations --------------------------------------------

    def subset(self, rows):
        rows = np.asarray(rows, dtype=np.intp)
        return FeatureMatrix(
            self.names, self.kinds, self.groups,
            [col[rows] for col in self.columns],
            self.labels[rows],
            [self.row_ids[i] for i in rows])

    def drop_groups(self, groups):
        groups = set(groups)
        unknown = groups - set(FACTOR_GROUPS)
        if unknown:
            raise SchemaError(f"unknown factor groups {sorted(unknown)}")
        keep = [i for i, g in enumerate(self.groups) if g not in groups]
        return FeatureMatrix(
            [self.names[i] for i in keep], [self.kinds[i] for i in keep],
            [self.groups[i] for i in keep], [self.columns[i] for i in keep],
            self.labels, self.row_ids)

    def with_columns(self, names, kinds, groups, columns):
        """New matrix with extra columns appended (used to inject probe columns)."""
        return FeatureMatrix(
            self.names + list(names), self.kinds + list(kinds),
            self.groups + list(groups), self.columns + [np.asarray(c) for c in columns],
            self.labels, self.row_ids)

    def replace_labels(self, labels):
        return FeatureMatrix(self.names, self.kinds, self.groups,
                             self.columns, labels, self.row_ids)

    def __eq__(self, other):
        if not isinstance(other, FeatureMatrix):
            return NotImplemented
        if (self.names, self.kinds, self.groups) != (other.names, other.kinds, other.groups):
            return False
        if self.row_ids != other.row_ids or not np.array_equal(self.labels, other.labels):
            return False
        for kind, a, b in zip(self.kinds, self.columns, other.columns):
            if kind == "numeric":
                if not np.array_equal(a, b, equal_nan=True):
                    return False
            elif not all(x == y for x, y in zip(a, b)):
                return False
        return True

    # -- CSV + sidecar persistence ----------------------------------------

    def save(self, csv_path, meta_path=None):
        """Write rows to CSV plus a sidecar JSON mapping columns to groups."""
        from .fileio import atomic_writer

        if meta_path is None:
            meta_path = default_meta_path(csv_path)
        with atomic_writer(csv_path, newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["record_id", *self.names, "label"])
            for i in range(self.n_rows):
                row = [self.row_ids[i]]
                for kind, col in zip(self.kinds, self.columns):
                    v = col[i]
                    if kind == "numeric":
                        row.append("" if math.isnan(v) else repr(float(v)))
                    else:
                        row.append("" if v is None else v)
                row.append(int(self.labels[i]))
                writer.writerow(row)
        meta = {
            "format_version": 1,
            "columns": [{"name": n, "kind": k, "group": g}
                        for n, k, g in zip(self.names, self.kinds, self.groups)],
        }
        with atomic_writer(meta_path) as handle:
            json.dump(meta, handle, indent=2)
            handle.write("\n")

    @classmethod
    def load(cls, csv_path, meta_path=None):
        if meta_path is None:
            meta_path = default_meta_path(csv_path)
        with open(meta_path, "r", encoding="utf-8") as handle:
            meta = json.load(handle)
        names = [c["name"] for c in meta["columns"]]
        kinds = [c["kind"] for c in meta["columns"]]
        groups = [c["group"] for c in meta["columns"]]
        expected_header = ["record_id", *names, "label"]
        row_ids, labels = [], []
        cols = [[] for _ in names]
        with open(csv_path, "r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header != expected_header:
                raise ParseError("feature CSV header does not match sidecar metadata",
                                 path=csv_path, line=1)
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(expected_header):
                    raise ParseError(f"expected {len(expected_header)} fields, got {len(row)}",
                                     path=csv_path, line=lineno)
                row_ids.append(row[0])
                for j, (kind, cell) in enumerate(zip(kinds, row[1:-1])):
                    if cell == "":
                        cols[j].append(None)
                    elif kind == "numeric":
                        cols[j].append(float(cell))
                    else:
                        cols[j].append(cell)
                labels.append(int(row[-1]))
        return cls(names, kinds, groups, cols, labels, row_ids)


def default_meta_path(csv_path):
    return f"{csv_path}.meta.json"
