"""Naive Bayes: Gaussian likelihoods for numeric columns, add-one smoothed
frequency tables for categorical columns, log-space posteriors."""

from __future__ import annotations

import math

import numpy as np

from .errors import EmptyDatasetError, ModelIntegrityError, SchemaError

VARIANCE_FLOOR = 1e-9
_LOG_2PI = math.log(2 * math.pi)


class NaiveBayesModel:
    kind = "naive_bayes"

    def __init__(self, priors, gaussians, tables, feature_names, feature_kinds):
        self.priors = priors          # [p(class 0), p(class 1)]
        self.gaussians = gaussians    # name -> [(mean, var) per class]
        self.tables = tables          # name -> [{value: prob} per class], plus "__n__"
        self.feature_names = list(feature_names)
        self.feature_kinds = list(feature_kinds)

    def _log_posteriors(self, row):
        logs = [math.log(self.priors[0]), math.log(self.priors[1])]
        for name, kind in zip(self.feature_names, self.feature_kinds):
            value = row[name]
            for cls in (0, 1):
                if kind == "numeric":
                    mean, var = self.gaussians[name][cls]
                    logs[cls] += -0.5 * (_LOG_2PI + math.log(var)
                                         + (value - mean) ** 2 / var)
                else:
                    table, n_cls, n_values = self.tables[name][cls]
                    # Unseen value: the add-one mass a zero-count value would get.
                    prob = table.get(value, 1.0 / (n_cls + n_values))
                    logs[cls] += math.log(prob)
        return logs

    def score_row(self, row):
        """Positive-class posterior probability."""
        if set(row) != set(self.feature_names):
            raise SchemaError("row columns do not match the training schema")
        l0, l1 = self._log_posteriors(row)
        m = max(l0, l1)
        e0, e1 = math.exp(l0 - m), math.exp(l1 - m)
        return e1 / (e0 + e1)

    def predict_scores(self, matrix, rows=None):
        if matrix.names != self.feature_names or matrix.kinds != self.feature_kinds:
            raise SchemaError("matrix schema does not match the training schema")
        if rows is None:
            rows = range(matrix.n_rows)
        cols = {name: matrix.column(name) for name in self.feature_names}
        out = np.empty(len(rows), dtype=np.float64)
        for out_i, r in enumerate(rows):
            row = {name: cols[name][r] for name in self.feature_names}
            l0, l1 = self._log_posteriors(row)
            m = max(l0, l1)
            e0, e1 = math.exp(l0 - m), math.exp(l1 - m)
            out[out_i] = e1 / (e0 + e1)
        return out

    def to_json(self):
        return {
            "priors": list(self.priors),
            "gaussians": {name: [[m, v] for m, v in per_cls]
                          for name, per_cls in self.gaussians.items()},
            "tables": {name: [[table, n_cls, n_values]
                              for table, n_cls, n_values in per_cls]
                       for name, per_cls in self.tables.items()},
            "feature_names": self.feature_names,
            "feature_kinds": self.feature_kinds,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            gaussians = {name: [tuple(pair) for pair in per_cls]
                         for name, per_cls in obj["gaussians"].items()}
            tables = {name: [(entry[0], entry[1], entry[2]) for entry in per_cls]
                      for name, per_cls in obj["tables"].items()}
            return cls(priors=list(obj["priors"]), gaussians=gaussians, tables=tables,
                       feature_names=obj["feature_names"],
                       feature_kinds=obj["feature_kinds"])
        except (KeyError, TypeError, IndexError) as exc:
            raise ModelIntegrityError(f"malformed naive-bayes payload: {exc}") from exc


def train_naive_bayes(matrix):
    """Fit class priors and per-column likelihood models on a missing-filtered
    matrix containing both classes."""
    n = matrix.n_rows
    if n == 0:
        raise EmptyDatasetError("cannot train naive Bayes on an empty matrix")
    y = np.asarray(matrix.labels, dtype=np.int64)
    class_counts = np.bincount(y, minlength=2)
    if class_counts.min() == 0:
        raise SchemaError("training data contains a single class")
    for name in matrix.names:
        if matrix.missing_mask(name).any():
            raise SchemaError(f"column {name!r} still has missing cells; "
                              "apply the missing-value filter first")

    priors = [class_counts[0] / n, class_counts[1] / n]
    gaussians = {}
    tables = {}
    for name, kind, col in zip(matrix.names, matrix.kinds, matrix.columns):
        if kind == "numeric":
            per_cls = []
            for cls in (0, 1):
                values = col[y == cls].astype(np.float64)
                per_cls.append((float(values.mean()),
                                max(float(values.var()), VARIANCE_FLOOR)))
            gaussians[name] = per_cls
        else:
            vocab = sorted({v for v in col})
            n_values = len(vocab)
            per_cls = []
            for cls in (0, 1):
                subset = col[y == cls]
                counts = {v: 0 for v in vocab}
                for v in subset:
                    counts[v] += 1
                n_cls = len(subset)
                table = {v: (c + 1) / (n_cls + n_values) for v, c in counts.items()}
                per_cls.append((table, n_cls, n_values))
            tables[name] = per_cls
    return NaiveBayesModel(priors=priors, gaussians=gaussians, tables=tables,
                           feature_names=matrix.names, feature_kinds=matrix.kinds)
