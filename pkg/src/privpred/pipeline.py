"""Learner wrappers that bundle the missing-value filter, the optional
factor aggregation, and a fitted classifier into one predict surface."""

from __future__ import annotations

import math

import numpy as np

from .errors import ModelIntegrityError, SchemaError
from .loglinear import FactorAggregator, LoglinearModel, train_loglinear
from .missing import MissingValueFilter
from .naive_bayes import NaiveBayesModel, train_naive_bayes
from .tree import TreeModel, TreeParams, train_decision_tree

LEARNER_NAMES = ("tree", "nb", "loglinear-additive", "loglinear-full")


class Learner:
    """A trainable configuration; fit() returns a FittedPipeline."""

    def __init__(self, name, tree_params=None, l2=1e-4):
        if name not in LEARNER_NAMES:
            raise SchemaError(f"unknown learner {name!r}; choose from {LEARNER_NAMES}")
        self.name = name
        self.tree_params = tree_params or TreeParams()
        self.l2 = l2

    def fit(self, matrix, train_indices=None):
        if train_indices is None:
            train_indices = np.arange(matrix.n_rows)
        else:
            train_indices = np.asarray(train_indices, dtype=np.intp)
        filt = MissingValueFilter.fit(matrix, train_indices)
        filled = filt.transform(matrix)
        aggregator = None
        if self.name == "tree":
            model = train_decision_tree(filled.subset(train_indices), self.tree_params)
        elif self.name == "nb":
            model = train_naive_bayes(filled.subset(train_indices))
        else:
            variant = "additive" if self.name == "loglinear-additive" else "full_factorial"
            aggregator = FactorAggregator.fit(filled, train_indices)
            scores = aggregator.transform(filled)
            model = train_loglinear(
                scores.values[train_indices], filled.labels[train_indices],
                variant=variant, l2=self.l2)
        return FittedPipeline(learner_name=self.name, filter=filt,
                              aggregator=aggregator, model=model,
                              feature_names=matrix.names, feature_kinds=matrix.kinds)


def make_learner(name, confidence=0.25, min_leaf=2, l2=1e-4):
    tree_params = TreeParams(confidence=confidence, min_leaf=min_leaf)
    return Learner(name, tree_params=tree_params, l2=l2)


class FittedPipeline:
    """Filter -> (aggregation ->) model; predicts positive-class scores for
    raw feature rows with the training schema."""

    kind = "pipeline"

    def __init__(self, learner_name, filter, aggregator, model,
                 feature_names, feature_kinds):
        self.learner_name = learner_name
        self.filter = filter
        self.aggregator = aggregator
        self.model = model
        self.feature_names = list(feature_names)
        self.feature_kinds = list(feature_kinds)

    def predict_scores(self, matrix, rows=None):
        if matrix.names != self.feature_names or matrix.kinds != self.feature_kinds:
            raise SchemaError("matrix schema does not match the training schema")
        filled = self.filter.transform(matrix)
        if self.aggregator is None:
            return self.model.predict_scores(filled, rows)
        factors = self.aggregator.transform(filled)
        values = factors.values if rows is None else factors.values[np.asarray(rows)]
        return self.model.predict_from_factors(values)

    def score_row(self, row):
        if set(row) != set(self.feature_names):
            raise SchemaError("row columns do not match the training schema")
        filled = {}
        for name, kind in zip(self.feature_names, self.feature_kinds):
            value = row[name]
            if value is None or (kind == "numeric" and isinstance(value, float)
                                 and math.isnan(value)):
                value = self.filter.fills[name]
            elif kind == "numeric":
                try:
                    value = float(value)
                except (TypeError, ValueError):
                    raise SchemaError(f"column {name!r} expects a numeric value, "
                                      f"got {value!r}") from None
            filled[name] = value
        if self.aggregator is None:
            return self.model.score_row(filled)
        factors = self.aggregator.transform_row(filled)
        return self.model.score_row(factors)

    def to_json(self):
        return {
            "learner": self.learner_name,
            "filter": self.filter.to_json(),
            "aggregator": None if self.aggregator is None else self.aggregator.to_json(),
            "model_kind": self.model.kind,
            "model": self.model.to_json(),
            "feature_names": self.feature_names,
            "feature_kinds": self.feature_kinds,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            model_cls = MODEL_CLASSES[obj["model_kind"]]
            aggregator = obj["aggregator"]
            return cls(
                learner_name=obj["learner"],
                filter=MissingValueFilter.from_json(obj["filter"]),
                aggregator=None if aggregator is None
                else FactorAggregator.from_json(aggregator),
                model=model_cls.from_json(obj["model"]),
                feature_names=obj["feature_names"],
                feature_kinds=obj["feature_kinds"],
            )
        except (KeyError, TypeError) as exc:
            raise ModelIntegrityError(f"malformed pipeline payload: {exc}") from exc


def predict(model, row):
    """Uniform prediction surface: (label, positive-class score) for one row.

    Accepts a FittedPipeline or bare model; the row is a dict keyed by the
    model's input schema (feature columns, or factor names for a bare
    loglinear model)."""
    if isinstance(model, LoglinearModel):
        from .loglinear import FACTORS

        if set(row) != set(FACTORS):
            raise SchemaError(f"loglinear rows need factor scores {FACTORS}")
        score = model.score_row([row[f] for f in FACTORS])
    else:
        score = model.score_row(row)
    return (1 if score >= 0.5 else 0, float(score))


MODEL_CLASSES = {
    "tree": TreeModel,
    "naive_bayes": NaiveBayesModel,
    "loglinear": LoglinearModel,
    "pipeline": FittedPipeline,
}
