"""Disclosure-probability models that are loglinear in four factor scores.

Each record is reduced to one scalar per factor (tendency, sensitivity,
trustworthiness, appropriateness): columns of the factor's group are
z-scored against the training partition (sensitivity columns on a log
scale first, since inverse-frequency scores are heavy tailed) and then
averaged. The additive model fits an intercept plus the four factors; the
full-factorial variant adds all eleven interaction products.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import EmptyDatasetError, ModelIntegrityError, SchemaError

FACTORS = ("tendency", "sensitivity", "trustworthiness", "appropriateness")

# Interaction structure: index tuples into FACTORS, singles first, then all
# higher-order products in combination order.
FULL_FACTORIAL_TERMS = tuple(
    combo
    for size in (1, 2, 3, 4)
    for combo in itertools.combinations(range(4), size)
)


def term_names(variant):
    if variant == "additive":
        return [FACTORS[i] for (i,) in FULL_FACTORIAL_TERMS[:4]]
    return ["*".join(FACTORS[i] for i in combo) for combo in FULL_FACTORIAL_TERMS]


@dataclass(frozen=True)
class FactorScores:
    """One row per record, one column per factor, in FACTORS order."""

    values: np.ndarray
    absent: tuple = ()

    @property
    def n_rows(self):
        return self.values.shape[0]


class FactorAggregator:
    """Training-partition z-scoring and per-factor averaging of feature columns."""

    def __init__(self, plan, absent):
        # plan: factor -> list of (column name, use_log, mean, std)
        self.plan = plan
        self.absent = tuple(absent)

    @classmethod
    def fit(cls, matrix, train_indices=None):
        if train_indices is None:
            train_indices = np.arange(matrix.n_rows)
        else:
            train_indices = np.asarray(train_indices, dtype=np.intp)
        plan = {}
        absent = []
        for factor in FACTORS:
            entries = []
            for name in matrix.columns_in_group(factor):
                if matrix.kind_of(name) != "numeric":
                    continue
                col = matrix.column(name).astype(np.float64)
                if np.isnan(col).any():
                    raise SchemaError(f"column {name!r} still has missing cells; "
                                      "apply the missing-value filter first")
                use_log = factor == "sensitivity"
                values = col[train_indices]
                if use_log:
                    if (values <= 0).any():
                        raise SchemaError(
                            f"sensitivity column {name!r} has non-positive values")
                    values = np.log(values)
                entries.append((name, use_log, float(values.mean()),
                                float(values.std())))
            if entries:
                plan[factor] = entries
            else:
                absent.append(factor)
        if not plan:
            raise SchemaError("no numeric factor columns to aggregate")
        return cls(plan=plan, absent=absent)

    def transform(self, matrix):
        n = matrix.n_rows
        out = np.zeros((n, len(FACTORS)), dtype=np.float64)
        for j, factor in enumerate(FACTORS):
            entries = self.plan.get(factor)
            if not entries:
                continue
            acc = np.zeros(n, dtype=np.float64)
            for name, use_log, mean, std in entries:
                col = matrix.column(name).astype(np.float64)
                if use_log:
                    col = np.log(col)
                if std > 0:
                    acc += (col - mean) / std
                # Constant training columns carry no signal; contribute 0.
            out[:, j] = acc / len(entries)
        return FactorScores(values=out, absent=self.absent)

    def transform_row(self, row):
        """Factor scores for one complete feature row (dict by column name)."""
        out = []
        for factor in FACTORS:
            entries = self.plan.get(factor)
            if not entries:
                out.append(0.0)
                continue
            acc = 0.0
            for name, use_log, mean, std in entries:
                value = float(row[name])
                if use_log:
                    value = np.log(value)
                if std > 0:
                    acc += (value - mean) / std
            out.append(acc / len(entries))
        return out

    def to_json(self):
        return {
            "plan": {factor: [[name, use_log, mean, std]
                              for name, use_log, mean, std in entries]
                     for factor, entries in self.plan.items()},
            "absent": list(self.absent),
        }

    @classmethod
    def from_json(cls, obj):
        plan = {factor: [(e[0], bool(e[1]), e[2], e[3]) for e in entries]
                for factor, entries in obj["plan"].items()}
        return cls(plan=plan, absent=tuple(obj["absent"]))


def aggregate_factors(matrix, train_indices=None):
    """Convenience: fit the aggregator and transform in one step."""
    return FactorAggregator.fit(matrix, train_indices).transform(matrix)


def design_matrix(factor_values, variant):
    factor_values = np.asarray(factor_values, dtype=np.float64)
    if factor_values.ndim != 2 or factor_values.shape[1] != len(FACTORS):
        raise SchemaError(f"factor matrix must have {len(FACTORS)} columns")
    if variant == "additive":
        return factor_values
    if variant != "full_factorial":
        raise SchemaError(f"unknown loglinear variant {variant!r}")
    cols = [factor_values[:, list(combo)].prod(axis=1)
            for combo in FULL_FACTORIAL_TERMS]
    return np.stack(cols, axis=1)


def penalized_log_likelihood(weights, design, labels, l2):
    """Mean Bernoulli log-likelihood minus an L2 penalty on the non-intercept
    coefficients. weights[0] is the intercept."""
    z = weights[0] + design @ weights[1:]
    ll = labels * z - np.logaddexp(0.0, z)
    return float(ll.mean() - 0.5 * l2 * (weights[1:] @ weights[1:]))


def penalized_gradient(weights, design, labels, l2):
    z = weights[0] + design @ weights[1:]
    residual = labels - expit(z)
    grad = np.empty_like(weights)
    grad[0] = residual.mean()
    grad[1:] = design.T @ residual / len(labels) - l2 * weights[1:]
    return grad


@dataclass
class LoglinearModel:
    kind = "loglinear"

    variant: str
    intercept: float
    coefficients: np.ndarray
    absent: tuple = ()
    l2: float = 1e-4
    n_iterations: int = 0
    gradient_norm: float = 0.0
    converged: bool = True
    factor_names: tuple = field(default=FACTORS)

    def predict_from_factors(self, factor_values):
        design = design_matrix(factor_values, self.variant)
        return expit(self.intercept + design @ self.coefficients)

    def score_row(self, factor_row):
        if len(factor_row) != len(FACTORS):
            raise SchemaError(f"expected {len(FACTORS)} factor scores")
        return float(self.predict_from_factors(np.asarray(factor_row)[None, :])[0])

    def to_json(self):
        return {
            "variant": self.variant,
            "intercept": self.intercept,
            "coefficients": list(map(float, self.coefficients)),
            "terms": term_names(self.variant),
            "absent": list(self.absent),
            "l2": self.l2,
            "n_iterations": self.n_iterations,
            "gradient_norm": self.gradient_norm,
            "converged": self.converged,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            expected = {"additive": 4, "full_factorial": 15}[obj["variant"]]
            coefficients = np.asarray(obj["coefficients"], dtype=np.float64)
            if len(coefficients) != expected:
                raise ModelIntegrityError(
                    f"{obj['variant']} model needs {expected} coefficients, "
                    f"got {len(coefficients)}")
            return cls(variant=obj["variant"], intercept=float(obj["intercept"]),
                       coefficients=coefficients, absent=tuple(obj["absent"]),
                       l2=float(obj["l2"]), n_iterations=int(obj["n_iterations"]),
                       gradient_norm=float(obj["gradient_norm"]),
                       converged=bool(obj["converged"]))
        except (KeyError, TypeError) as exc:
            raise ModelIntegrityError(f"malformed loglinear payload: {exc}") from exc


def train_loglinear(scores, labels, variant="additive", l2=1e-4,
                    max_iter=10000, tol=1e-8):
    """Maximum-likelihood fit by gradient ascent with Barzilai-Borwein step
    sizes and a backtracking safeguard. Stops when no coefficient moves by
    more than tol; non-convergence is reported via a warning and the model's
    diagnostics fields."""
    if isinstance(scores, FactorScores):
        factor_values = scores.values
        absent = scores.absent
    else:
        factor_values = np.asarray(scores, dtype=np.float64)
        absent = ()
    labels = np.asarray(labels, dtype=np.float64)
    if factor_values.shape[0] == 0:
        raise EmptyDatasetError("cannot fit a loglinear model without records")
    if factor_values.shape[0] != len(labels):
        raise SchemaError("factor matrix and labels disagree on record count")
    design = design_matrix(factor_values, variant)

    w = np.zeros(design.shape[1] + 1, dtype=np.float64)
    obj = penalized_log_likelihood(w, design, labels, l2)
    grad = penalized_gradient(w, design, labels, l2)
    step = 1.0
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        # Backtrack until the step actually improves the objective.
        t = step
        for _ in range(60):
            w_new = w + t * grad
            obj_new = penalized_log_likelihood(w_new, design, labels, l2)
            if obj_new >= obj or t < 1e-16:
                break
            t *= 0.5
        grad_new = penalized_gradient(w_new, design, labels, l2)
        delta = w_new - w
        if np.abs(delta).max() < tol:
            w, obj, grad = w_new, obj_new, grad_new
            converged = True
            break
        # Barzilai-Borwein step for the next iteration.
        grad_change = grad - grad_new
        denom = delta @ grad_change
        step = float(delta @ delta / denom) if denom > 0 else 1.0
        if not np.isfinite(step) or step <= 0:
            step = 1.0
        w, obj, grad = w_new, obj_new, grad_new

    grad_norm = float(np.linalg.norm(grad))
    if not converged:
        warnings.warn(
            f"loglinear fit did not converge in {max_iter} iterations "
            f"(final gradient norm {grad_norm:.3e})", RuntimeWarning)
    return LoglinearModel(variant=variant, intercept=float(w[0]),
                          coefficients=w[1:].copy(), absent=absent, l2=l2,
                          n_iterations=n_iter, gradient_norm=grad_norm,
                          converged=converged)
