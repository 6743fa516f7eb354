"""The experimental protocol: undersampling to class balance, repeated
stratified 10-fold cross-validation (a fresh balanced sample per repeat,
100 train/test runs by default), F1/AUC metrics, and grouped-feature
ablation with per-dataset applicability rules."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDatasetError, ModelIntegrityError, PrivpredError, SchemaError
from .location_features import build_location_features
from .matrix import FACTOR_GROUPS, GROUP_INDEX, FeatureMatrix
from .pipeline import make_learner

REPORT_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    return Confusion(
        tp=int(((y_true == 1) & (y_pred == 1)).sum()),
        fp=int(((y_true == 0) & (y_pred == 1)).sum()),
        fn=int(((y_true == 1) & (y_pred == 0)).sum()),
        tn=int(((y_true == 0) & (y_pred == 0)).sum()),
    )


@dataclass(frozen=True)
class F1Scores:
    positive: float
    negative: float

    @property
    def macro(self):
        return (self.positive + self.negative) / 2


def f1_score(conf):
    """Per-class F1 (harmonic mean of precision and recall) plus the macro
    average, which is the headline metric on balanced data."""
    pos_den = 2 * conf.tp + conf.fp + conf.fn
    neg_den = 2 * conf.tn + conf.fn + conf.fp
    return F1Scores(
        positive=2 * conf.tp / pos_den if pos_den else 0.0,
        negative=2 * conf.tn / neg_den if neg_den else 0.0,
    )


def tied_ranks(values):
    """1-based ranks with ties replaced by the group's average rank."""
    values = np.asarray(values, dtype=np.float64)
    n = len(values)
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(n, dtype=np.float64)
    boundaries = np.nonzero(np.diff(values[order]))[0] + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [n]])
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = (s + e + 1) / 2.0
    return ranks


def auc(scores, labels):
    """Area under the ROC curve via the rank-sum statistic, average ranks
    on ties. Requires both classes."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    positives = labels == 1
    n_pos = int(positives.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SchemaError("AUC needs both classes present")
    ranks = tied_ranks(scores)
    rank_sum = float(ranks[positives].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# Undersampling and the cross-validation plan
# ---------------------------------------------------------------------------

def undersample_indices(labels, rng):
    """Balanced row indices: the whole minority class plus a without-
    replacement sample of the majority class, sorted."""
    labels = np.asarray(labels)
    idx0 = np.nonzero(labels == 0)[0]
    idx1 = np.nonzero(labels == 1)[0]
    if len(idx0) == 0 or len(idx1) == 0:
        raise SchemaError("undersampling needs both classes present")
    if len(idx0) <= len(idx1):
        minority, majority = idx0, idx1
    else:
        minority, majority = idx1, idx0
    sampled = rng.choice(majority, size=len(minority), replace=False)
    return np.sort(np.concatenate([minority, sampled]))


def undersample(records, seed):
    """Balanced copy of a labeled record sequence."""
    records = list(records)
    labels = np.array([r.label for r in records])
    keep = undersample_indices(labels, np.random.default_rng(seed))
    return [records[i] for i in keep]


@dataclass(frozen=True)
class CvRun:
    repeat: int
    fold: int
    train_indices: np.ndarray
    test_indices: np.ndarray


def cv_plan(labels, repeats=10, folds=10, seed=0):
    """All (repeat, fold) runs: per repeat, a fresh seeded undersample and a
    stratified fold partition of it. The run seed is master_seed XOR repeat."""
    labels = np.asarray(labels)
    runs = []
    for r in range(repeats):
        rng = np.random.default_rng(seed ^ r)
        balanced = undersample_indices(labels, rng)
        y_bal = labels[balanced]
        fold_members = [[] for _ in range(folds)]
        for cls in (0, 1):
            cls_idx = balanced[y_bal == cls].copy()
            if len(cls_idx) < folds:
                raise SchemaError(
                    f"need at least {folds} records of class {cls} after balancing, "
                    f"got {len(cls_idx)}")
            rng.shuffle(cls_idx)
            for f, part in enumerate(np.array_split(cls_idx, folds)):
                fold_members[f].extend(int(i) for i in part)
        balanced_set = set(int(i) for i in balanced)
        for f in range(folds):
            test = sorted(fold_members[f])
            train = sorted(balanced_set - set(test))
            runs.append(CvRun(repeat=r, fold=f,
                              train_indices=np.array(train, dtype=np.intp),
                              test_indices=np.array(test, dtype=np.intp)))
    return runs


def fold_assignments(labels, repeats=10, folds=10, seed=0):
    """(record_index, repeat, fold) rows for every test membership."""
    rows = []
    for run in cv_plan(labels, repeats, folds, seed):
        rows.extend((int(i), run.repeat, run.fold) for i in run.test_indices)
    return rows


def export_fold_assignments(path, labels, repeats=10, folds=10, seed=0):
    import csv

    from .fileio import atomic_writer

    with atomic_writer(path, newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["record_id", "repeat", "fold"])
        writer.writerows(fold_assignments(labels, repeats, folds, seed))


# ---------------------------------------------------------------------------
# Cross-validation datasets
# ---------------------------------------------------------------------------

class MatrixDataset:
    """A precomputed matrix whose features do not depend on the training
    partition (the OSN analogs are population statistics and pure graph
    functions)."""

    def __init__(self, matrix):
        self.matrix = matrix
        self.labels = np.asarray(matrix.labels)

    def build(self, train_indices):
        return self.matrix


class AudienceSurveyDataset:
    """Location records for one audience; every build refits the sharing-
    probability tables on the training rows only."""

    def __init__(self, records, audience):
        self.records = [r for r in records if r.audience == audience]
        self.audience = audience
        if not self.records:
            raise EmptyDatasetError(f"no records for audience {audience!r}")
        self.labels = np.array([r.label for r in self.records])

    def build(self, train_indices):
        return build_location_features(self.records, self.audience, train_indices)


class GroupDroppedDataset:
    """Wrap a dataset, removing the given factor groups from every build."""

    def __init__(self, base, groups):
        self.base = base
        self.groups = tuple(groups)
        self.labels = base.labels

    def build(self, train_indices):
        return self.base.build(train_indices).drop_groups(self.groups)


def as_cv_dataset(obj):
    if isinstance(obj, FeatureMatrix):
        return MatrixDataset(obj)
    if hasattr(obj, "labels") and hasattr(obj, "build"):
        return obj
    raise SchemaError(f"cannot evaluate a {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Adapted cross-validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunScore:
    repeat: int
    fold: int
    f1_macro: float
    f1_positive: float
    f1_negative: float
    auc: float


@dataclass
class EvalResult:
    learner: str
    seed: int
    repeats: int
    folds: int
    balanced_size: int
    runs: list

    @property
    def run_count(self):
        return len(self.runs)

    def _stat(self, attr, fn):
        return float(fn([getattr(r, attr) for r in self.runs]))

    @property
    def mean_f1(self):
        return self._stat("f1_macro", np.mean)

    @property
    def std_f1(self):
        return self._stat("f1_macro", np.std)

    @property
    def mean_f1_positive(self):
        return self._stat("f1_positive", np.mean)

    @property
    def mean_f1_negative(self):
        return self._stat("f1_negative", np.mean)

    @property
    def mean_auc(self):
        return self._stat("auc", np.mean)

    @property
    def std_auc(self):
        return self._stat("auc", np.std)

    def to_json(self):
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "kind": "evaluation",
            "learner": self.learner,
            "seed": self.seed,
            "repeats": self.repeats,
            "folds": self.folds,
            "balanced_size": self.balanced_size,
            "summary": {
                "run_count": self.run_count,
                "mean_f1": self.mean_f1,
                "std_f1": self.std_f1,
                "mean_f1_positive": self.mean_f1_positive,
                "mean_f1_negative": self.mean_f1_negative,
                "mean_auc": self.mean_auc,
                "std_auc": self.std_auc,
            },
            "runs": [{"repeat": r.repeat, "fold": r.fold, "f1_macro": r.f1_macro,
                      "f1_positive": r.f1_positive, "f1_negative": r.f1_negative,
                      "auc": r.auc} for r in self.runs],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            runs = [RunScore(repeat=r["repeat"], fold=r["fold"],
                             f1_macro=r["f1_macro"], f1_positive=r["f1_positive"],
                             f1_negative=r["f1_negative"], auc=r["auc"])
                    for r in obj["runs"]]
            return cls(learner=obj["learner"], seed=obj["seed"],
                       repeats=obj["repeats"], folds=obj["folds"],
                       balanced_size=obj["balanced_size"], runs=runs)
        except (KeyError, TypeError) as exc:
            raise ModelIntegrityError(f"malformed evaluation report: {exc}") from exc


def adapted_cv(dataset, learner, repeats=10, folds=10, seed=0, jobs=1):
    """repeats x folds train/test evaluations; each repeat draws a fresh
    balanced dataset, each fold trains on the other nine and scores the
    held-out one. Feature tables and the missing-value filter are refit on
    the training rows of every run."""
    dataset = as_cv_dataset(dataset)
    if isinstance(learner, str):
        learner = make_learner(learner)
    labels = np.asarray(dataset.labels)
    plan = cv_plan(labels, repeats, folds, seed)
    minority = int(min((labels == 0).sum(), (labels == 1).sum()))

    def run_one(run):
        matrix = dataset.build(run.train_indices)
        fitted = learner.fit(matrix, run.train_indices)
        scores = fitted.predict_scores(matrix, run.test_indices)
        y_true = labels[run.test_indices]
        y_pred = (scores >= 0.5).astype(int)
        f1 = f1_score(confusion(y_true, y_pred))
        return RunScore(repeat=run.repeat, fold=run.fold, f1_macro=f1.macro,
                        f1_positive=f1.positive, f1_negative=f1.negative,
                        auc=auc(scores, y_true))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, plan))
    else:
        results = [run_one(run) for run in plan]
    results.sort(key=lambda r: (r.repeat, r.fold))
    learner_name = getattr(learner, "name", type(learner).__name__)
    return EvalResult(learner=learner_name, seed=seed, repeats=repeats,
                      folds=folds, balanced_size=2 * minority, runs=results)


# ---------------------------------------------------------------------------
# Ablation
# ---------------------------------------------------------------------------

@dataclass
class AblationEntry:
    groups: tuple           # factor groups removed together
    status: str             # "evaluated" or "not_applicable"
    result: EvalResult | None = None
    delta_f1: float | None = None
    delta_auc: float | None = None

    @property
    def display(self):
        return "+".join(f"({GROUP_INDEX[g]})" for g in self.groups)


@dataclass
class AblationReport:
    learner: str
    seed: int
    baseline: EvalResult
    entries: list

    def entry_for(self, group):
        for entry in self.entries:
            if group in entry.groups:
                return entry
        return None

    def to_json(self):
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "kind": "ablation",
            "learner": self.learner,
            "seed": self.seed,
            "baseline": self.baseline.to_json(),
            "entries": [{
                "groups": list(e.groups),
                "status": e.status,
                "result": None if e.result is None else e.result.to_json(),
                "delta_f1": e.delta_f1,
                "delta_auc": e.delta_auc,
            } for e in self.entries],
        }

    @classmethod
    def from_json(cls, obj):
        try:
            entries = [AblationEntry(
                groups=tuple(e["groups"]), status=e["status"],
                result=None if e["result"] is None else EvalResult.from_json(e["result"]),
                delta_f1=e["delta_f1"], delta_auc=e["delta_auc"])
                for e in obj["entries"]]
            return cls(learner=obj["learner"], seed=obj["seed"],
                       baseline=EvalResult.from_json(obj["baseline"]), entries=entries)
        except (KeyError, TypeError) as exc:
            raise ModelIntegrityError(f"malformed ablation report: {exc}") from exc


def ablate(dataset, learner, groups=None, repeats=10, folds=10, seed=0, jobs=1,
           merge_appropriateness_context=None):
    """Baseline evaluation plus one evaluation per removable factor group.

    Groups with no columns in the dataset are reported not-applicable. In
    per-audience location data (no trustworthiness columns) the
    appropriateness and context groups are removed together because the
    derived context probabilities belong to both; pass
    merge_appropriateness_context explicitly to override the auto rule.
    """
    dataset = as_cv_dataset(dataset)
    labels = np.asarray(dataset.labels)
    probe = dataset.build(np.arange(len(labels)))
    present = set(probe.groups)
    requested = tuple(groups) if groups is not None else FACTOR_GROUPS
    for g in requested:
        if g not in FACTOR_GROUPS:
            raise SchemaError(f"unknown factor group {g!r}")

    if merge_appropriateness_context is None:
        merge_appropriateness_context = (
            "trustworthiness" not in present
            and "appropriateness" in present and "context" in present)

    baseline = adapted_cv(dataset, learner, repeats, folds, seed, jobs)
    entries = []
    handled = set()
    for group in FACTOR_GROUPS:
        if group not in requested or group in handled:
            continue
        if group not in present:
            entries.append(AblationEntry(groups=(group,), status="not_applicable"))
            continue
        drop = (group,)
        if (merge_appropriateness_context and group in ("appropriateness", "context")
                and {"appropriateness", "context"} <= set(requested)):
            drop = ("appropriateness", "context")
            handled.update(drop)
        remaining = probe.drop_groups(drop)
        if remaining.n_columns == 0:
            raise PrivpredError(
                f"removing {drop} would leave no feature columns")
        result = adapted_cv(GroupDroppedDataset(dataset, drop), learner,
                            repeats, folds, seed, jobs)
        entries.append(AblationEntry(
            groups=drop, status="evaluated", result=result,
            delta_f1=result.mean_f1 - baseline.mean_f1,
            delta_auc=result.mean_auc - baseline.mean_auc))
    learner_name = getattr(learner, "name", str(learner))
    return AblationReport(learner=learner_name, seed=seed,
                          baseline=baseline, entries=entries)


# ---------------------------------------------------------------------------
# Text rendering
# ---------------------------------------------------------------------------

def render_results_table(rows):
    """Rows of (dataset name, EvalResult) as an aligned summary table."""
    lines = ["%-20s %10s %8s %8s" % ("Dataset", "#tuples", "F1", "AUC")]
    lines.append("-" * len(lines[0]))
    for name, result in rows:
        lines.append("%-20s %10s %8.3f %8.3f" %
                     (name, f"{result.balanced_size:,}",
                      result.mean_f1, result.mean_auc))
    if rows:
        result = rows[-1][1]
        lines.append(f"(learner={result.learner}, runs={result.run_count}, "
                     f"seed={result.seed})")
    return "\n".join(lines)


def render_ablation_table(name, report):
    """Baseline and removed-group metrics in the five-group layout; '-'
    marks groups the dataset does not carry."""

    def cells(metric):
        row = {}
        for g in FACTOR_GROUPS:
            entry = report.entry_for(g)
            if entry is None or entry.status == "not_applicable":
                row[g] = "-"
            else:
                row[g] = "%.3f" % (entry.result.mean_f1 if metric == "f1"
                                   else entry.result.mean_auc)
        return row

    header = "%-20s %8s" % ("Dataset", "All")
    for g in FACTOR_GROUPS:
        header += " %8s" % f"({GROUP_INDEX[g]})"
    lines = [f"removed-feature-group results ({report.learner}, "
             f"seed={report.seed})", ""]
    for metric, label in (("f1", "F1"), ("auc", "AUC")):
        lines.append(label)
        lines.append(header)
        lines.append("-" * len(header))
        base = report.baseline.mean_f1 if metric == "f1" else report.baseline.mean_auc
        row = "%-20s %8.3f" % (name, base)
        values = cells(metric)
        for g in FACTOR_GROUPS:
            row += " %8s" % values[g]
        lines.append(row)
        lines.append("")
    merged = [e for e in report.entries if len(e.groups) > 1]
    if merged:
        lines.append("note: groups "
                     + ", ".join(e.display for e in merged)
                     + " were removed together (shared derived columns).")
    missing = [e for e in report.entries if e.status == "not_applicable"]
    if missing:
        lines.append("note: groups "
                     + ", ".join(e.display for e in missing)
                     + " have no columns in this dataset (not applicable).")
    return "\n".join(lines)
