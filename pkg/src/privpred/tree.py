"""Gain-ratio decision tree with confidence-based pessimistic pruning.

Growth follows the classic C4.5 recipe: numeric attributes get binary
threshold splits at midpoints between adjacent distinct sorted values,
categorical attributes get one branch per observed value, and the split
with the best gain ratio (information gain over split information) wins.
Growth stops on purity, on the minimum-leaf floor, or when no split has
positive gain. Pruning replaces a subtree by a leaf whenever the leaf's
pessimistic error estimate (binomial upper confidence bound) does not
exceed the subtree's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import EmptyDatasetError, ModelIntegrityError, SchemaError

_EPS = 1e-12


@dataclass(frozen=True)
class TreeParams:
    confidence: float = 0.25
    min_leaf: int = 2

    def __post_init__(self):
        if not 0.0 < self.confidence < 0.5:
            raise SchemaError(f"confidence must be in (0, 0.5), got {self.confidence}")
        if self.min_leaf < 1:
            raise SchemaError(f"min_leaf must be >= 1, got {self.min_leaf}")


def _entropy(counts, totals):
    """Shannon entropy in bits for rows of class counts; zero-count safe."""
    counts = np.asarray(counts, dtype=np.float64)
    totals = np.asarray(totals, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = counts / totals[..., None]
        logs = np.zeros_like(p)
        np.log2(p, out=logs, where=p > 0)
    return -(p * logs).sum(axis=-1)


def entropy_bits(labels):
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=2).astype(np.float64)
    return float(_entropy(counts[None, :], np.array([counts.sum()]))[0])


@dataclass(frozen=True)
class SplitCandidate:
    threshold: float | None      # numeric splits
    partition: tuple | None      # categorical: observed values, one child each
    info_gain: float
    split_info: float

    @property
    def gain_ratio(self):
        if self.split_info <= _EPS:
            return 0.0
        return self.info_gain / self.split_info


def _xlogx(values):
    values = np.asarray(values, dtype=np.float64)
    logs = np.zeros_like(values)
    np.log2(values, out=logs, where=values > 0)
    return values * logs


def _numeric_split_stats(values, labels, min_leaf):
    """Vectorized gain statistics for every admissible midpoint threshold.

    Returns (thresholds, info_gain, split_info) arrays, possibly empty.
    """
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels)
    n = len(values)
    order = np.argsort(values, kind="stable")
    sv = values[order]
    sy = labels[order]

    boundary = np.nonzero(sv[:-1] != sv[1:])[0]
    boundary = boundary[(boundary >= min_leaf - 1) & (boundary <= n - min_leaf - 1)]
    if len(boundary) == 0:
        empty = np.empty(0)
        return empty, empty, empty

    cum_pos = np.cumsum(sy)
    total_pos = int(cum_pos[-1])
    left_n = boundary + 1
    left_pos = cum_pos[boundary]
    left = np.stack([left_n - left_pos, left_pos], axis=1)
    right = np.stack([(n - left_n) - (total_pos - left_pos), total_pos - left_pos], axis=1)

    h_parent = _entropy(np.array([[n - total_pos, total_pos]]), np.array([n]))[0]
    h_left = _entropy(left, left_n)
    h_right = _entropy(right, n - left_n)
    info_gain = h_parent - (left_n / n) * h_left - ((n - left_n) / n) * h_right
    split_info = _entropy(np.stack([left_n, n - left_n], axis=1),
                          np.full(len(boundary), n))
    thresholds = (sv[boundary] + sv[boundary + 1]) / 2.0
    return thresholds, info_gain, split_info


def _best_numeric_split_batch(sub, y_sub, min_leaf):
    """Best admissible threshold per column of a (rows x columns) block,
    evaluated for all columns in one sweep. Returns (gain ratio, info gain,
    threshold) arrays with NaN thresholds for columns with no admissible
    split. Ties within a column resolve to the smaller threshold."""
    n, p = sub.shape
    out_ratio = np.full(p, -np.inf)
    out_gain = np.zeros(p)
    out_threshold = np.full(p, np.nan)
    if n < 2 * min_leaf:
        return out_ratio, out_gain, out_threshold

    order = np.argsort(sub, axis=0, kind="stable")
    sv = np.take_along_axis(sub, order, axis=0)
    sy = y_sub[order]
    cum_pos = np.cumsum(sy, axis=0)
    total_pos = cum_pos[-1]

    left_n = np.arange(1, n, dtype=np.float64)[:, None]
    left_pos = cum_pos[:-1].astype(np.float64)
    left_neg = left_n - left_pos
    right_pos = total_pos[None, :] - left_pos
    right_neg = (n - left_n) - right_pos

    parent = _xlogx(n) - _xlogx(total_pos) - _xlogx(n - total_pos)
    left_term = _xlogx(left_n) - _xlogx(left_pos) - _xlogx(left_neg)
    right_term = _xlogx(n - left_n) - _xlogx(right_pos) - _xlogx(right_neg)
    info_gain = (parent[None, :] - left_term - right_term) / n
    split_info = (_xlogx(float(n)) - _xlogx(left_n) - _xlogx(n - left_n)) / n
    split_info = np.broadcast_to(split_info, info_gain.shape)

    admissible = (sv[:-1] != sv[1:])
    admissible &= (left_n >= min_leaf) & (left_n <= n - min_leaf)
    usable = admissible & (info_gain > _EPS) & (split_info > _EPS)
    if not usable.any():
        return out_ratio, out_gain, out_threshold

    ratio = np.where(usable, info_gain / np.where(usable, split_info, 1.0), -np.inf)
    # Thresholds ascend within a column, so the first argmax is the smallest.
    best_pos = np.argmax(ratio, axis=0)
    cols = np.arange(p)
    has = usable[best_pos, cols]
    out_ratio[has] = ratio[best_pos, cols][has]
    out_gain[has] = info_gain[best_pos, cols][has]
    mid = (sv[best_pos, cols] + sv[best_pos + 1, cols]) / 2.0
    out_threshold[has] = mid[has]
    return out_ratio, out_gain, out_threshold


def numeric_split_candidates(values, labels, min_leaf=1):
    """Every admissible midpoint threshold with its gain statistics."""
    thresholds, info_gain, split_info = _numeric_split_stats(values, labels, min_leaf)
    return [SplitCandidate(threshold=float(t), partition=None,
                           info_gain=float(g), split_info=float(s))
            for t, g, s in zip(thresholds, info_gain, split_info)]


def _best_numeric_split(values, labels, min_leaf):
    """Best admissible threshold by gain ratio; ties go to the smaller
    threshold. Returns a SplitCandidate or None."""
    thresholds, info_gain, split_info = _numeric_split_stats(values, labels, min_leaf)
    usable = (info_gain > _EPS) & (split_info > _EPS)
    if not usable.any():
        return None
    ratio = np.where(usable, info_gain / np.where(split_info > _EPS, split_info, 1.0),
                     -np.inf)
    best = int(np.argmax(ratio))  # thresholds ascend, argmax takes the first max
    return SplitCandidate(threshold=float(thresholds[best]), partition=None,
                          info_gain=float(info_gain[best]),
                          split_info=float(split_info[best]))


def categorical_split_candidate(values, labels, min_leaf=1):
    """The single multiway split over observed values, or None if inadmissible."""
    labels = np.asarray(labels)
    pairs = [(v, y) for v, y in zip(values, labels) if v is not None]
    n = len(pairs)
    observed = sorted({v for v, _ in pairs})
    if len(observed) < 2:
        return None
    index = {v: i for i, v in enumerate(observed)}
    counts = np.zeros((len(observed), 2), dtype=np.float64)
    for v, y in pairs:
        counts[index[v], y] += 1
    child_n = counts.sum(axis=1)
    if int((child_n >= min_leaf).sum()) < 2:
        return None
    h_parent = _entropy(counts.sum(axis=0)[None, :], np.array([n]))[0]
    h_children = _entropy(counts, child_n)
    info_gain = h_parent - float(((child_n / n) * h_children).sum())
    split_info = float(_entropy(child_n[None, :], np.array([n]))[0])
    if info_gain <= _EPS or split_info <= _EPS:
        return None
    return SplitCandidate(threshold=None, partition=tuple(observed),
                          info_gain=info_gain, split_info=split_info)


def added_errors(n, errors, confidence):
    """Extra errors granted by the binomial upper confidence bound, as used
    for pessimistic pruning (normal approximation with continuity
    correction; closed forms at the extremes)."""
    if n <= 0:
        return 0.0
    if errors < 1:
        base = n * (1 - confidence ** (1.0 / n))
        if errors == 0:
            return base
        return base + errors * (added_errors(n, 1, confidence) - base)
    if errors + 0.5 >= n:
        return max(n - errors, 0.0)
    z = norm.ppf(1 - confidence)
    f = (errors + 0.5) / n
    r = (f + z * z / (2 * n)
         + z * np.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - errors


def pessimistic_errors(dist, confidence):
    n = float(dist[0] + dist[1])
    e = n - float(max(dist))
    return e + added_errors(n, e, confidence)


class TreeModel:
    """Fitted tree stored as a flat node list (children by index), plus the
    column schema it was trained on."""

    kind = "tree"

    def __init__(self, nodes, feature_names, feature_kinds, params):
        self.nodes = nodes
        self.feature_names = list(feature_names)
        self.feature_kinds = list(feature_kinds)
        self.params = params

    # Node layout:
    #   leaf:        {"type": "leaf", "dist": [n0, n1]}
    #   numeric:     {"type": "num", "column": name, "threshold": t,
    #                 "left": i, "right": j, "majority": i_or_j, "dist": [n0, n1]}
    #   categorical: {"type": "cat", "column": name, "children": {value: i},
    #                 "majority": i, "dist": [n0, n1]}

    def _descend(self, node, value):
        if node["type"] == "num":
            if value is None or (isinstance(value, float) and np.isnan(value)):
                return node["majority"]
            return node["left"] if value <= node["threshold"] else node["right"]
        child = node["children"].get(value)
        return node["majority"] if child is None else child

    def score_row(self, row):
        """Positive-class probability for a row dict keyed by column name."""
        if set(row) != set(self.feature_names):
            raise SchemaError("row columns do not match the training schema")
        node = self.nodes[0]
        while node["type"] != "leaf":
            node = self.nodes[self._descend(node, row[node["column"]])]
        n0, n1 = node["dist"]
        total = n0 + n1
        return 0.5 if total == 0 else n1 / total

    def predict_scores(self, matrix, rows=None):
        if matrix.names != self.feature_names or matrix.kinds != self.feature_kinds:
            raise SchemaError("matrix schema does not match the training schema")
        if rows is None:
            rows = range(matrix.n_rows)
        cols = {name: matrix.column(name) for name in self.feature_names}
        scores = np.empty(len(rows), dtype=np.float64)
        for out_i, r in enumerate(rows):
            node = self.nodes[0]
            while node["type"] != "leaf":
                node = self.nodes[self._descend(node, cols[node["column"]][r])]
            n0, n1 = node["dist"]
            total = n0 + n1
            scores[out_i] = 0.5 if total == 0 else n1 / total
        return scores

    def n_leaves(self):
        return sum(1 for nd in self.nodes if nd["type"] == "leaf")

    def depth(self):
        depths = [0] * len(self.nodes)
        best = 0
        for i, nd in enumerate(self.nodes):  # parents precede children
            kids = _children_of(nd)
            if not kids:
                best = max(best, depths[i])
            for k in kids:
                depths[k] = depths[i] + 1
        return best

    def training_errors(self):
        """Misclassified training instances summed over the leaves."""
        return sum(min(nd["dist"]) for nd in self.nodes if nd["type"] == "leaf")

    def to_json(self):
        return {
            "nodes": self.nodes,
            "feature_names": self.feature_names,
            "feature_kinds": self.feature_kinds,
            "params": {"confidence": self.params.confidence,
                       "min_leaf": self.params.min_leaf},
        }

    @classmethod
    def from_json(cls, obj):
        try:
            nodes = obj["nodes"]
            for node in nodes:
                if node["type"] not in ("leaf", "num", "cat"):
                    raise ModelIntegrityError(f"unknown node type {node['type']!r}")
            return cls(nodes=nodes,
                       feature_names=obj["feature_names"],
                       feature_kinds=obj["feature_kinds"],
                       params=TreeParams(**obj["params"]))
        except (KeyError, TypeError) as exc:
            raise ModelIntegrityError(f"malformed tree payload: {exc}") from exc


def _children_of(node):
    if node["type"] == "num":
        return [node["left"], node["right"]]
    if node["type"] == "cat":
        return list(node["children"].values())
    return []


def train_decision_tree(matrix, params=None, prune=True):
    """Grow and prune a tree on a missing-filtered matrix with both classes."""
    params = params or TreeParams()
    n = matrix.n_rows
    if n == 0:
        raise EmptyDatasetError("cannot train a tree on an empty matrix")
    y = np.asarray(matrix.labels, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise SchemaError("training data contains a single class")
    for name in matrix.names:
        if matrix.missing_mask(name).any():
            raise SchemaError(f"column {name!r} still has missing cells; "
                              "apply the missing-value filter first")

    numeric_names = [nm for nm, kind in zip(matrix.names, matrix.kinds)
                     if kind == "numeric"]
    X = (np.column_stack([matrix.column(nm).astype(np.float64)
                          for nm in numeric_names])
         if numeric_names else np.empty((n, 0)))
    categorical_cols = {nm: matrix.column(nm)
                        for nm, kind in zip(matrix.names, matrix.kinds)
                        if kind == "categorical"}
    position = {nm: i for i, nm in enumerate(matrix.names)}

    def best_split(idx):
        y_sub = y[idx]
        best = None
        best_key = None
        if X.shape[1]:
            ratios, gains, thresholds = _best_numeric_split_batch(
                X[idx], y_sub, params.min_leaf)
            for j, name in enumerate(numeric_names):
                if not np.isfinite(ratios[j]):
                    continue
                key = (-ratios[j], position[name], thresholds[j])
                if best_key is None or key < best_key:
                    cand = SplitCandidate(threshold=float(thresholds[j]),
                                          partition=None,
                                          info_gain=float(gains[j]),
                                          split_info=float(gains[j] / ratios[j]))
                    best, best_key = (name, cand), key
        for name, col in categorical_cols.items():
            cand = categorical_split_candidate(col[idx], y_sub, params.min_leaf)
            if cand is None:
                continue
            key = (-cand.gain_ratio, position[name], 0.0)
            if best_key is None or key < best_key:
                best, best_key = (name, cand), key
        return best

    # Iterative depth-first growth; child node ids always exceed the parent's.
    nodes = []
    root_slot = [None]
    stack = [(np.arange(n), root_slot, 0)]
    while stack:
        idx, holder, pos = stack.pop()
        holder[pos] = len(nodes)
        dist = [int((y[idx] == 0).sum()), int((y[idx] == 1).sum())]
        if min(dist) == 0 or len(idx) < 2 * params.min_leaf:
            nodes.append({"type": "leaf", "dist": dist})
            continue
        chosen = best_split(idx)
        if chosen is None:
            nodes.append({"type": "leaf", "dist": dist})
            continue
        name, cand = chosen
        if cand.threshold is not None:
            col = X[idx, numeric_names.index(name)]
            parts = [idx[col <= cand.threshold], idx[col > cand.threshold]]
            node = {"type": "num", "column": name, "threshold": cand.threshold,
                    "left": None, "right": None, "majority": None, "dist": dist}
        else:
            col = categorical_cols[name]
            groups = {v: [] for v in cand.partition}
            for i in idx:
                groups[col[i]].append(int(i))
            parts = [np.asarray(groups[v], dtype=np.intp) for v in cand.partition]
            node = {"type": "cat", "column": name, "children": None,
                    "majority": None, "dist": dist}
        nodes.append(node)
        slots = [None] * len(parts)
        node["_slots"] = slots
        node["_sizes"] = [len(p) for p in parts]
        node["_values"] = cand.partition
        for j in range(len(parts) - 1, -1, -1):
            stack.append((parts[j], slots, j))

    for node in nodes:
        if node["type"] == "leaf":
            continue
        slots = node.pop("_slots")
        sizes = node.pop("_sizes")
        values = node.pop("_values")
        # Majority child: largest subset, earliest on ties.
        node["majority"] = slots[int(np.argmax(sizes))]
        if node["type"] == "num":
            node["left"], node["right"] = slots
        else:
            node["children"] = dict(zip(values, slots))

    if prune:
        nodes = _prune(nodes, params.confidence)
    return TreeModel(nodes=nodes, feature_names=matrix.names,
                     feature_kinds=matrix.kinds, params=params)


def _prune(nodes, confidence):
    """Bottom-up subtree replacement; keep the leaf whenever its pessimistic
    error estimate does not exceed the subtree's. Returns a compacted node
    list with unreachable descendants dropped."""
    estimate = [0.0] * len(nodes)
    for i in range(len(nodes) - 1, -1, -1):  # children precede parents this way
        node = nodes[i]
        if node["type"] == "leaf":
            estimate[i] = pessimistic_errors(node["dist"], confidence)
            continue
        subtree = sum(estimate[c] for c in _children_of(node))
        as_leaf = pessimistic_errors(node["dist"], confidence)
        if as_leaf <= subtree + 1e-9:
            nodes[i] = {"type": "leaf", "dist": node["dist"]}
            estimate[i] = as_leaf
        else:
            estimate[i] = subtree

    keep = []
    seen = [False] * len(nodes)
    pending = [0]
    seen[0] = True
    while pending:
        i = pending.pop()
        keep.append(i)
        for c in _children_of(nodes[i]):
            if not seen[c]:
                seen[c] = True
                pending.append(c)
    keep.sort()
    renumber = {old: new for new, old in enumerate(keep)}
    out = []
    for old in keep:
        node = dict(nodes[old])
        if node["type"] == "num":
            node["left"] = renumber[node["left"]]
            node["right"] = renumber[node["right"]]
            node["majority"] = renumber[node["majority"]]
        elif node["type"] == "cat":
            node["children"] = {v: renumber[c] for v, c in node["children"].items()}
            node["majority"] = renumber[node["majority"]]
        out.append(node)
    return out
