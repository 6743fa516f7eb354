"""Sharing-probability features for location survey records.

Every feature is a Laplace-smoothed share rate ((shared+1)/(total+2))
estimated from a designated training partition only, so cross-validation
folds never leak test labels into the features of any row.
"""

from __future__ import annotations

from dataclasses import dataclass

from .data import (
    AGE_BUCKETS,
    AUDIENCES,
    COMPANIONS,
    EMOTIONS,
    GENDERS,
    LOCATION_SEMANTICS,
    MARRIAGE,
    PRIVACY_LEVELS,
    TIMES,
)
from .errors import EmptyDatasetError, SchemaError, VocabularyError
from .matrix import FeatureMatrix

# Attribute name -> (record field, vocabulary)
_ATTRIBUTES = {
    "age": ("age_bucket", AGE_BUCKETS),
    "gender": ("gender", GENDERS),
    "marriage": ("marriage", MARRIAGE),
    "privacy_level": ("privacy_level", PRIVACY_LEVELS),
    "location": ("location_semantic", LOCATION_SEMANTICS),
    "audience": ("audience", AUDIENCES),
    "time": ("time", TIMES),
    "companion": ("companion", COMPANIONS),
    "emotion": ("emotion", EMOTIONS),
}

DEMOGRAPHIC_ATTRIBUTES = ("age", "gender", "marriage", "privacy_level")
CONDITIONERS = ("location", "audience")
CONDITIONAL_ATTRIBUTES = ("companion", "emotion", "time", "location", "audience")

# The conditional share-rate features attached to each record, as
# (conditioner, attribute) pairs. "None" attribute means the plain
# conditioner-only rate.
CONDITIONAL_FEATURES = (
    ("location", "companion"),
    ("location", "emotion"),
    ("location", "time"),
    ("audience", "companion"),
    ("audience", "emotion"),
    ("audience", "time"),
    ("location", "audience"),
    ("audience", "location"),
)


def _attr_value(record, attribute):
    field, _ = _ATTRIBUTES[attribute]
    return getattr(record, field)


def _check_value(attribute, value):
    _, vocab = _ATTRIBUTES[attribute]
    if value not in vocab:
        raise VocabularyError(f"{attribute}={value!r} not in {vocab}")


def smoothed_rate(shared, total):
    """Add-one smoothed share probability; 0.5 on zero support."""
    return (shared + 1) / (total + 2)


@dataclass(frozen=True)
class ProbabilityTable:
    """Smoothed share rates keyed by (conditioner value, attribute value).

    conditioner is None, "location" or "audience"; attribute is None for the
    conditioner-only rate. The placeholder "·" stands for an absent key.
    Built exclusively from the training records handed to build_probability_table.
    """

    conditioner: str | None
    attribute: str | None
    support: dict   # (a_value, q_value) -> (shared, total)

    def rate(self, a_value=None, q_value=None):
        if self.conditioner is None:
            a_value = "·"
        else:
            _check_value(self.conditioner, a_value)
        if self.attribute is None:
            q_value = "·"
        elif q_value is not None:
            _check_value(self.attribute, q_value)
        shared, total = self.support.get((a_value, q_value), (0, 0))
        return smoothed_rate(shared, total)

    def probabilities(self):
        return {key: smoothed_rate(s, t) for key, (s, t) in self.support.items()}


def build_probability_table(train_records, conditioner=None, attribute=None):
    """Tally (shared, total) per (conditioner value, attribute value) pair
    over the training records; rows missing either field are skipped."""
    if conditioner is not None and conditioner not in CONDITIONERS:
        raise VocabularyError(f"conditioner must be one of {CONDITIONERS}, got {conditioner!r}")
    if attribute is not None and attribute not in _ATTRIBUTES:
        raise VocabularyError(f"unknown attribute {attribute!r}")
    if conditioner is not None and attribute == conditioner:
        raise SchemaError("attribute must differ from the conditioner")
    support = {}
    for rec in train_records:
        a_value = _attr_value(rec, conditioner) if conditioner else "·"
        q_value = _attr_value(rec, attribute) if attribute else "·"
        if a_value is None or q_value is None:
            continue
        shared, total = support.get((a_value, q_value), (0, 0))
        support[(a_value, q_value)] = (shared + rec.label, total + 1)
    return ProbabilityTable(conditioner=conditioner, attribute=attribute, support=support)


def overall_sharing_probability(train_records, attribute, value):
    """Smoothed share rate of training records whose demographic attribute
    equals the given value."""
    if attribute not in DEMOGRAPHIC_ATTRIBUTES:
        raise VocabularyError(
            f"attribute must be one of {DEMOGRAPHIC_ATTRIBUTES}, got {attribute!r}")
    _check_value(attribute, value)
    return build_probability_table(train_records, None, attribute).rate(q_value=value)


def conditional_sharing_probability(train_records, conditioner, a_value, attribute, value):
    """Smoothed share rate among training records matching both the
    conditioning context and the attribute value."""
    if attribute not in CONDITIONAL_ATTRIBUTES:
        raise VocabularyError(
            f"attribute must be one of {CONDITIONAL_ATTRIBUTES}, got {attribute!r}")
    table = build_probability_table(train_records, conditioner, attribute)
    return table.rate(a_value=a_value, q_value=value)


def audience_trustworthiness(train_records, audience):
    """Smoothed share rate across all training records with this audience."""
    _check_value("audience", audience)
    return build_probability_table(train_records, "audience", None).rate(a_value=audience)


def location_sensitivity(train_records, location):
    """Smoothed share rate at a location; higher means more freely shared."""
    _check_value("location", location)
    return build_probability_table(train_records, "location", None).rate(a_value=location)


def build_location_features(records, audience, train_indices=None):
    """Per-audience feature matrix: demographic share rates (tendency), the
    location share rate (sensitivity), eight conditional share rates
    (appropriateness) and the raw context categories (context).

    All probability tables come from records[train_indices] only; feature
    rows are emitted for every record. Context cells a record's study
    design never asked about stay missing.
    """
    records = list(records)
    for rec in records:
        if rec.audience != audience:
            raise SchemaError(
                f"record for audience {rec.audience!r} in a {audience!r} matrix")
    if train_indices is None:
        train_indices = range(len(records))
    train = [records[i] for i in train_indices]
    if not train:
        raise EmptyDatasetError("training partition is empty")

    demo_tables = {q: build_probability_table(train, None, q)
                   for q in DEMOGRAPHIC_ATTRIBUTES}
    cond_tables = {(a, q): build_probability_table(train, a, q)
                   for a, q in CONDITIONAL_FEATURES}
    loc_table = build_probability_table(train, "location", None)

    names, kinds, groups = [], [], []
    for q in DEMOGRAPHIC_ATTRIBUTES:
        names.append(f"p_{q}")
        kinds.append("numeric")
        groups.append("tendency")
    names.append("location_sensitivity")
    kinds.append("numeric")
    groups.append("sensitivity")
    for a, q in CONDITIONAL_FEATURES:
        names.append(f"p_{'loc' if a == 'location' else 'aud'}_{q}")
        kinds.append("numeric")
        groups.append("appropriateness")
    for ctx in ("location", "time", "companion", "emotion"):
        names.append(ctx)
        kinds.append("categorical")
        groups.append("context")

    columns = [[] for _ in names]
    labels = []
    row_ids = []
    for i, rec in enumerate(records):
        row = [demo_tables[q].rate(q_value=_attr_value(rec, q))
               for q in DEMOGRAPHIC_ATTRIBUTES]
        row.append(loc_table.rate(a_value=rec.location_semantic))
        for a, q in CONDITIONAL_FEATURES:
            a_value = _attr_value(rec, a)
            q_value = _attr_value(rec, q)
            if q_value is None:
                row.append(None)
            else:
                row.append(cond_tables[(a, q)].rate(a_value=a_value, q_value=q_value))
        row += [rec.location_semantic, rec.time, rec.companion, rec.emotion]
        for col, value in zip(columns, row):
            col.append(value)
        labels.append(rec.label)
        row_ids.append(f"{rec.participant_id}:{i}")
    return FeatureMatrix(names, kinds, groups, columns, labels, row_ids)
