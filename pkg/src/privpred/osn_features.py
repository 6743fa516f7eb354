"""Disclosure labels and behavioral-analog features from a follow graph.

A friend request on unilateral-follow platforms is accepted when the
receiver follows back. Four feature families stand in for the psychological
antecedents of that decision: the receiver's follow tendency, the
requester's reputation (trustworthiness), how uncommon the receiver's
profile settings are (sensitivity), and the overlap between the two
users' networks (appropriateness).
"""

from __future__ import annotations

from dataclasses import dataclass

from .data import PROFILE_ITEMS, RequestRecord
from .errors import SchemaError, VocabularyError
from .matrix import FeatureMatrix

OVERLAP_COLUMNS = ("jaccard_following", "jaccard_follower",
                   "com_following_u", "com_follower_u",
                   "com_following_v", "com_follower_v")


def follow_tendency(following_count, follower_count):
    """Share of a user's ties that they initiated; 0.5 when the user has none."""
    total = follower_count + following_count
    if total == 0:
        return 0.5
    return following_count / total


def trustworthiness(following_count, follower_count):
    """Share of a user's ties that point at them (follower/(follower+following)),
    computed as the complement of follow_tendency so the two always sum to
    exactly 1."""
    return 1.0 - follow_tendency(following_count, follower_count)


def derive_labels(graph):
    """Turn a follow graph into accept/reject request records.

    twitter: one record per directed edge among non-verified users; label 1
    iff the edge is reciprocated. Both directions of a mutual pair are kept
    and flagged spurious_risk because the true request direction is unknown.

    googleplus: stage indices order the requests, so a mutual pair yields a
    single record for the earlier edge (the later edge is the acceptance).
    A same-stage mutual pair is labeled 1 but flagged spurious_risk, with
    the lexicographically smaller id as requester.
    """
    records = []
    if graph.platform == "twitter":
        for src in sorted(graph.following):
            if graph.users[src].verified:
                continue
            src_followers = set(graph.followers[src])
            for dst in graph.following[src]:
                if graph.users[dst].verified:
                    continue
                mutual = dst in src_followers
                records.append(RequestRecord(src, dst, label=int(mutual),
                                             spurious_risk=mutual))
        return records

    stages = graph.stages
    for src in sorted(graph.following):
        for dst in graph.following[src]:
            stage = stages.get((src, dst))
            if stage is None:
                raise SchemaError(f"edge {src!r}->{dst!r} has no stage index")
            back = stages.get((dst, src))
            if back is None:
                records.append(RequestRecord(src, dst, label=0))
            elif stage < back:
                records.append(RequestRecord(src, dst, label=1))
            elif stage == back and src < dst:
                # Order within a stage is unknown; keep one record, flag it.
                records.append(RequestRecord(src, dst, label=1, spurious_risk=True))
    return records


@dataclass(frozen=True)
class SensitivityTable:
    """Per profile item, the population frequency of each observed setting.

    Stored probabilities are raw frequencies over the graph's users (they
    sum to 1 per item). In-vocabulary values never observed score with an
    add-one floor probability 1/(n_users + 1) so scores stay finite and
    rarer values always score strictly higher.
    """

    platform: str
    n_users: int
    frequencies: dict  # item -> {value: probability}

    def probability(self, item, value):
        vocab = PROFILE_ITEMS[self.platform]
        if item not in vocab:
            raise VocabularyError(f"unknown profile item {item!r}")
        if value not in vocab[item]:
            raise VocabularyError(f"value {value!r} not in vocabulary for {item}")
        freq = self.frequencies[item].get(value)
        if freq is None:
            return 1.0 / (self.n_users + 1)
        return freq


def build_sensitivity_table(graph):
    """Tabulate profile-setting frequencies over the graph's full population."""
    vocab = PROFILE_ITEMS[graph.platform]
    n = len(graph.users)
    if n == 0:
        raise SchemaError("cannot build a sensitivity table for an empty graph")
    frequencies = {}
    for item in vocab:
        counts = {}
        for user in graph.users.values():
            value = user.profile[item]
            counts[value] = counts.get(value, 0) + 1
        frequencies[item] = {v: c / n for v, c in counts.items()}
    return SensitivityTable(platform=graph.platform, n_users=n, frequencies=frequencies)


def profile_sensitivity(table, item, value):
    """Inverse commonness of a profile setting: 1/p, at least 1."""
    return 1.0 / table.probability(item, value)


@dataclass(frozen=True)
class OverlapFeatures:
    jaccard_following: float
    jaccard_follower: float
    com_following_u: float
    com_follower_u: float
    com_following_v: float
    com_follower_v: float

    def as_tuple(self):
        return (self.jaccard_following, self.jaccard_follower,
                self.com_following_u, self.com_follower_u,
                self.com_following_v, self.com_follower_v)


def _ratio(num, den):
    return num / den if den else 0.0


def overlap_features(graph, u, v):
    """Six network-overlap ratios between users u and v; empty denominators
    give 0 (no overlap evidence)."""
    if u == v:
        raise SchemaError(f"overlap features need two distinct users, got {u!r} twice")
    fu, fv = set(graph.following[u]), set(graph.following[v])
    ru, rv = set(graph.followers[u]), set(graph.followers[v])
    common_following = len(fu & fv)
    common_follower = len(ru & rv)
    return OverlapFeatures(
        jaccard_following=_ratio(common_following, len(fu | fv)),
        jaccard_follower=_ratio(common_follower, len(ru | rv)),
        com_following_u=_ratio(common_following, len(fu)),
        com_follower_u=_ratio(common_follower, len(ru)),
        com_following_v=_ratio(common_following, len(fv)),
        com_follower_v=_ratio(common_follower, len(rv)),
    )


def build_osn_features(graph, records=None):
    """Feature matrix for request records: requester trustworthiness,
    receiver follow tendency, receiver profile sensitivities, six overlaps.

    The sensitivity table is a label-free population statistic and the
    other features are pure graph functions, so the matrix does not depend
    on any train/test split.
    """
    if records is None:
        records = derive_labels(graph)
    table = build_sensitivity_table(graph)
    items = list(PROFILE_ITEMS[graph.platform])

    names = ["trustworthiness_requester", "follow_tendency_receiver"]
    groups = ["trustworthiness", "tendency"]
    names += [f"sensitivity_{item}" for item in items]
    groups += ["sensitivity"] * len(items)
    names += list(OVERLAP_COLUMNS)
    groups += ["appropriateness"] * len(OVERLAP_COLUMNS)
    kinds = ["numeric"] * len(names)

    columns = [[] for _ in names]
    labels = []
    row_ids = []
    for rec in records:
        requester = graph.users[rec.requester_id]
        receiver = graph.users[rec.receiver_id]
        row = [
            trustworthiness(requester.following_count, requester.follower_count),
            follow_tendency(receiver.following_count, receiver.follower_count),
        ]
        row += [profile_sensitivity(table, item, receiver.profile[item]) for item in items]
        row += list(overlap_features(graph, rec.requester_id, rec.receiver_id).as_tuple())
        for col, value in zip(columns, row):
            col.append(value)
        labels.append(rec.label)
        row_ids.append(f"{rec.requester_id}->{rec.receiver_id}")
    return FeatureMatrix(names, kinds, groups, columns, labels, row_ids)
