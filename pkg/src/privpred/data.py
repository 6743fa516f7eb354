"""Domain types and file ingestion for OSN graphs and location-sharing records.

Graphs travel as JSON-Lines (one user or edge object per line), location
records as CSV with empty cells marking absent context. Both loaders
validate against closed vocabularies and fail with the offending line.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import (
    EmptyDatasetError,
    ParseError,
    ReferentialIntegrityError,
    SchemaError,
    VocabularyError,
)

PLATFORMS = ("twitter", "googleplus")

# Closed per-platform profile vocabularies. Boolean-ish items are stored as
# the strings "0"/"1" so every profile value is a plain category.
TWITTER_PROFILE_ITEMS = {
    "URL": ("blank", "personal", "other"),
    "GEO": ("0", "1"),
    "Protected": ("0", "1"),
}
GOOGLEPLUS_PROFILE_ITEMS = {
    "Employer": ("0", "1"),
    "Major": ("0", "1"),
    "School": ("0", "1"),
    "Places": ("0", "1"),
}
PROFILE_ITEMS = {"twitter": TWITTER_PROFILE_ITEMS, "googleplus": GOOGLEPLUS_PROFILE_ITEMS}

# Value a profile item takes when the user never set it.
UNSET_PROFILE_VALUE = {"URL": "blank", "GEO": "0", "Protected": "0",
                       "Employer": "0", "Major": "0", "School": "0", "Places": "0"}

AUDIENCES = ("Family", "Friend", "Colleague")
AGE_BUCKETS = ("18-24", "25-34", "35-44", "45-54", "55-64")
GENDERS = ("male", "female")
MARRIAGE = ("married", "not married")
PRIVACY_LEVELS = ("very", "moderately", "slightly", "not_care")
TIMES = ("weekday_day", "weekday_night", "weekend")
COMPANIONS = ("alone", "family", "friends", "colleagues")
EMOTIONS = ("positive", "negative")

LOCATION_SEMANTICS = (
    "Airport", "Art Gallery", "Bank", "Bar", "Bus Station", "Casino",
    "Cemetery", "Church", "Company Building", "Convention Center", "Hospital",
    "Hotel", "Law Firm", "Library", "Movie Theater", "Police Station",
    "Restaurant", "Shopping Mall", "Spa", "Workplace",
)

# Which optional context fields each survey design presents (location always).
STUDY_DESIGNS = {
    1: frozenset(),
    2: frozenset({"time"}),
    3: frozenset({"companion"}),
    4: frozenset({"time", "companion"}),
    5: frozenset({"emotion"}),
}

LOCATION_CSV_HEADER = (
    "participant", "age", "gender", "marriage", "privacy_level",
    "location", "time", "companion", "emotion", "audience", "label",
)


def _normalize_profile_value(item, value):
    """Map JSON profile values (bool/int/str) onto the closed string vocabulary."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    return value


@dataclass(frozen=True)
class OsnUser:
    """One account: degree counts, profile item settings, verified flag."""

    user_id: str
    follower_count: int = 0
    following_count: int = 0
    profile: dict = field(default_factory=dict)
    verified: bool = False

    def __post_init__(self):
        if self.follower_count < 0 or self.following_count < 0:
            raise SchemaError(f"user {self.user_id!r}: negative degree count")

    def __hash__(self):
        return hash(self.user_id)

    def __eq__(self, other):
        if not isinstance(other, OsnUser):
            return NotImplemented
        return (self.user_id == other.user_id
                and self.follower_count == other.follower_count
                and self.following_count == other.following_count
                and self.profile == other.profile
                and self.verified == other.verified)


def _validate_profile(platform, user_id, profile):
    vocab = PROFILE_ITEMS[platform]
    normalized = {}
    for item, value in profile.items():
        if item not in vocab:
            raise VocabularyError(
                f"user {user_id!r}: unknown profile item {item!r} for platform {platform}")
        value = _normalize_profile_value(item, value)
        if value not in vocab[item]:
            raise VocabularyError(
                f"user {user_id!r}: profile item {item}={value!r} not in {vocab[item]}")
        normalized[item] = value
    for item in vocab:
        normalized.setdefault(item, UNSET_PROFILE_VALUE[item])
    return normalized


class OsnGraph:
    """Immutable directed follow graph with per-platform validation.

    Adjacency is canonicalized (sorted user ids) so two graphs loaded from
    the same lines in any order compare equal and serialize identically.
    """

    def __init__(self, platform, users, edges):
        """Build and validate a graph.

        users: iterable of OsnUser (degree counts are recomputed here).
        edges: iterable of (from_id, to_id) for twitter or
               (from_id, to_id, stage) for googleplus.
        """
        if platform not in PLATFORMS:
            raise VocabularyError(f"unknown platform {platform!r}")
        self.platform = platform

        raw_users = {}
        for user in users:
            if user.user_id in raw_users:
                raise SchemaError(f"duplicate user id {user.user_id!r}")
            raw_users[user.user_id] = user

        following = {uid: set() for uid in raw_users}
        followers = {uid: set() for uid in raw_users}
        stages = {}
        for edge in edges:
            if len(edge) == 3:
                src, dst, stage = edge
            else:
                src, dst = edge
                stage = None
            for endpoint in (src, dst):
                if endpoint not in raw_users:
                    raise ReferentialIntegrityError(
                        f"edge {src!r}->{dst!r} references undeclared user {endpoint!r}")
            if src == dst:
                raise SchemaError(f"self-edge on user {src!r}")
            if platform == "twitter" and stage is not None:
                raise SchemaError(
                    f"edge {src!r}->{dst!r}: stage index not allowed in twitter mode")
            if platform == "googleplus":
                if stage is None:
                    raise SchemaError(f"edge {src!r}->{dst!r}: missing stage index")
                if not isinstance(stage, int) or stage < 0:
                    raise SchemaError(
                        f"edge {src!r}->{dst!r}: stage must be a non-negative integer")
                prior = stages.get((src, dst))
                if prior is not None and prior != stage:
                    raise SchemaError(
                        f"edge {src!r}->{dst!r}: conflicting stages {prior} and {stage}")
                stages[(src, dst)] = stage
            following[src].add(dst)
            followers[dst].add(src)

        self.following = {uid: tuple(sorted(adj)) for uid, adj in following.items()}
        self.followers = {uid: tuple(sorted(adj)) for uid, adj in followers.items()}
        self.stages = stages if platform == "googleplus" else None
        self.users = {
            uid: replace(user,
                         follower_count=len(self.followers[uid]),
                         following_count=len(self.following[uid]),
                         profile=_validate_profile(platform, uid, user.profile))
            for uid, user in raw_users.items()
        }

    def followings(self, user_id):
        return self.following[user_id]

    def followers_of(self, user_id):
        return self.followers[user_id]

    def edges(self):
        """All directed edges, sorted, with stage in googleplus mode."""
        for src in sorted(self.following):
            for dst in self.following[src]:
                if self.platform == "googleplus":
                    yield src, dst, self.stages[(src, dst)]
                else:
                    yield src, dst

    def n_users(self):
        return len(self.users)

    def n_edges(self):
        return sum(len(adj) for adj in self.following.values())

    def __eq__(self, other):
        if not isinstance(other, OsnGraph):
            return NotImplemented
        return (self.platform == other.platform
                and self.users == other.users
                and self.following == other.following
                and self.stages == other.stages)

    def __repr__(self):
        return (f"OsnGraph(platform={self.platform!r}, users={self.n_users()}, "
                f"edges={self.n_edges()})")


@dataclass(frozen=True)
class RequestRecord:
    """One friend-request decision: requester, receiver, accept/reject label.

    spurious_risk marks records whose request direction is not observable
    (both directions of a twitter mutual pair, or a googleplus same-stage tie).
    """

    requester_id: str
    receiver_id: str
    label: int
    spurious_risk: bool = False

    def __post_init__(self):
        if self.requester_id == self.receiver_id:
            raise SchemaError(f"request from {self.requester_id!r} to itself")
        if self.label not in (0, 1):
            raise SchemaError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class LocationRecord:
    """One survey answer: would this participant share this location with
    this audience, under the context their study design presented."""

    participant_id: str
    age_bucket: str
    gender: str
    marriage: str
    privacy_level: str
    location_semantic: str
    audience: str
    label: int
    time: str | None = None
    companion: str | None = None
    emotion: str | None = None

    def __post_init__(self):
        checks = (
            ("age", self.age_bucket, AGE_BUCKETS),
            ("gender", self.gender, GENDERS),
            ("marriage", self.marriage, MARRIAGE),
            ("privacy_level", self.privacy_level, PRIVACY_LEVELS),
            ("audience", self.audience, AUDIENCES),
        )
        for name, value, vocab in checks:
            if value not in vocab:
                raise VocabularyError(f"{name}={value!r} not in {vocab}")
        if self.location_semantic not in LOCATION_SEMANTICS:
            raise VocabularyError(f"unknown location semantic {self.location_semantic!r}")
        optional = (("time", self.time, TIMES),
                    ("companion", self.companion, COMPANIONS),
                    ("emotion", self.emotion, EMOTIONS))
        for name, value, vocab in optional:
            if value is not None and value not in vocab:
                raise VocabularyError(f"{name}={value!r} not in {vocab}")
        if self.label not in (0, 1):
            raise SchemaError(f"label must be 0 or 1, got {self.label!r}")
        self.study_design()  # raises SchemaError if the context pattern is unknown

    def study_design(self):
        """Return the survey design number implied by the present context fields."""
        present = frozenset(
            name for name, value in
            (("time", self.time), ("companion", self.companion), ("emotion", self.emotion))
            if value is not None)
        for design, fields_ in STUDY_DESIGNS.items():
            if present == fields_:
                return design
        raise SchemaError(
            f"context fields {sorted(present)} match no survey design")


# ---------------------------------------------------------------------------
# JSONL graph ingestion / serialization
# ---------------------------------------------------------------------------

def load_osn_graph(path, platform):
    """Load and validate a JSONL graph file for the given platform."""
    users = []
    edges = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", path=path, line=lineno) from exc
            if not isinstance(obj, dict) or "kind" not in obj:
                raise ParseError("expected an object with a 'kind' field",
                                 path=path, line=lineno)
            kind = obj["kind"]
            try:
                if kind == "user":
                    users.append(_user_from_json(obj))
                elif kind == "edge":
                    edges.append(_edge_from_json(obj, platform))
                else:
                    raise SchemaError(f"unknown line kind {kind!r}")
            except (SchemaError, VocabularyError) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc
    return OsnGraph(platform, users, edges)


_USER_KEYS = {"kind", "id", "profile", "verified"}
_EDGE_KEYS = {"kind", "from", "to", "stage"}


def _user_from_json(obj):
    unknown = set(obj) - _USER_KEYS
    if unknown:
        raise SchemaError(f"unknown user fields {sorted(unknown)}")
    if "id" not in obj:
        raise SchemaError("user line missing 'id'")
    profile = obj.get("profile", {})
    if not isinstance(profile, dict):
        raise SchemaError("'profile' must be an object")
    return OsnUser(user_id=str(obj["id"]), profile=profile,
                   verified=bool(obj.get("verified", False)))


def _edge_from_json(obj, platform):
    unknown = set(obj) - _EDGE_KEYS
    if unknown:
        raise SchemaError(f"unknown edge fields {sorted(unknown)}")
    if "from" not in obj or "to" not in obj:
        raise SchemaError("edge line missing 'from'/'to'")
    src, dst = str(obj["from"]), str(obj["to"])
    if "stage" in obj:
        if platform == "twitter":
            raise SchemaError("stage index not allowed in twitter mode")
        return (src, dst, obj["stage"])
    return (src, dst)


def save_osn_graph(graph, path):
    """Write a graph back to JSONL (users sorted by id, then sorted edges)."""
    from .fileio import atomic_writer

    with atomic_writer(path) as handle:
        for uid in sorted(graph.users):
            user = graph.users[uid]
            handle.write(json.dumps(
                {"kind": "user", "id": uid, "profile": user.profile,
                 "verified": user.verified}, sort_keys=False) + "\n")
        for edge in graph.edges():
            if graph.platform == "googleplus":
                src, dst, stage = edge
                obj = {"kind": "edge", "from": src, "to": dst, "stage": stage}
            else:
                src, dst = edge
                obj = {"kind": "edge", "from": src, "to": dst}
            handle.write(json.dumps(obj, sort_keys=False) + "\n")


# ---------------------------------------------------------------------------
# Location CSV ingestion / serialization
# ---------------------------------------------------------------------------

def load_location_records(path):
    """Load survey records from CSV; empty cells mean the field was not asked."""
    import csv

    records = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            return []
        if tuple(header) != LOCATION_CSV_HEADER:
            raise ParseError(
                f"expected header {','.join(LOCATION_CSV_HEADER)}, got {','.join(header)}",
                path=path, line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(LOCATION_CSV_HEADER):
                raise ParseError(
                    f"expected {len(LOCATION_CSV_HEADER)} fields, got {len(row)}",
                    path=path, line=lineno)
            cells = dict(zip(LOCATION_CSV_HEADER, row))
            try:
                label = int(cells["label"])
            except ValueError:
                raise ParseError(f"label {cells['label']!r} is not an integer",
                                 path=path, line=lineno) from None
            try:
                records.append(LocationRecord(
                    participant_id=cells["participant"],
                    age_bucket=cells["age"],
                    gender=cells["gender"],
                    marriage=cells["marriage"],
                    privacy_level=cells["privacy_level"],
                    location_semantic=cells["location"],
                    time=cells["time"] or None,
                    companion=cells["companion"] or None,
                    emotion=cells["emotion"] or None,
                    audience=cells["audience"],
                    label=label,
                ))
            except (SchemaError, VocabularyError) as exc:
                raise type(exc)(f"{path}:{lineno}: {exc}") from exc
    return records


def save_location_records(records, path):
    import csv

    from .fileio import atomic_writer

    with atomic_writer(path, newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOCATION_CSV_HEADER)
        for rec in records:
            writer.writerow([
                rec.participant_id, rec.age_bucket, rec.gender, rec.marriage,
                rec.privacy_level, rec.location_semantic, rec.time or "",
                rec.companion or "", rec.emotion or "", rec.audience, rec.label,
            ])


# ---------------------------------------------------------------------------
# Dataset statistics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupStats:
    name: str
    positives: int
    negatives: int

    @property
    def total(self):
        return self.positives + self.negatives


@dataclass(frozen=True)
class StatsReport:
    kind: str                 # "requests" or "location"
    positive_label: str       # e.g. "accepted" / "shared"
    negative_label: str
    groups: tuple

    @property
    def total(self):
        return sum(g.total for g in self.groups)

    def render(self):
        lines = ["dataset            %-12s %-12s %-12s" %
                 (f"#{self.positive_label}", f"#{self.negative_label}", "#total")]
        lines.append("-" * len(lines[0]))
        for grp in self.groups:
            lines.append("%-18s %-12s %-12s %-12s" %
                         (grp.name, f"{grp.positives:,}", f"{grp.negatives:,}",
                          f"{grp.total:,}"))
        return "\n".join(lines)


def dataset_stats(records):
    """Count labels per group: one group for request records, one per audience
    for location records."""
    records = list(records)
    if not records:
        raise EmptyDatasetError("dataset_stats needs at least one record")
    first = records[0]
    if isinstance(first, RequestRecord):
        if not all(isinstance(r, RequestRecord) for r in records):
            raise SchemaError("mixed record types")
        pos = sum(r.label for r in records)
        return StatsReport(
            kind="requests", positive_label="accepted", negative_label="rejected",
            groups=(GroupStats("requests", pos, len(records) - pos),))
    if isinstance(first, LocationRecord):
        if not all(isinstance(r, LocationRecord) for r in records):
            raise SchemaError("mixed record types")
        groups = []
        for audience in AUDIENCES:
            subset = [r for r in records if r.audience == audience]
            if subset:
                pos = sum(r.label for r in subset)
                groups.append(GroupStats(audience, pos, len(subset) - pos))
        return StatsReport(kind="location", positive_label="shared",
                           negative_label="not_shared", groups=tuple(groups))
    raise SchemaError(f"cannot compute stats for {type(first).__name__}")
