"""Seeded synthetic datasets with planted disclosure rules.

The generators emit exactly the ingestion formats (JSONL graphs, survey
CSV) plus a ground-truth sidecar holding the planted coefficients and each
record's true acceptance probability, so the feature/model pipeline can be
tested for recovery power. Labels are decided by a loglinear rule over the
*true* analog values, then flipped with the configured noise rate; pipeline
estimation error therefore shows up separately from label noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .data import (
    AGE_BUCKETS,
    AUDIENCES,
    COMPANIONS,
    EMOTIONS,
    GENDERS,
    LOCATION_SEMANTICS,
    MARRIAGE,
    PRIVACY_LEVELS,
    PROFILE_ITEMS,
    STUDY_DESIGNS,
    TIMES,
    LocationRecord,
    OsnGraph,
    OsnUser,
)
from .errors import PrivpredError, SchemaError
from .fileio import atomic_write_text
from .loglinear import FACTORS

# Survey marginals (age, gender, marriage as reported for the participant
# pool; privacy concern levels very/moderately/slightly/not_care).
AGE_MARGINALS = (0.2142, 0.4523, 0.2023, 0.0595, 0.0714)
GENDER_MARGINALS = (0.5714, 0.4285)
MARRIAGE_MARGINALS = (0.4047, 0.5952)
PRIVACY_MARGINALS = (0.39, 0.41, 0.15, 0.05)

# Participants per survey design in the reference study.
DEFAULT_STUDY_MIX = {1: 84, 2: 133, 3: 244, 4: 510, 5: 117}
SCENARIOS_PER_PARTICIPANT = 10

DEFAULT_PROFILE_MARGINALS = {
    "twitter": {
        "URL": {"blank": 0.55, "personal": 0.25, "other": 0.20},
        "GEO": {"0": 0.70, "1": 0.30},
        "Protected": {"0": 0.85, "1": 0.15},
    },
    "googleplus": {
        "Employer": {"0": 0.60, "1": 0.40},
        "Major": {"0": 0.70, "1": 0.30},
        "School": {"0": 0.65, "1": 0.35},
        "Places": {"0": 0.80, "1": 0.20},
    },
}


@dataclass(frozen=True)
class PlantedRule:
    """Loglinear ground truth over the four analog factors, in the order
    (tendency, sensitivity, trustworthiness, appropriateness)."""

    alpha: float
    betas: tuple
    noise: float = 0.0
    obfuscate_direction: bool = False

    def __post_init__(self):
        if len(self.betas) != len(FACTORS):
            raise SchemaError(f"need {len(FACTORS)} coefficients, got {len(self.betas)}")
        values = (self.alpha, *self.betas)
        if not all(np.isfinite(v) for v in values):
            raise SchemaError("rule coefficients must be finite")
        if not 0.0 <= self.noise < 0.5:
            raise SchemaError(f"noise rate must be in [0, 0.5), got {self.noise}")

    def probabilities(self, factor_matrix):
        z = self.alpha + np.asarray(factor_matrix) @ np.asarray(self.betas)
        return expit(z)

    def to_json(self):
        return {"alpha": self.alpha,
                "betas": dict(zip(FACTORS, map(float, self.betas))),
                "noise": self.noise,
                "obfuscate_direction": self.obfuscate_direction}


def separated_osn_rule(noise=0.1, obfuscate_direction=False):
    """Strong, well-separated coefficients for recovery experiments."""
    return PlantedRule(alpha=-0.4, betas=(2.0, -1.5, 2.5, 2.5), noise=noise,
                       obfuscate_direction=obfuscate_direction)


def separated_location_rule(noise=0.1):
    return PlantedRule(alpha=0.6, betas=(1.5, -2.0, 1.2, 2.0), noise=noise)


@dataclass
class GroundTruth:
    """Sidecar payload: planted coefficients and per-record true probability."""

    rule: PlantedRule
    kind: str                       # "osn" or "location"
    mode: str | None = None         # platform for osn
    records: list = field(default_factory=list)

    def to_json(self):
        return {"format_version": 1, "kind": self.kind, "mode": self.mode,
                "rule": self.rule.to_json(), "records": self.records}

    def save(self, path):
        atomic_write_text(path, json.dumps(self.to_json(), indent=2) + "\n")


def _zscore_columns(matrix):
    matrix = np.asarray(matrix, dtype=np.float64)
    mean = matrix.mean(axis=0)
    std = matrix.std(axis=0)
    std[std == 0] = 1.0
    return (matrix - mean) / std


# ---------------------------------------------------------------------------
# OSN graphs
# ---------------------------------------------------------------------------

@dataclass
class SyntheticOsn:
    graph: OsnGraph
    truth: GroundTruth


def _request_graph(n_users, mean_degree, rng):
    """Directed preferential-attachment requests; each new node sends its
    requests to earlier nodes with probability proportional to in-degree+1,
    so no two requests ever oppose each other."""
    core = min(3, n_users)
    edges = []
    pool = list(range(core))
    for i in range(core):
        j = (i + 1) % core
        if i != j:
            edges.append((i, j))
            pool.append(j)
    for t in range(core, n_users):
        k = min(max(1, int(rng.poisson(mean_degree))), t)
        targets = set()
        guard = 0
        while len(targets) < k and guard < 50 * (k + 1):
            guard += 1
            candidate = pool[int(rng.integers(0, len(pool)))]
            if candidate != t and candidate not in targets:
                targets.add(candidate)
        for v in sorted(targets):
            edges.append((t, v))
            pool.append(v)
        pool.append(t)
    return edges


def _overlap_ratios(following, followers, u, v):
    fu, fv = following[u], following[v]
    ru, rv = followers[u], followers[v]
    cf = len(fu & fv)
    cr = len(ru & rv)

    def ratio(num, den):
        return num / den if den else 0.0

    return (ratio(cf, len(fu | fv)), ratio(cr, len(ru | rv)),
            ratio(cf, len(fu)), ratio(cr, len(ru)),
            ratio(cf, len(fv)), ratio(cr, len(rv)))


def generate_osn_graph(n_users, mean_degree, rule, mode, seed,
                       profile_marginals=None, verified_fraction=0.0):
    """Synthesize a follow graph whose reciprocation decisions follow the
    planted rule evaluated on the request graph's true analog values."""
    if n_users < 10:
        raise PrivpredError(f"need at least 10 users, got {n_users}")
    if mean_degree <= 0:
        raise PrivpredError(f"mean_degree must be positive, got {mean_degree}")
    if mode not in PROFILE_ITEMS:
        raise PrivpredError(f"mode must be one of {tuple(PROFILE_ITEMS)}, got {mode!r}")
    if not 0.0 <= verified_fraction <= 1.0:
        raise PrivpredError("verified_fraction must be in [0, 1]")
    marginals = profile_marginals or DEFAULT_PROFILE_MARGINALS[mode]

    rng = np.random.default_rng(seed)
    requests = _request_graph(n_users, mean_degree, rng)

    width = len(str(n_users - 1))
    ids = [f"u{i:0{width}d}" for i in range(n_users)]

    profiles = []
    items = list(PROFILE_ITEMS[mode])
    for item in items:
        if item not in marginals:
            raise PrivpredError(f"profile marginals missing item {item!r}")
    for _ in range(n_users):
        profile = {}
        for item in items:
            values = list(marginals[item])
            probs = np.array([marginals[item][v] for v in values], dtype=np.float64)
            probs = probs / probs.sum()
            profile[item] = values[int(rng.choice(len(values), p=probs))]
        profiles.append(profile)

    following = {i: set() for i in range(n_users)}
    followers = {i: set() for i in range(n_users)}
    for u, v in requests:
        following[u].add(v)
        followers[v].add(u)

    verified = [False] * n_users
    if mode == "twitter" and verified_fraction > 0:
        n_verified = int(np.ceil(verified_fraction * n_users))
        by_indegree = sorted(range(n_users),
                             key=lambda i: (-len(followers[i]), i))[:n_verified]
        for i in by_indegree:
            verified[i] = True

    # True analog factors per request, standardized across requests.
    log_marginals = {item: {v: -np.log(p) for v, p in marginals[item].items()}
                     for item in items}
    factors = np.empty((len(requests), len(FACTORS)), dtype=np.float64)
    for e, (u, v) in enumerate(requests):
        in_u, out_u = len(followers[u]), len(following[u])
        in_v, out_v = len(followers[v]), len(following[v])
        trust = in_u / (in_u + out_u) if in_u + out_u else 0.5
        tendency = out_v / (in_v + out_v) if in_v + out_v else 0.5
        sens = float(np.mean([log_marginals[item][profiles[v][item]] for item in items]))
        appr = float(np.mean(_overlap_ratios(following, followers, u, v)))
        factors[e] = (tendency, sens, trust, appr)
    factors = _zscore_columns(factors)

    true_p = rule.probabilities(factors)
    accepted = rng.random(len(requests)) < true_p
    if rule.noise > 0:
        accepted = accepted ^ (rng.random(len(requests)) < rule.noise)

    edges = []
    reciprocal_stage = 0 if rule.obfuscate_direction else 1
    for (u, v), ok in zip(requests, accepted):
        if mode == "googleplus":
            edges.append((ids[u], ids[v], 0))
            if ok:
                edges.append((ids[v], ids[u], reciprocal_stage))
        else:
            edges.append((ids[u], ids[v]))
            if ok:
                edges.append((ids[v], ids[u]))

    users = [OsnUser(user_id=ids[i], profile=profiles[i], verified=verified[i])
             for i in range(n_users)]
    graph = OsnGraph(mode, users, edges)

    truth = GroundTruth(
        rule=rule, kind="osn", mode=mode,
        records=[{"requester": ids[u], "receiver": ids[v],
                  "true_probability": float(p), "planted_label": int(ok)}
                 for (u, v), p, ok in zip(requests, true_p, accepted)])
    return SyntheticOsn(graph=graph, truth=truth)


# ---------------------------------------------------------------------------
# Location surveys
# ---------------------------------------------------------------------------

@dataclass
class SyntheticSurvey:
    records: list
    truth: GroundTruth


def _grid(vocab):
    """Evenly spaced scores in [-1, 1] by vocabulary position."""
    m = len(vocab)
    if m == 1:
        return {vocab[0]: 0.0}
    return {v: -1.0 + 2.0 * i / (m - 1) for i, v in enumerate(vocab)}

_AGE_SCORE = _grid(AGE_BUCKETS)
_GENDER_SCORE = _grid(GENDERS)
_MARRIAGE_SCORE = _grid(MARRIAGE)
# More privacy concern means less sharing tendency.
_PRIVACY_SCORE = {"very": -1.0, "moderately": -1 / 3, "slightly": 1 / 3, "not_care": 1.0}
_LOCATION_SCORE = _grid(LOCATION_SEMANTICS)
_AUDIENCE_SCORE = {"Family": 1.0, "Friend": 0.0, "Colleague": -1.0}


def _pair_score(i, j):
    """Deterministic pseudo-random interaction score in [-1, 1]."""
    h = (i * 2654435761 + (j + 1) * 40503) % 1000
    return h / 999.0 * 2.0 - 1.0


def _appropriateness(loc, time, companion, emotion):
    li = LOCATION_SEMANTICS.index(loc)
    parts = []
    if time is not None:
        parts.append(_pair_score(li, TIMES.index(time)))
    if companion is not None:
        parts.append(_pair_score(li, 100 + COMPANIONS.index(companion)))
    if emotion is not None:
        parts.append(_pair_score(li, 200 + EMOTIONS.index(emotion)))
    return float(np.mean(parts)) if parts else 0.0


def generate_location_survey(n_participants, study_mix, rule, seed):
    """Synthesize survey records: demographics from the reference marginals,
    ten scenarios per participant shaped by their study design, labels from
    the planted rule over (demographics, location, audience, context)."""
    study_mix = dict(study_mix)
    for design in study_mix:
        if design not in STUDY_DESIGNS:
            raise PrivpredError(f"unknown study design {design}")
    if sum(study_mix.values()) != n_participants:
        raise PrivpredError(
            f"study mix sums to {sum(study_mix.values())}, expected {n_participants}")

    rng = np.random.default_rng(seed)
    age_p = np.array(AGE_MARGINALS) / sum(AGE_MARGINALS)
    gender_p = np.array(GENDER_MARGINALS) / sum(GENDER_MARGINALS)
    marriage_p = np.array(MARRIAGE_MARGINALS) / sum(MARRIAGE_MARGINALS)
    privacy_p = np.array(PRIVACY_MARGINALS) / sum(PRIVACY_MARGINALS)

    records = []
    truth_records = []
    width = len(str(max(n_participants - 1, 1)))
    participant_no = 0
    for design in sorted(study_mix):
        fields_present = STUDY_DESIGNS[design]
        for _ in range(study_mix[design]):
            pid = f"p{participant_no:0{width}d}"
            participant_no += 1
            age = AGE_BUCKETS[int(rng.choice(len(AGE_BUCKETS), p=age_p))]
            gender = GENDERS[int(rng.choice(len(GENDERS), p=gender_p))]
            marriage = MARRIAGE[int(rng.choice(len(MARRIAGE), p=marriage_p))]
            privacy = PRIVACY_LEVELS[int(rng.choice(len(PRIVACY_LEVELS), p=privacy_p))]
            tendency = (_AGE_SCORE[age] + _GENDER_SCORE[gender]
                        + _MARRIAGE_SCORE[marriage] + _PRIVACY_SCORE[privacy]) / 4.0
            for _ in range(SCENARIOS_PER_PARTICIPANT):
                loc = LOCATION_SEMANTICS[int(rng.integers(len(LOCATION_SEMANTICS)))]
                time = (TIMES[int(rng.integers(len(TIMES)))]
                        if "time" in fields_present else None)
                companion = (COMPANIONS[int(rng.integers(len(COMPANIONS)))]
                             if "companion" in fields_present else None)
                emotion = (EMOTIONS[int(rng.integers(len(EMOTIONS)))]
                           if "emotion" in fields_present else None)
                audience = AUDIENCES[int(rng.integers(len(AUDIENCES)))]
                factor_row = np.array([
                    tendency,
                    _LOCATION_SCORE[loc],
                    _AUDIENCE_SCORE[audience],
                    _appropriateness(loc, time, companion, emotion),
                ])
                p = float(rule.probabilities(factor_row[None, :])[0])
                label = bool(rng.random() < p)
                if rule.noise > 0:
                    label ^= bool(rng.random() < rule.noise)
                records.append(LocationRecord(
                    participant_id=pid, age_bucket=age, gender=gender,
                    marriage=marriage, privacy_level=privacy,
                    location_semantic=loc, time=time, companion=companion,
                    emotion=emotion, audience=audience, label=int(label)))
                truth_records.append({"participant": pid,
                                      "index": len(records) - 1,
                                      "true_probability": p,
                                      "planted_label": int(label)})
    truth = GroundTruth(rule=rule, kind="location", records=truth_records)
    return SyntheticSurvey(records=records, truth=truth)
