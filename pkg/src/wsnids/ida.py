"""Intrusion detection agent stages: pre-processor, signature and anomaly processors.

The post-processor lives on the agents themselves (see :mod:`wsnids.agents`)
because it needs the message layer.  Everything here is pure.
"""
from __future__ import annotations

import operator
import re
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import ProfileMissing
from .traffic import TrafficRecord

FEATURES = ("pkt_rate", "drop_ratio", "fwd_ratio", "dup_count")


@dataclass(frozen=True)
class StimulusVector:
    node: int
    window_end: int
    pkt_rate: float
    drop_ratio: float
    fwd_ratio: float
    dup_count: int
    sig_tags: tuple = ()  # sorted multiset of signature ids

    def feature(self, name: str) -> float:
        return getattr(self, name)


def preprocess(raw: Iterable[TrafficRecord], window: int, window_end: int) -> list[StimulusVector]:
    """One vector per sensor seen in ``raw``, ordered by sensor id."""
    sent = defaultdict(int)
    obligations = defaultdict(int)
    dropped = defaultdict(int)
    dups = defaultdict(int)
    tags = defaultdict(list)
    for r in raw:
        sent[r.src] += r.size
        obligations[r.src] += r.obligations
        dropped[r.src] += r.dropped
        dups[r.src] += r.replayed
        tags[r.src].extend(r.signatures)
    out = []
    for node in sorted(sent):
        ob = obligations[node]
        drop_ratio = dropped[node] / ob if ob else 0.0
        out.append(StimulusVector(
            node=node,
            window_end=window_end,
            pkt_rate=sent[node] / window,
            drop_ratio=drop_ratio,
            fwd_ratio=1.0 - drop_ratio,
            dup_count=dups[node],
            sig_tags=tuple(sorted(tags[node])),
        ))
    return out


_OPS = {
    ">": operator.gt,
    ">=": operator.ge,
    "<": operator.lt,
    "<=": operator.le,
    "==": operator.eq,
}
_COND = re.compile(r"^\s*(\w+)\s*(>=|<=|==|>|<)\s*([-+0-9.eE]+)\s*$")


@dataclass(frozen=True)
class TagPredicate:
    tag: str

    def __call__(self, v: StimulusVector) -> bool:
        return self.tag in v.sig_tags

    def __str__(self):
        return f"tag:{self.tag}"


@dataclass(frozen=True)
class ThresholdPredicate:
    """Conjunction of ``feature op value`` conditions."""
    conditions: tuple

    def __call__(self, v: StimulusVector) -> bool:
        return all(_OPS[op](v.feature(f), x) for f, op, x in self.conditions)

    def __str__(self):
        return "&".join(f"{f}{op}{x:g}" for f, op, x in self.conditions)


def parse_predicate(text: str):
    text = text.strip()
    if text.startswith("tag:"):
        tag = text[4:].strip()
        if not tag:
            raise ValueError("empty tag predicate")
        return TagPredicate(tag)
    conds = []
    for part in text.split("&"):
        m = _COND.match(part)
        if not m:
            raise ValueError(f"bad predicate condition {part!r}")
        feat, op, val = m.groups()
        if feat not in FEATURES:
            raise ValueError(f"unknown feature {feat!r}")
        conds.append((feat, op, float(val)))
    return ThresholdPredicate(tuple(conds))


@dataclass(frozen=True)
class SignatureRecord:
    sig_id: str
    predicate: TagPredicate | ThresholdPredicate
    description: str = ""

    def matches(self, v: StimulusVector) -> bool:
        return self.predicate(v)


def signature_match(v: StimulusVector, db: Iterable[SignatureRecord]) -> str | None:
    for rec in db:
        if rec.matches(v):
            return rec.sig_id
    return None


@dataclass(frozen=True)
class NormalProfile:
    stats: dict = field(default_factory=dict)  # feature -> (mean, stdev)
    threshold: float = 3.0

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("anomaly threshold must be > 0")
        for f, (mean, sd) in self.stats.items():
            if f not in FEATURES:
                raise ValueError(f"unknown feature {f!r}")
            if sd <= 0:
                raise ValueError(f"stdev for {f} must be > 0")

    def __hash__(self):
        return hash((tuple(sorted(self.stats.items())), self.threshold))


def anomaly_score(v: StimulusVector, p: NormalProfile, features=None) -> dict[str, float]:
    """Standardised deviation |x - mean| / stdev for each scored feature."""
    if features is None:
        features = [f for f in FEATURES if f in p.stats]
    scores = {}
    for f in features:
        if f not in p.stats:
            raise ProfileMissing(f)
        mean, sd = p.stats[f]
        scores[f] = abs(v.feature(f) - mean) / sd
    return scores


def detect_anomaly(scores: dict[str, float], p: NormalProfile) -> tuple[str, float] | None:
    best = None
    for f in FEATURES:
        s = scores.get(f)
        if s is None or s <= p.threshold:
            continue
        if best is None or s > best[1]:
            best = (f, s)
    return best


class AlertKind(str, Enum):
    MISUSE = "Misuse"
    ANOMALY = "Anomaly"
    RED_ALERT = "RedAlert"


@dataclass(frozen=True)
class Alert:
    kind: AlertKind
    origin_agent: int
    subject: int
    at: int
    detail: str | None = None   # signature id or feature name
    score: float | None = None
    origin_role: str = "LPA"

    def log_fields(self) -> tuple:
        return (("alert", self.kind), ("origin", self.origin_agent), ("role", self.origin_role),
                ("node", self.subject), ("detail", self.detail), ("score", self.score),
                ("at", self.at))
