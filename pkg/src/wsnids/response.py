"""Five-class node classification and the actions each transition triggers.

Timers are measured in ticks against the tick at which the watchdog verdict
is delivered (one verdict per node per detection window).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .errors import InvalidObservation


class NodeClass(str, Enum):
    FRESH = "Fresh"
    MEMBER = "Member"
    UNSTABLE = "Unstable"
    SUSPECT = "Suspect"
    MALICIOUS = "Malicious"


class Verdict(str, Enum):
    GOOD = "Good"
    MISBEHAVING = "Misbehaving"


class Action(str, Enum):
    EMIT_RED_ALERT = "EmitRedAlert"
    QUARANTINE = "Quarantine"
    RECONNECT = "Reconnect"
    PERMANENT_BAN = "PermanentBan"  # also adds the node id to signature databases


@dataclass(frozen=True)
class ResponseParams:
    probation_ticks: int = 100
    unstable_ticks: int = 50
    oscillation_limit: int = 3
    oscillation_window: int = 300
    misbehave_limit_ticks: int = 50
    ban_ticks: int = 200
    reobserve_ticks: int = 100

    def __post_init__(self):
        for name in ("probation_ticks", "unstable_ticks", "oscillation_window",
                     "misbehave_limit_ticks", "ban_ticks", "reobserve_ticks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.oscillation_limit < 1:
            raise ValueError("oscillation_limit must be >= 1")

    @classmethod
    def for_window(cls, window: int) -> ResponseParams:
        """Defaults expressed in detection windows (10/5/3-in-30/5/20/10)."""
        return cls(10 * window, 5 * window, 3, 30 * window, 5 * window, 20 * window, 10 * window)


@dataclass(frozen=True, slots=True)
class NodeClassState:
    node: int
    cls: NodeClass = NodeClass.FRESH
    entered_at: int = 0
    oscillations: tuple = ()          # ticks of Member -> Unstable moves
    misbehave_since: int | None = None  # start of the current bad streak
    last_misbehave: int | None = None
    banned_until: int | None = None

    def log_fields(self) -> tuple:
        return (("class", self.cls), ("entered", self.entered_at),
                ("osc", self.oscillations), ("bad_since", self.misbehave_since),
                ("last_bad", self.last_misbehave), ("banned_until", self.banned_until))


@dataclass(frozen=True, slots=True)
class Observation:
    node: int
    at: int
    verdict: Verdict


def watchdog_verdict(v, findings, params=None) -> Observation:
    """Misbehaving iff the window produced any Misuse or Anomaly finding."""
    verdict = Verdict.MISBEHAVING if findings else Verdict.GOOD
    return Observation(v.node, v.window_end, verdict)


def _suspect(s: NodeClassState, now: int, params: ResponseParams):
    new = NodeClassState(s.node, NodeClass.SUSPECT, now, (), None, None, now + params.ban_ticks)
    return new, [Action.EMIT_RED_ALERT, Action.QUARANTINE]


def transition(s: NodeClassState, o: Observation, now: int, params: ResponseParams):
    """Advance one classification step; returns ``(new_state, actions)``."""
    if o.node != s.node:
        raise InvalidObservation(f"observation for {o.node} applied to state of {s.node}")
    bad = o.verdict is Verdict.MISBEHAVING
    cls = s.cls

    if cls is NodeClass.MALICIOUS:
        return s, []

    if cls is NodeClass.FRESH:
        if bad:
            return _suspect(s, now, params)
        if now - s.entered_at >= params.probation_ticks:
            return NodeClassState(s.node, NodeClass.MEMBER, now), []
        return s, []

    if cls is NodeClass.MEMBER:
        if bad:
            osc = tuple(t for t in s.oscillations if now - t < params.oscillation_window) + (now,)
            return NodeClassState(s.node, NodeClass.UNSTABLE, now, osc, now, now), []
        return s, []

    if cls is NodeClass.UNSTABLE:
        osc = tuple(t for t in s.oscillations if now - t < params.oscillation_window)
        if len(osc) >= params.oscillation_limit:
            return _suspect(s, now, params)
        if bad:
            since = s.misbehave_since if s.misbehave_since is not None else now
            if now - since >= params.misbehave_limit_ticks:
                return _suspect(s, now, params)
            return replace(s, oscillations=osc, misbehave_since=since, last_misbehave=now), []
        last = s.last_misbehave if s.last_misbehave is not None else s.entered_at
        if now - last >= params.unstable_ticks:
            return NodeClassState(s.node, NodeClass.MEMBER, now, osc), []
        return replace(s, oscillations=osc, misbehave_since=None), []

    # Suspect: observations during the ban are ignored
    if now < s.banned_until:
        return s, []
    if bad:
        return (NodeClassState(s.node, NodeClass.MALICIOUS, now, (), None, None, None),
                [Action.PERMANENT_BAN])
    if now - s.banned_until >= params.reobserve_ticks:
        return (NodeClassState(s.node, NodeClass.UNSTABLE, now, (), None, now, None),
                [Action.RECONNECT])
    return s, []


def admits_traffic(s: NodeClassState, now: int) -> bool:
    if s.cls is NodeClass.MALICIOUS:
        return False
    if s.cls is NodeClass.SUSPECT:
        return s.banned_until is not None and now >= s.banned_until
    return True


def in_reobservation(s: NodeClassState, now: int) -> bool:
    return s.cls is NodeClass.SUSPECT and s.banned_until is not None and now >= s.banned_until


def change_reason(old: NodeClassState, new: NodeClassState, o: Observation,
                  params: ResponseParams) -> str:
    """Short tag naming which rule moved ``old`` to ``new`` (for the event log)."""
    pair = (old.cls, new.cls)
    if pair == (NodeClass.FRESH, NodeClass.MEMBER):
        return "probation"
    if pair == (NodeClass.UNSTABLE, NodeClass.MEMBER):
        return "recovered"
    if pair == (NodeClass.SUSPECT, NodeClass.UNSTABLE):
        return "reobserved"
    if pair == (NodeClass.UNSTABLE, NodeClass.SUSPECT):
        osc = [t for t in old.oscillations if o.at - t < params.oscillation_window]
        return "oscillation" if len(osc) >= params.oscillation_limit else "long_misbehave"
    return "misbehave"
