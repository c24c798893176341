"""Seeded sensor traffic and attack injection.

Each sensor, each tick, draws two counts from a Poisson distribution through an
inverse-CDF table: packets it originates (mean ``rate``) and forwarding
obligations it must relay (mean ``forward_mean``).  Draw order is fixed:
ticks ascending, sensors ascending by id, and per sensor the originated count
then the obligation count, all from ``random.Random(f"traffic:{seed}")``.
Attack randomness (packet-drop coin flips) uses a separate stream,
``random.Random(f"attack:{seed}")``, so the baseline draws never shift when
attacks are added.
"""
from __future__ import annotations

import math
import random
from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum

TAIL_EPS = 1e-12


class Behavior(str, Enum):
    NORMAL = "Normal"
    DROP = "Drop"
    FLOOD = "Flood"
    REPLAY = "Replay"
    KNOWN_SIGNATURE = "KnownSignature"


class AttackKind(str, Enum):
    PACKET_DROP = "packet_drop"
    FLOOD = "flood"
    REPLAY = "replay"
    KNOWN_SIGNATURE = "known_signature"


@dataclass(frozen=True)
class AttackSpec:
    attacker: int
    kind: AttackKind
    start: int
    stop: int
    rate: float = 1.0          # PacketDrop fraction
    multiplier: float = 1.0    # Flood factor
    signature: str | None = None

    def __post_init__(self):
        if not self.start < self.stop:
            raise ValueError(f"attack start {self.start} must precede stop {self.stop}")
        if self.kind is AttackKind.PACKET_DROP and not 0.0 <= self.rate <= 1.0:
            raise ValueError(f"drop rate {self.rate} outside [0, 1]")
        if self.kind is AttackKind.FLOOD and self.multiplier < 1:
            raise ValueError(f"flood multiplier {self.multiplier} < 1")
        if self.kind is AttackKind.KNOWN_SIGNATURE and not self.signature:
            raise ValueError("known_signature attack needs a signature id")

    def active(self, tick: int) -> bool:
        return self.start <= tick < self.stop

    def log_fields(self) -> tuple:
        param = {
            AttackKind.PACKET_DROP: self.rate,
            AttackKind.FLOOD: self.multiplier,
            AttackKind.REPLAY: None,
            AttackKind.KNOWN_SIGNATURE: self.signature,
        }[self.kind]
        return (("attack", self.kind), ("param", param), ("start", self.start), ("stop", self.stop))


@dataclass(slots=True)
class TrafficRecord:
    src: int
    dst: int
    tick: int
    size: int
    obligations: int = 0
    dropped: int = 0
    replayed: int = 0
    tags: tuple = (Behavior.NORMAL,)
    signatures: tuple = ()

    def log_fields(self) -> tuple:
        tags = tuple(t.value if t is not Behavior.KNOWN_SIGNATURE else "" for t in self.tags)
        tags = tuple(t for t in tags if t) + tuple(f"KnownSignature:{s}" for s in self.signatures)
        return (("src", self.src), ("dst", self.dst), ("size", self.size),
                ("obl", self.obligations), ("drop", self.dropped), ("dup", self.replayed),
                ("tags", tags))


def poisson_table(mean: float) -> list[float]:
    """Cumulative Poisson probabilities up to a 1e-12 tail."""
    if mean < 0:
        raise ValueError("mean must be >= 0")
    if mean == 0:
        return [1.0]
    cdf = []
    p = math.exp(-mean)
    acc = 0.0
    k = 0
    while True:
        acc += p
        cdf.append(acc)
        if acc >= 1.0 - TAIL_EPS and k >= mean:
            break
        k += 1
        p *= mean / k
    cdf[-1] = 1.0
    return cdf


def draw(table: list[float], u: float) -> int:
    return min(bisect_right(table, u), len(table) - 1)


@dataclass
class TrafficModel:
    rate: float = 2.0
    forward_mean: float = 1.0
    per_sensor: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        rates = [self.rate, *self.per_sensor.values()]
        if any(r <= 0 for r in rates):
            raise ValueError("traffic rates must be > 0 for all sensors")
        if self.forward_mean < 0:
            raise ValueError("forward_mean must be >= 0")
        self._tables: dict[float, list[float]] = {}

    def mean_for(self, sensor: int) -> float:
        return self.per_sensor.get(sensor, self.rate)

    def table(self, mean: float) -> list[float]:
        t = self._tables.get(mean)
        if t is None:
            t = self._tables[mean] = poisson_table(mean)
        return t


class TrafficGenerator:
    """Produces TrafficRecords tick by tick; attacks decorate the baseline."""

    def __init__(self, model: TrafficModel, sensors: list[int], seed: int,
                 attacks: list[AttackSpec] = ()):
        self.model = model
        self.sensors = sorted(sensors)
        self.rng = random.Random(f"traffic:{seed}")
        self.attack_rng = random.Random(f"attack:{seed}")
        self.attacks: dict[int, list[AttackSpec]] = {}
        for a in attacks:
            self.attacks.setdefault(a.attacker, []).append(a)
        self._fwd_table = model.table(model.forward_mean)

    def records_for_tick(self, tick: int, parent_of) -> list[TrafficRecord]:
        out = []
        rng = self.rng
        for s in self.sensors:
            n = draw(self.model.table(self.model.mean_for(s)), rng.random())
            obligations = draw(self._fwd_table, rng.random())
            rec = TrafficRecord(s, parent_of(s), tick, n, obligations)
            active = [a for a in self.attacks.get(s, ()) if a.active(tick)]
            if active:
                self._apply_attacks(rec, active)
            out.append(rec)
        return out

    def _apply_attacks(self, rec: TrafficRecord, active: list[AttackSpec]) -> None:
        tags = []
        sigs = []
        for a in active:
            if a.kind is AttackKind.FLOOD:
                rec.size = int(round(a.multiplier * rec.size))
                tags.append(Behavior.FLOOD)
            elif a.kind is AttackKind.PACKET_DROP:
                rec.dropped = sum(1 for _ in range(rec.obligations)
                                  if self.attack_rng.random() < a.rate)
                tags.append(Behavior.DROP)
            elif a.kind is AttackKind.REPLAY:
                rec.replayed = rec.size
                tags.append(Behavior.REPLAY)
            else:
                tags.append(Behavior.KNOWN_SIGNATURE)
                sigs.append(a.signature)
        rec.tags = tuple(dict.fromkeys(tags))
        rec.signatures = tuple(sigs)
