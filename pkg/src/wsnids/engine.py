"""Deterministic discrete-event engine.

Events are ordered by ``(at, seq)``; ``seq`` is the insertion counter so ties
at one tick dispatch in scheduling order.  Every dispatched event and every
record an agent emits while handling it lands in an append-only
:class:`EventLog`, whose text form is one line per entry::

    tick<TAB>seq<TAB>kind<TAB>subject<TAB>key=value,...
"""
from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable

from .errors import IllegalRoute, PastEvent

DEFAULT_LATENCY = 1


class EventKind(str, Enum):
    TRAFFIC_RECORD = "TrafficRecord"
    MESSAGE_DELIVER = "MessageDeliver"
    ATTACK_START = "AttackStart"
    ATTACK_STOP = "AttackStop"
    NODE_FAIL = "NodeFail"
    TIMER_FIRE = "TimerFire"


@dataclass(slots=True)
class Event:
    at: int
    kind: EventKind
    subject: int
    payload: Any = None
    seq: int = -1

    def log_fields(self) -> tuple:
        p = self.payload
        if p is None:
            return ()
        if hasattr(p, "log_fields"):
            return p.log_fields()
        if isinstance(p, dict):
            return tuple(p.items())
        return (("payload", p),)


@dataclass(slots=True)
class Delivery:
    """Payload of a MessageDeliver event."""
    src: int
    dst: int
    msg: Any
    sent_at: int

    def log_fields(self) -> tuple:
        inner = self.msg.log_fields() if hasattr(self.msg, "log_fields") else ()
        return (("from", self.src), ("msg", type(self.msg).__name__)) + tuple(inner)


@dataclass(slots=True)
class Timer:
    name: str
    data: Any = None

    def log_fields(self) -> tuple:
        if self.data is None:
            return (("timer", self.name),)
        return (("timer", self.name), ("data", self.data))


def format_value(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, Enum):
        return str(v.value)
    if isinstance(v, float):
        return format(v, ".6g")
    if isinstance(v, (list, tuple, frozenset, set)):
        items = sorted(v, key=str) if isinstance(v, (set, frozenset)) else v
        return "|".join(format_value(x) for x in items) if items else "-"
    return str(v)


@dataclass(frozen=True, slots=True)
class LogRecord:
    tick: int
    seq: int
    kind: str
    subject: int
    fields: tuple = ()

    def line(self) -> str:
        body = ",".join(f"{k}={format_value(v)}" for k, v in self.fields)
        return f"{self.tick}\t{self.seq}\t{self.kind}\t{self.subject}\t{body}"

    def get(self, key, default=None):
        for k, v in self.fields:
            if k == key:
                return v
        return default

    def __getitem__(self, key):
        for k, v in self.fields:
            if k == key:
                return v
        raise KeyError(key)


def parse_line(line: str) -> LogRecord:
    """Inverse of :meth:`LogRecord.line`; field values come back as strings."""
    tick, seq, kind, subject, body = line.rstrip("\n").split("\t")
    fields = []
    if body:
        for item in body.split(","):
            k, _, v = item.partition("=")
            fields.append((k, v))
    return LogRecord(int(tick), int(seq), kind, int(subject), tuple(fields))


class EventLog:
    def __init__(self, records: Iterable[LogRecord] = ()):
        self.records: list[LogRecord] = list(records)

    def append(self, rec: LogRecord) -> None:
        self.records.append(rec)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def of_kind(self, *kinds: str) -> list[LogRecord]:
        return [r for r in self.records if r.kind in kinds]

    def text(self) -> str:
        return "".join(r.line() + "\n" for r in self.records)

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode()).hexdigest()

    def write(self, path) -> None:
        Path(path).write_text(self.text())

    @classmethod
    def parse(cls, text: str) -> EventLog:
        return cls(parse_line(l) for l in text.splitlines() if l.strip())

    @classmethod
    def read(cls, path) -> EventLog:
        return cls.parse(Path(path).read_text())


Handler = Callable[[Event], None]


class Engine:
    """Single-threaded event loop.

    ``topology`` is consulted by :meth:`deliver` to enforce the tree-edge
    rule; the survivability layer swaps it for a reparented copy on takeover.
    """

    def __init__(self, topology=None, latency: int = DEFAULT_LATENCY):
        self.now = 0
        self.topology = topology
        self.latency = latency
        self.log = EventLog()
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = 0
        self._current_seq = 0
        self._handlers: dict[EventKind, Handler] = {}

    def register(self, kind: EventKind, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, e: Event) -> Event:
        if e.at < self.now:
            raise PastEvent(f"event at tick {e.at} scheduled at tick {self.now}")
        e.seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, (e.at, e.seq, e))
        return e

    def at(self, tick: int, kind: EventKind, subject: int, payload=None) -> Event:
        return self.schedule(Event(tick, kind, subject, payload))

    def timer(self, tick: int, subject: int, name: str, data=None) -> Event:
        return self.at(tick, EventKind.TIMER_FIRE, subject, Timer(name, data))

    def emit(self, kind: str, subject: int, *fields: tuple[str, Any]) -> None:
        """Append an agent-emitted record, stamped with the dispatching event."""
        self.log.append(LogRecord(self.now, self._current_seq, kind, subject, tuple(fields)))

    def pending(self) -> int:
        return len(self._queue)

    def deliver(self, src: int, dst: int, msg, latency: int | None = None) -> Event:
        topo = self.topology
        if topo is not None and not topo.is_tree_edge(src, dst):
            raise IllegalRoute(f"{src} -> {dst} is not a tree edge")
        lat = self.latency if latency is None else latency
        return self.at(self.now + lat, EventKind.MESSAGE_DELIVER, dst,
                       Delivery(src, dst, msg, self.now))

    def run_until(self, end: int) -> EventLog:
        if end < self.now:
            raise PastEvent(f"run_until({end}) before current tick {self.now}")
        q = self._queue
        while q and q[0][0] <= end:
            at, seq, e = heapq.heappop(q)
            self.now = at
            self._current_seq = seq
            self.log.append(LogRecord(at, seq, e.kind.value, e.subject, e.log_fields()))
            handler = self._handlers.get(e.kind)
            if handler is not None:
                handler(e)
        self.now = end
        return self.log
