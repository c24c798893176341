"""Failure detection at the base station and neighbour takeover."""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import NoSuccessor
from .policy import PolicyRepository, filter_for
from .topology import Role, Topology


@dataclass
class HeartbeatState:
    timeout: int
    last_report: dict[int, int] = field(default_factory=dict)

    def beat(self, node: int, now: int) -> None:
        self.last_report[node] = now

    def expired(self, node: int, now: int) -> bool:
        return now - self.last_report.get(node, 0) > self.timeout


@dataclass(frozen=True)
class TakeoverRecord:
    failed: int
    successor: int
    at: int
    transferred: frozenset

    def log_fields(self) -> tuple:
        return (("failed", self.failed), ("successor", self.successor),
                ("transferred", self.transferred))


@dataclass(frozen=True)
class Reprovision:
    """Repository contents and mirrored class states the BPDP pushes to one agent."""
    target: int
    entries: tuple
    states: tuple = ()


def detect_failure(t: Topology, heartbeats: HeartbeatState, now: int,
                   known_failed=frozenset()) -> list[int]:
    """Intermediate nodes past their timeout, regional nodes first.

    A cluster whose parent region is itself silent is left out: the region's
    death explains the missing reports, and the cluster is re-checked once it
    has been reparented.
    """
    regions = [r for r in t.by_role(Role.REGIONAL)
               if r not in known_failed and heartbeats.expired(r, now)]
    silent = set(regions) | set(known_failed)
    clusters = []
    for c in t.by_role(Role.CLUSTER):
        if c in known_failed or not heartbeats.expired(c, now):
            continue
        if t.node(c).parent in silent:
            continue
        clusters.append(c)
    return regions + clusters


def select_successor(t: Topology, failed: int, is_live) -> int:
    """Least-loaded live adjacent peer; ties go to the lowest id."""
    candidates = [p for p in t.adjacent(failed) if is_live(p)]
    if not candidates:
        raise NoSuccessor(failed)
    return min(candidates, key=lambda p: (len(t.children(p)), p))


def transfer_control(t: Topology, failed: int, successor: int, now: int,
                     authority: PolicyRepository, controller: dict[int, int],
                     mirror: dict) -> tuple[Topology, list[Reprovision], TakeoverRecord]:
    """Reparent the failed node's children onto ``successor``.

    Mutates ``controller`` so scope resolution follows the takeover, and
    returns the reprovisioning the BPDP must apply: the successor always, plus
    every moved cluster agent when a regional node failed (their updates may
    have been lost while the region was down).
    """
    moved = t.children(failed)
    new_t = t.reparented({c: successor for c in moved})
    for k, v in list(controller.items()):
        if v == failed:
            controller[k] = successor
    controller[failed] = successor

    sensors_below = []
    if t.role(failed) is Role.CLUSTER:
        sensors_below = moved
    else:
        for c in moved:
            sensors_below += new_t.children(c)
    states = tuple(mirror[s] for s in sorted(sensors_below) if s in mirror)

    reprov = [Reprovision(successor,
                          tuple(filter_for(successor, authority.entries, new_t, controller)),
                          states)]
    if t.role(failed) is Role.REGIONAL:
        for c in moved:
            reprov.append(Reprovision(c, tuple(filter_for(c, authority.entries, new_t, controller))))
    return new_t, reprov, TakeoverRecord(failed, successor, now, frozenset(moved))
