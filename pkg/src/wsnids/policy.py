"""Versioned policies, per-agent repositories and scope resolution.

The base station (BPDP) is the only issuer and keeps every policy it ever
issued; regional (RPA) and cluster (LPA) agents hold the subset that is in
scope for them.  Agent state (signature db, normal profile, response
parameters, bans) is always derived from the repository contents.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import StaleVersion
from .ida import NormalProfile, SignatureRecord
from .response import ResponseParams
from .topology import Role, Topology


class AgentRole(str, Enum):
    BPDP = "BPDP"
    RPA = "RPA"
    LPA = "LPA"

    @classmethod
    def for_node(cls, role: Role) -> AgentRole:
        return {Role.BASE_STATION: cls.BPDP, Role.REGIONAL: cls.RPA, Role.CLUSTER: cls.LPA}[role]


class PolicyKind(str, Enum):
    SIGNATURE_UPDATE = "SignatureUpdate"
    PROFILE_UPDATE = "ProfileUpdate"
    RESPONSE_PARAMS = "ResponseParams"
    BAN_ENTRY = "BanEntry"


@dataclass(frozen=True)
class Scope:
    level: str = "All"   # All | Region | Cluster
    target: int | None = None

    def __str__(self):
        return self.level if self.target is None else f"{self.level}:{self.target}"


ALL = Scope()


def region_scope(r: int) -> Scope:
    return Scope("Region", r)


def cluster_scope(c: int) -> Scope:
    return Scope("Cluster", c)


@dataclass(frozen=True)
class Policy:
    version: int
    kind: PolicyKind
    body: object   # SignatureRecord | NormalProfile | ResponseParams | node id
    scope: Scope = ALL

    def summary(self) -> str:
        if self.kind is PolicyKind.SIGNATURE_UPDATE:
            return self.body.sig_id
        if self.kind is PolicyKind.BAN_ENTRY:
            return str(self.body)
        return self.kind.value

    def log_fields(self) -> tuple:
        return (("version", self.version), ("kind", self.kind), ("scope", str(self.scope)),
                ("body", self.summary()))


class PolicyRepository:
    def __init__(self, owner: int):
        self.owner = owner
        self.entries: list[Policy] = []

    @property
    def high_water(self) -> int:
        return self.entries[-1].version if self.entries else 0

    def versions(self) -> list[int]:
        return [p.version for p in self.entries]

    def __contains__(self, p: Policy) -> bool:
        return any(e.version == p.version for e in self.entries)

    def add(self, p: Policy) -> None:
        if p.version <= self.high_water:
            raise StaleVersion(p.version, self.high_water)
        self.entries.append(p)

    def snapshot(self) -> tuple[Policy, ...]:
        return tuple(self.entries)

    def restore(self, entries) -> None:
        self.entries = sorted(entries, key=lambda p: p.version)

    # derived state
    def signatures(self) -> list[SignatureRecord]:
        return [p.body for p in self.entries if p.kind is PolicyKind.SIGNATURE_UPDATE]

    def profile(self) -> NormalProfile | None:
        for p in reversed(self.entries):
            if p.kind is PolicyKind.PROFILE_UPDATE:
                return p.body
        return None

    def params(self, default: ResponseParams) -> ResponseParams:
        for p in reversed(self.entries):
            if p.kind is PolicyKind.RESPONSE_PARAMS:
                return p.body
        return default

    def bans(self) -> set[int]:
        return {p.body for p in self.entries if p.kind is PolicyKind.BAN_ENTRY}


def issue_policy(bpdp_repo: PolicyRepository, kind: PolicyKind, body, scope: Scope = ALL) -> Policy:
    p = Policy(bpdp_repo.high_water + 1, kind, body, scope)
    bpdp_repo.add(p)
    return p


def apply_policy(repo: PolicyRepository, p: Policy) -> None:
    """Add ``p`` to an agent's repository; raises StaleVersion for old/duplicate versions."""
    repo.add(p)


def controller_of(controller: dict[int, int], node: int) -> int:
    return controller.get(node, node)


def policy_targets(scope: Scope, topo: Topology, controller: dict[int, int],
                   alive=None) -> set[int]:
    """Agent node ids a policy with ``scope`` must reach.

    ``controller`` maps a failed agent to the live peer that took it over, so a
    policy scoped to a failed region or cluster lands on its successor.
    Cluster membership of a region is by home region, not current parent.
    """
    regionals = topo.by_role(Role.REGIONAL)
    clusters = topo.by_role(Role.CLUSTER)
    ctl = lambda n: controller_of(controller, n)
    if scope.level == "All":
        out = set(regionals) | set(clusters)
    elif scope.level == "Region":
        out = {ctl(scope.target)}
        out |= {ctl(c) for c in clusters if topo.home_region.get(c) == scope.target}
    elif scope.level == "Cluster":
        lpa = ctl(scope.target)
        out = {lpa}
        parent = topo.node(lpa).parent
        if parent is not None:
            out.add(parent)
    else:
        raise ValueError(f"bad scope {scope}")
    if alive is not None:
        out = {n for n in out if n in alive}
    return out


def filter_for(agent: int, entries, topo: Topology, controller: dict[int, int]) -> list[Policy]:
    """Authoritative entries that are in scope for ``agent``."""
    return [p for p in entries if agent in policy_targets(p.scope, topo, controller)]


def snapshot(repo: PolicyRepository) -> tuple[Policy, ...]:
    return repo.snapshot()


def restore(repo: PolicyRepository, snap) -> None:
    repo.restore(snap)
