"""Four-level network hierarchy: base station, regional nodes, cluster nodes, sensors.

Node ids are assigned breadth-first from the base station (id 0), so the same
topology description always yields the same ids.  Every node also carries a
human label (``B``, ``R1``, ``C3``, ``S12``) used by scenario files.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

from .errors import SpecError, UnknownNode


class Role(str, Enum):
    BASE_STATION = "BaseStation"
    REGIONAL = "RegionalNode"
    CLUSTER = "ClusterNode"
    SENSOR = "Sensor"

    @property
    def has_ids(self) -> bool:
        """Whether nodes of this role run an intrusion detection agent."""
        return self in (Role.REGIONAL, Role.CLUSTER)


# role -> required role of the parent
PARENT_ROLE = {
    Role.SENSOR: Role.CLUSTER,
    Role.CLUSTER: Role.REGIONAL,
    Role.REGIONAL: Role.BASE_STATION,
}


@dataclass(frozen=True)
class Node:
    id: int
    role: Role
    parent: int | None
    label: str


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a <= b else (b, a)


class Topology:
    """Immutable snapshot of the hierarchy plus the sibling adjacency relations.

    Adjacency pairs are stored normalised (low id first), which makes the
    relations symmetric by construction.  ``home_region`` remembers the
    region each cluster was built in; it does not change on takeover.
    """

    def __init__(self, nodes: Iterable[Node], region_adjacency=(), cluster_adjacency=(),
                 home_region: dict[int, int] | None = None):
        self.nodes: dict[int, Node] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise SpecError(f"duplicate node id {n.id}")
            self.nodes[n.id] = n
        self.region_adjacency = frozenset(_pair(a, b) for a, b in region_adjacency)
        self.cluster_adjacency = frozenset(_pair(a, b) for a, b in cluster_adjacency)
        if home_region is None:
            home_region = {n.id: n.parent for n in self.nodes.values() if n.role is Role.CLUSTER}
        self.home_region = dict(home_region)
        self._children: dict[int, list[int]] = {i: [] for i in self.nodes}
        for n in self.nodes.values():
            if n.parent in self._children:
                self._children[n.parent].append(n.id)
        for kids in self._children.values():
            kids.sort()
        self._labels = {n.label: n.id for n in self.nodes.values()}

    def __contains__(self, node_id) -> bool:
        return node_id in self.nodes

    def __len__(self) -> int:
        return len(self.nodes)

    def __eq__(self, other):
        if not isinstance(other, Topology):
            return NotImplemented
        return (self.nodes == other.nodes
                and self.region_adjacency == other.region_adjacency
                and self.cluster_adjacency == other.cluster_adjacency)

    def node(self, node_id: int) -> Node:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNode(node_id) from None

    def role(self, node_id: int) -> Role:
        return self.node(node_id).role

    def label(self, node_id: int) -> str:
        return self.node(node_id).label

    def resolve(self, ref) -> int:
        """Map a label (``"R1"``) or an integer id to a node id."""
        if isinstance(ref, int):
            if ref not in self.nodes:
                raise UnknownNode(ref)
            return ref
        if ref in self._labels:
            return self._labels[ref]
        if isinstance(ref, str) and ref.isdigit() and int(ref) in self.nodes:
            return int(ref)
        raise UnknownNode(ref)

    def children(self, node_id: int) -> list[int]:
        self.node(node_id)
        return list(self._children[node_id])

    def by_role(self, role: Role) -> list[int]:
        return sorted(n.id for n in self.nodes.values() if n.role is role)

    @property
    def base_station(self) -> int:
        return self.by_role(Role.BASE_STATION)[0]

    def adjacent(self, node_id: int) -> list[int]:
        """Sibling peers of a regional or cluster node (used only for failover)."""
        role = self.role(node_id)
        if role is Role.REGIONAL:
            rel = self.region_adjacency
        elif role is Role.CLUSTER:
            rel = self.cluster_adjacency
        else:
            return []
        out = set()
        for a, b in rel:
            if a == node_id:
                out.add(b)
            elif b == node_id:
                out.add(a)
        out.discard(node_id)
        return sorted(out)

    def is_tree_edge(self, a: int, b: int) -> bool:
        na, nb = self.node(a), self.node(b)
        return na.parent == b or nb.parent == a

    def reparented(self, moves: dict[int, int]) -> Topology:
        """Copy of this topology with ``child -> new parent`` applied."""
        nodes = []
        for n in self.nodes.values():
            if n.id in moves:
                n = Node(n.id, n.role, moves[n.id], n.label)
            nodes.append(n)
        return Topology(nodes, self.region_adjacency, self.cluster_adjacency, self.home_region)


@dataclass
class TopologySpec:
    regions: int
    clusters_per_region: int
    sensors_per_cluster: int
    # pairs of labels or ids
    region_adjacency: list = field(default_factory=list)
    # None means "clusters of the same region are mutually adjacent"
    cluster_adjacency: list | None = None


def build_topology(spec: TopologySpec) -> Topology:
    for name in ("regions", "clusters_per_region", "sensors_per_cluster"):
        if getattr(spec, name) < 1:
            raise SpecError(f"{name} must be >= 1, got {getattr(spec, name)}")

    nodes = [Node(0, Role.BASE_STATION, None, "B")]
    next_id = 1
    regions = []
    for r in range(spec.regions):
        nodes.append(Node(next_id, Role.REGIONAL, 0, f"R{r + 1}"))
        regions.append(next_id)
        next_id += 1
    clusters = []
    for region in regions:
        for _ in range(spec.clusters_per_region):
            clusters.append((next_id, region))
            nodes.append(Node(next_id, Role.CLUSTER, region, f"C{len(clusters)}"))
            next_id += 1
    n_sensors = 0
    for cluster, _ in clusters:
        for _ in range(spec.sensors_per_cluster):
            n_sensors += 1
            nodes.append(Node(next_id, Role.SENSOR, cluster, f"S{n_sensors}"))
            next_id += 1

    labels = {n.label: n.id for n in nodes}

    def ref(x, want: Role) -> int:
        if isinstance(x, int) and not isinstance(x, bool):
            node_id = x
        elif x in labels:
            node_id = labels[x]
        else:
            raise SpecError(f"adjacency references undeclared node {x!r}")
        if node_id >= len(nodes) or nodes[node_id].role is not want:
            raise SpecError(f"adjacency references undeclared {want.value} {x!r}")
        return node_id

    def pairs(raw, want):
        seen = set()
        out = []
        for a, b in raw:
            p = _pair(ref(a, want), ref(b, want))
            if p in seen:
                raise SpecError(f"duplicate adjacency pair {a}-{b}")
            seen.add(p)
            out.append(p)
        return out

    region_adj = pairs(spec.region_adjacency, Role.REGIONAL)
    if spec.cluster_adjacency is None:
        cluster_adj = []
        for region in regions:
            members = [c for c, r in clusters if r == region]
            cluster_adj += [(a, b) for i, a in enumerate(members) for b in members[i + 1:]]
    else:
        cluster_adj = pairs(spec.cluster_adjacency, Role.CLUSTER)

    topo = Topology(nodes, region_adj, cluster_adj)
    problems = validate(topo)
    if problems:
        raise SpecError("; ".join(problems))
    return topo


def parent_of(t: Topology, n: int) -> int | None:
    return t.node(n).parent


def descendants_of(t: Topology, n: int) -> set[int]:
    out: set[int] = set()
    stack = t.children(n)
    while stack:
        c = stack.pop()
        out.add(c)
        stack.extend(t.children(c))
    return out


def validate(t: Topology) -> list[str]:
    """Return every invariant violation as a readable string (empty if clean)."""
    v = []
    bases = [n.id for n in t.nodes.values() if n.role is Role.BASE_STATION]
    if len(bases) != 1:
        v.append(f"exactly one base station required: found {sorted(bases)}")
    for n in sorted(t.nodes.values(), key=lambda n: n.id):
        if n.role is Role.BASE_STATION:
            if n.parent is not None:
                v.append(f"base station must have no parent: node {n.id}")
            continue
        want = PARENT_ROLE[n.role]
        if n.parent is None or n.parent not in t.nodes:
            v.append(f"{n.role.value.lower()} parent must be {want.value.lower()}: "
                     f"node {n.id} has missing parent {n.parent}")
        elif t.nodes[n.parent].role is not want:
            kind = {Role.SENSOR: "sensor", Role.CLUSTER: "cluster", Role.REGIONAL: "regional"}[n.role]
            target = {Role.CLUSTER: "cluster", Role.REGIONAL: "regional",
                      Role.BASE_STATION: "base station"}[want]
            v.append(f"{kind} parent must be {target}: node {n.id} -> {n.parent}")

    for name, rel, role in (("region", t.region_adjacency, Role.REGIONAL),
                            ("cluster", t.cluster_adjacency, Role.CLUSTER)):
        for a, b in sorted(rel):
            if a == b:
                v.append(f"{name} adjacency must be irreflexive: ({a},{a})")
            for x in (a, b):
                if x not in t.nodes or t.nodes[x].role is not role:
                    v.append(f"{name} adjacency endpoint must be a {role.value}: {x}")

    for a, b in sorted(t.cluster_adjacency):
        if a == b or a not in t.nodes or b not in t.nodes:
            continue
        ra, rb = t.home_region.get(a), t.home_region.get(b)
        if ra is None or rb is None:
            continue
        if ra != rb and _pair(ra, rb) not in t.region_adjacency:
            v.append(f"cluster adjacency must stay within a region or adjacent regions: ({a},{b})")
    return v
