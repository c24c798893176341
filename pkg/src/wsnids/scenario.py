"""Scenario files: a sectioned, line-oriented ``key=value`` format.

Example::

    [topology]
    regions = 2
    clusters_per_region = 2
    sensors_per_cluster = 3
    region_adjacency = R1-R2

    [traffic]
    rate = 2.0
    forward_mean = 1.0

    [policies]
    at=0 kind=profile scope=all k=3 pkt_rate=2.0/0.4472 drop_ratio=0/0.05
    at=0 kind=signature scope=all id=s7 match=tag:s7

    [attacks]
    start=50 stop=200 node=S1 kind=known_signature sig=s7

    [failures]
    at=500 node=R1

    [run]
    length = 1000
    window = 10

Single-valued sections (topology, traffic, run) take one ``key = value`` per
line; list sections (policies, attacks, failures) take one entry per line as
space-separated ``key=value`` tokens.  Nodes are referenced by label.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .engine import DEFAULT_LATENCY
from .errors import ParseError, SpecError, UnknownNode, ValidationError
from .ida import FEATURES, NormalProfile, SignatureRecord, parse_predicate
from .network import DEFAULT_WINDOW, ScheduledPolicy, Simulation
from .policy import ALL, PolicyKind, Scope
from .response import ResponseParams
from .topology import Role, Topology, TopologySpec, build_topology, validate
from .traffic import AttackKind, AttackSpec, TrafficModel

SECTIONS = ("topology", "traffic", "policies", "attacks", "failures", "run")
LIST_SECTIONS = ("policies", "attacks", "failures")

PARAM_KEYS = {
    "probation": "probation_ticks",
    "unstable": "unstable_ticks",
    "oscillation_limit": "oscillation_limit",
    "oscillation_window": "oscillation_window",
    "misbehave_limit": "misbehave_limit_ticks",
    "ban": "ban_ticks",
    "reobserve": "reobserve_ticks",
}


@dataclass
class Scenario:
    topology_spec: TopologySpec
    topology: Topology
    traffic: TrafficModel
    policies: list[ScheduledPolicy] = field(default_factory=list)
    attacks: list[AttackSpec] = field(default_factory=list)
    failures: list[tuple[int, int]] = field(default_factory=list)
    length: int = 1000
    window: int = DEFAULT_WINDOW
    latency: int = DEFAULT_LATENCY
    heartbeat_timeout: int | None = None

    def simulation(self, seed: int) -> Simulation:
        return Simulation(self.topology, self.traffic, seed, window=self.window,
                          latency=self.latency, heartbeat_timeout=self.heartbeat_timeout,
                          attacks=self.attacks, failures=self.failures, policies=self.policies)


@dataclass
class _Line:
    no: int
    fields: dict


def _split_sections(text: str) -> dict[str, list]:
    sections: dict[str, list] = {name: [] for name in SECTIONS}
    seen = set()
    current = None
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ParseError(f"malformed section header {line!r}", no)
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ParseError(f"unknown section [{name}]", no)
            if name in seen:
                raise ParseError(f"duplicate section [{name}]", no)
            seen.add(name)
            current = name
            continue
        if current is None:
            raise ParseError("entry outside of any section", no)
        if current in LIST_SECTIONS:
            fields = {}
            for tok in line.split():
                k, eq, v = tok.partition("=")
                if not eq or not k or not v:
                    raise ParseError(f"expected key=value, got {tok!r}", no)
                if k in fields:
                    raise ParseError("duplicate key", no, k)
                fields[k] = v
            sections[current].append(_Line(no, fields))
        else:
            k, eq, v = line.partition("=")
            k, v = k.strip(), v.strip()
            if not eq or not k or not v:
                raise ParseError(f"expected key = value, got {line!r}", no)
            if any(l.fields.get("key") == k for l in sections[current]):
                raise ParseError("duplicate key", no, k)
            sections[current].append(_Line(no, {"key": k, "value": v}))
    if "topology" not in seen:
        raise ParseError("missing [topology] section")
    return sections


def _num(line: _Line, key: str, conv=int, default=None, value=None):
    raw = value if value is not None else line.fields.get(key)
    if raw is None:
        if default is not None:
            return default
        raise ParseError("missing field", line.no, key)
    try:
        return conv(raw)
    except ValueError:
        raise ParseError(f"bad {conv.__name__} value {raw!r}", line.no, key) from None


def _require(line: _Line, key: str) -> str:
    if key not in line.fields:
        raise ParseError("missing field", line.no, key)
    return line.fields[key]


def _pairs(line: _Line, raw: str) -> list[tuple[str, str]]:
    out = []
    for item in raw.split(","):
        item = item.strip()
        if not item:
            continue
        a, dash, b = item.partition("-")
        if not dash or not a.strip() or not b.strip():
            raise ParseError(f"bad adjacency pair {item!r}", line.no, line.fields["key"])
        out.append((a.strip(), b.strip()))
    return out


def parse_scenario(text: str) -> Scenario:
    """Parse and fully validate a scenario; ParseError for syntax, ValidationError otherwise."""
    sec = _split_sections(text)
    problems: list[str] = []

    topo_kv = {l.fields["key"]: l for l in sec["topology"]}
    for k in topo_kv:
        if k not in ("regions", "clusters_per_region", "sensors_per_cluster",
                     "region_adjacency", "cluster_adjacency"):
            raise ParseError("unknown topology key", topo_kv[k].no, k)
    counts = {}
    for k in ("regions", "clusters_per_region", "sensors_per_cluster"):
        if k not in topo_kv:
            raise ParseError("missing topology key", None, k)
        counts[k] = _num(topo_kv[k], k, value=topo_kv[k].fields["value"])
    region_adj = (_pairs(topo_kv["region_adjacency"], topo_kv["region_adjacency"].fields["value"])
                  if "region_adjacency" in topo_kv else [])
    cluster_adj = (_pairs(topo_kv["cluster_adjacency"], topo_kv["cluster_adjacency"].fields["value"])
                   if "cluster_adjacency" in topo_kv else None)
    spec = TopologySpec(counts["regions"], counts["clusters_per_region"],
                        counts["sensors_per_cluster"], region_adj, cluster_adj)
    try:
        topo = build_topology(spec)
    except SpecError as exc:
        raise ValidationError([f"topology: {exc}"]) from None

    run_kv = {l.fields["key"]: l for l in sec["run"]}
    for k in run_kv:
        if k not in ("length", "window", "latency", "heartbeat_timeout"):
            raise ParseError("unknown run key", run_kv[k].no, k)

    def run_int(k, default):
        if k not in run_kv:
            return default
        return _num(run_kv[k], k, value=run_kv[k].fields["value"])

    length = run_int("length", 1000)
    window = run_int("window", DEFAULT_WINDOW)
    latency = run_int("latency", DEFAULT_LATENCY)
    timeout = run_int("heartbeat_timeout", None)
    if length < 1:
        problems.append("run length >= 1 required")
    if window < 1:
        problems.append("window >= 1 required")
    if latency < 1:
        problems.append("latency >= 1 required")
    eff_timeout = timeout if timeout is not None else 3 * max(window, 1)
    # LPA liveness reaches the base station up to a window late via its RPA
    if eff_timeout < 2 * (window + latency):
        problems.append(f"heartbeat_timeout {eff_timeout} must be >= 2*(window+latency) "
                        f"({2 * (window + latency)})")

    def node_ref(line: _Line, key: str, roles, what: str):
        ref = _require(line, key)
        try:
            n = topo.resolve(ref)
        except UnknownNode:
            problems.append(f"line {line.no}: {what} references undeclared node {ref}")
            return None
        if topo.role(n) not in roles:
            problems.append(f"line {line.no}: {what} node {ref} must be "
                            f"{'/'.join(r.value for r in roles)}, is {topo.role(n).value}")
            return None
        return n

    def within(line, key, tick):
        if tick < 0 or tick > length:
            problems.append(f"line {line.no}: {key}={tick} outside run length {length}")

    # traffic
    traffic_kv = {l.fields["key"]: l for l in sec["traffic"]}
    rate = 2.0
    forward_mean = 1.0
    per_sensor = {}
    for k, l in traffic_kv.items():
        if k == "rate":
            rate = _num(l, k, float, value=l.fields["value"])
        elif k == "forward_mean":
            forward_mean = _num(l, k, float, value=l.fields["value"])
        elif k.startswith("rate."):
            ref = k[5:]
            try:
                n = topo.resolve(ref)
            except UnknownNode:
                problems.append(f"line {l.no}: traffic rate references undeclared node {ref}")
                continue
            if topo.role(n) is not Role.SENSOR:
                problems.append(f"line {l.no}: traffic rate node {ref} must be a Sensor")
                continue
            per_sensor[n] = _num(l, k, float, value=l.fields["value"])
        else:
            raise ParseError("unknown traffic key", l.no, k)
    try:
        model = TrafficModel(rate, forward_mean, per_sensor)
    except ValueError as exc:
        problems.append(f"traffic: {exc}")
        model = None

    # policies
    policies = []
    for l in sec["policies"]:
        at = _num(l, "at")
        within(l, "at", at)
        scope = _scope(l, topo, problems)
        kind = _require(l, "kind")
        try:
            if kind == "profile":
                stats = {}
                for f in FEATURES:
                    if f in l.fields:
                        mean, slash, sd = l.fields[f].partition("/")
                        if not slash:
                            raise ParseError("expected mean/stdev", l.no, f)
                        stats[f] = (_num(l, f, float, value=mean), _num(l, f, float, value=sd))
                body = NormalProfile(stats, _num(l, "k", float, default=3.0))
                pk = PolicyKind.PROFILE_UPDATE
            elif kind == "signature":
                body = SignatureRecord(_require(l, "id"), parse_predicate(_require(l, "match")),
                                       l.fields.get("desc", "").replace("_", " "))
                pk = PolicyKind.SIGNATURE_UPDATE
            elif kind == "params":
                defaults = ResponseParams.for_window(window)
                kw = {}
                for short, name in PARAM_KEYS.items():
                    kw[name] = _num(l, short, default=getattr(defaults, name))
                body = ResponseParams(**kw)
                pk = PolicyKind.RESPONSE_PARAMS
            elif kind == "ban":
                body = node_ref(l, "node", (Role.SENSOR,), "ban")
                pk = PolicyKind.BAN_ENTRY
                if body is None:
                    continue
            else:
                raise ParseError(f"unknown policy kind {kind!r}", l.no, "kind")
        except ValueError as exc:
            problems.append(f"line {l.no}: {exc}")
            continue
        if scope is not None:
            policies.append(ScheduledPolicy(at, pk, body, scope))

    # attacks
    attacks = []
    for l in sec["attacks"]:
        start, stop = _num(l, "start"), _num(l, "stop")
        within(l, "start", start)
        within(l, "stop", stop)
        node = node_ref(l, "node", (Role.SENSOR,), "attack")
        raw_kind = _require(l, "kind")
        try:
            kind = AttackKind(raw_kind)
        except ValueError:
            raise ParseError(f"unknown attack kind {raw_kind!r}", l.no, "kind") from None
        if node is None:
            continue
        try:
            attacks.append(AttackSpec(node, kind, start, stop,
                                      rate=_num(l, "rate", float, default=1.0),
                                      multiplier=_num(l, "multiplier", float, default=1.0),
                                      signature=l.fields.get("sig")))
        except ValueError as exc:
            problems.append(f"line {l.no}: {exc}")

    # failures
    failures = []
    for l in sec["failures"]:
        at = _num(l, "at")
        within(l, "at", at)
        node = node_ref(l, "node", (Role.REGIONAL, Role.CLUSTER), "failure")
        if node is not None:
            failures.append((at, node))

    problems += [f"topology: {v}" for v in validate(topo)]
    if problems:
        raise ValidationError(problems)
    return Scenario(spec, topo, model, policies, attacks, failures, length, window, latency, timeout)


def _scope(line: _Line, topo: Topology, problems: list) -> Scope | None:
    raw = line.fields.get("scope", "all")
    if raw.lower() == "all":
        return ALL
    level, colon, ref = raw.partition(":")
    if not colon or level.lower() not in ("region", "cluster"):
        raise ParseError(f"bad scope {raw!r}", line.no, "scope")
    want = Role.REGIONAL if level.lower() == "region" else Role.CLUSTER
    try:
        n = topo.resolve(ref)
    except UnknownNode:
        problems.append(f"line {line.no}: scope references undeclared node {ref}")
        return None
    if topo.role(n) is not want:
        problems.append(f"line {line.no}: scope {raw} must name a {want.value}")
        return None
    return Scope(level.capitalize(), n)


def load_scenario(path) -> Scenario:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read scenario: {exc}") from None
    return parse_scenario(text)
