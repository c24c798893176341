"""Wires topology, traffic, agents and schedules onto one engine."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .agents import OPS, BaseAgent, LocalAgent, RegionalAgent
from .engine import DEFAULT_LATENCY, Engine, EventKind, EventLog
from .policy import ALL, PolicyKind, Scope
from .response import ResponseParams
from .topology import Role, Topology
from .traffic import AttackSpec, TrafficGenerator, TrafficModel

DEFAULT_WINDOW = 10


@dataclass(frozen=True)
class ScheduledPolicy:
    """An entry of the runtime policy schedule (the intrusion detection tool's input)."""
    at: int
    kind: PolicyKind
    body: object
    scope: Scope = ALL


class Simulation:
    def __init__(self, topology: Topology, model: TrafficModel, seed: int = 0, *,
                 window: int = DEFAULT_WINDOW, latency: int = DEFAULT_LATENCY,
                 heartbeat_timeout: int | None = None, attacks=(), failures=(), policies=(),
                 default_params: ResponseParams | None = None):
        self.seed = seed
        self.window = window
        self.engine = Engine(topology, latency)
        self.attacks = list(attacks)
        self.failures = list(failures)
        self.policies = list(policies)
        self.heartbeat_timeout = heartbeat_timeout if heartbeat_timeout is not None else 3 * window
        self.default_params = default_params or ResponseParams.for_window(window)
        self.alive = set(topology.nodes)
        self.ops = {n: Counter() for n in topology.nodes}

        bs = topology.base_station
        self.bpdp = BaseAgent(self, bs, self.heartbeat_timeout)
        self.agents = {bs: self.bpdp}
        for r in topology.by_role(Role.REGIONAL):
            self.agents[r] = RegionalAgent(self, r)
        for c in topology.by_role(Role.CLUSTER):
            self.agents[c] = LocalAgent(self, c)
        self.generator = TrafficGenerator(model, topology.by_role(Role.SENSOR), seed, self.attacks)

        e = self.engine
        e.register(EventKind.TIMER_FIRE, self._on_timer)
        e.register(EventKind.TRAFFIC_RECORD, self._on_traffic)
        e.register(EventKind.MESSAGE_DELIVER, self._on_message)
        e.register(EventKind.NODE_FAIL, self._on_fail)
        self._started = False
        self._finished = False

    @property
    def topology(self) -> Topology:
        return self.engine.topology

    def start(self) -> None:
        if self._started:
            return
        self._started = True
        e = self.engine
        bs = self.bpdp.node
        e.timer(0, bs, "start")
        for i, p in enumerate(self.policies):
            e.timer(p.at, bs, "policy", i)
        e.timer(0, bs, "traffic")
        for c in self.topology.by_role(Role.CLUSTER):
            e.timer(self.window, c, "window")
        for r in self.topology.by_role(Role.REGIONAL):
            e.timer(self.window, r, "window")
        for a in sorted(self.attacks, key=lambda a: (a.start, a.attacker)):
            e.at(a.start, EventKind.ATTACK_START, a.attacker, a)
            e.at(a.stop, EventKind.ATTACK_STOP, a.attacker, a)
        for tick, node in sorted(self.failures):
            e.at(tick, EventKind.NODE_FAIL, node)
        self.bpdp.start()

    def run(self, until: int) -> EventLog:
        self.start()
        return self.engine.run_until(until)

    def finish(self) -> EventLog:
        """Append per-node operation counters; call once after the last run()."""
        if not self._finished:
            self._finished = True
            for n in sorted(self.topology.nodes):
                c = self.ops[n]
                self.engine.emit("OpCount", n, ("role", self.topology.role(n)),
                                 ("total", sum(c.values())), *((op, c[op]) for op in OPS))
        return self.engine.log

    # handlers
    def _on_timer(self, ev) -> None:
        t = ev.payload
        now = self.engine.now
        if t.name == "traffic":
            topo = self.topology
            for rec in self.generator.records_for_tick(now, lambda s: topo.node(s).parent):
                self.engine.at(now, EventKind.TRAFFIC_RECORD, rec.src, rec)
            self.engine.timer(now + 1, ev.subject, "traffic")
        elif t.name == "window":
            if ev.subject in self.alive:
                self.agents[ev.subject].on_window(now)
                self.engine.timer(now + self.window, ev.subject, "window")
        elif t.name == "policy":
            p = self.policies[t.data]
            self.bpdp.issue(p.kind, p.body, p.scope)
        elif t.name == "hb_check":
            self.bpdp.check(now)
        elif t.name == "start":
            self._log_header()

    def _log_header(self) -> None:
        e = self.engine
        bs = self.bpdp.node
        e.emit("RunConfig", bs, ("seed", self.seed), ("window", self.window),
               ("latency", e.latency), ("timeout", self.heartbeat_timeout))
        for n in sorted(self.topology.nodes):
            node = self.topology.node(n)
            e.emit("Node", n, ("role", node.role), ("parent", node.parent), ("label", node.label))

    def _on_traffic(self, ev) -> None:
        rec = ev.payload
        cluster = self.topology.node(rec.src).parent
        if cluster not in self.alive:
            self.engine.emit("Lost", cluster, ("src", rec.src), ("packets", rec.size))
            return
        self.agents[cluster].on_traffic(rec)

    def _on_message(self, ev) -> None:
        d = ev.payload
        if d.dst not in self.alive:
            self.engine.emit("Drop", d.dst, ("from", d.src), ("reason", "dead"))
            return
        self.agents[d.dst].on_message(d)

    def _on_fail(self, ev) -> None:
        self.alive.discard(ev.subject)
