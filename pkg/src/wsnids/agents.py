"""Policy agents: LPA at cluster nodes, RPA at regional nodes, BPDP at the base station.

Agents never touch each other's state; everything crosses the tree as a
message through :meth:`Engine.deliver`.  The one exception is takeover
reprovisioning, which the base station applies atomically between event
dispatches.
"""
from __future__ import annotations

from dataclasses import dataclass

from .engine import Delivery
from .errors import NoSuccessor, StaleVersion
from .ida import Alert, AlertKind, anomaly_score, detect_anomaly, preprocess, signature_match
from .policy import (AgentRole, Policy, PolicyKind, PolicyRepository, Scope, ALL, issue_policy,
                     policy_targets)
from .response import (Action, NodeClass, NodeClassState, admits_traffic, change_reason,
                       in_reobservation, transition, watchdog_verdict)
from .survivability import HeartbeatState, detect_failure, select_successor, transfer_control
from .topology import Role

OPS = ("wake", "preprocess", "signature_match", "anomaly_score", "detect_anomaly",
       "watchdog_verdict", "transition", "postprocess", "apply_policy")


# --- messages -------------------------------------------------------------

@dataclass(frozen=True)
class Report:
    """Per-window LPA report; doubles as the LPA heartbeat."""
    window_end: int
    vectors: tuple = ()       # vectors with no finding at the LPA
    states: tuple = ()
    reobs: tuple = ()         # observations of reconnected suspects

    def log_fields(self):
        return (("window", self.window_end), ("vectors", len(self.vectors)),
                ("states", len(self.states)), ("reobs", len(self.reobs)))


@dataclass(frozen=True)
class RegionReport:
    window_end: int
    lpas: tuple = ()
    states: tuple = ()
    reobs: tuple = ()

    def log_fields(self):
        return (("window", self.window_end), ("lpas", self.lpas),
                ("states", len(self.states)), ("reobs", len(self.reobs)))


@dataclass(frozen=True)
class AlertMsg:
    alert: Alert

    def log_fields(self):
        return self.alert.log_fields()


@dataclass(frozen=True)
class RedAlertMsg:
    alert: Alert
    state: NodeClassState

    def log_fields(self):
        return (("node", self.alert.subject), ("origin", self.alert.origin_agent))


@dataclass(frozen=True)
class MaliciousReport:
    node: int
    reporter: int

    def log_fields(self):
        return (("node", self.node), ("reporter", self.reporter))


@dataclass(frozen=True)
class PolicyMsg:
    policy: Policy
    apply: bool = True
    forward: tuple = ()

    def log_fields(self):
        return self.policy.log_fields() + (("apply", self.apply), ("forward", self.forward))


# --- agents ---------------------------------------------------------------

class Agent:
    role: AgentRole

    def __init__(self, sim, node: int):
        self.sim = sim
        self.node = node
        self.repo = PolicyRepository(node)

    @property
    def engine(self):
        return self.sim.engine

    @property
    def topology(self):
        return self.sim.engine.topology

    @property
    def alive(self) -> bool:
        return self.node in self.sim.alive

    def count(self, op: str, n: int = 1) -> None:
        self.sim.ops[self.node][op] += n

    def emit(self, kind: str, subject: int, *fields) -> None:
        self.engine.emit(kind, subject, *fields)

    def send_up(self, msg) -> None:
        self.engine.deliver(self.node, self.topology.node(self.node).parent, msg)

    def apply(self, p: Policy) -> bool:
        self.count("apply_policy")
        try:
            self.repo.add(p)
        except StaleVersion as exc:
            self.emit("StaleVersion", self.node, ("version", p.version),
                      ("high_water", exc.high_water))
            return False
        self.emit("PolicyApplied", self.node, *p.log_fields())
        self.policy_changed()
        return True

    def restore(self, entries) -> None:
        self.repo.restore(entries)
        self.emit("Restore", self.node, ("entries", len(self.repo.entries)),
                  ("high_water", self.repo.high_water))
        self.policy_changed()

    def policy_changed(self) -> None:
        pass

    def inspect(self, v, db, profile) -> list[Alert]:
        """Signature processor, then the anomaly processor on a miss."""
        now = self.engine.now
        self.count("signature_match")
        sig = signature_match(v, db)
        if sig is not None:
            return [Alert(AlertKind.MISUSE, self.node, v.node, now, sig, None, self.role.value)]
        if profile is None:
            return []
        self.count("anomaly_score")
        scores = anomaly_score(v, profile)
        self.count("detect_anomaly")
        hit = detect_anomaly(scores, profile)
        if hit is None:
            return []
        return [Alert(AlertKind.ANOMALY, self.node, v.node, now, hit[0], hit[1], self.role.value)]

    def on_message(self, d: Delivery) -> None:
        raise NotImplementedError

    def on_window(self, now: int) -> None:
        pass


class LocalAgent(Agent):
    """LPA: observes its cluster's raw traffic and owns the sensors' class states."""
    role = AgentRole.LPA

    def __init__(self, sim, node):
        super().__init__(sim, node)
        self.states: dict[int, NodeClassState] = {}
        self.observe_from: dict[int, int] = {}
        self.buckets: dict[int, list] = {}
        self.local_bans: set[int] = set()
        self._repo_bans: set[int] = set()
        for s in self.topology.children(node):
            self.states[s] = NodeClassState(s, NodeClass.FRESH, 0)
            self.observe_from[s] = 0

    def policy_changed(self) -> None:
        self._repo_bans = self.repo.bans()

    def banned(self, node: int) -> bool:
        return node in self.local_bans or node in self._repo_bans

    @property
    def params(self):
        return self.repo.params(self.sim.default_params)

    def adopt(self, node: int, now: int) -> NodeClassState:
        st = self.states.get(node)
        if st is None:
            st = self.states[node] = NodeClassState(node, NodeClass.FRESH, now)
            self.observe_from[node] = now
        return st

    def install_states(self, states, now: int) -> None:
        for st in states:
            self.states[st.node] = st
            self.observe_from[st.node] = now
            self.emit("StateInstall", st.node, ("lpa", self.node), *st.log_fields())

    def on_traffic(self, rec) -> None:
        now = self.engine.now
        src = rec.src
        if self.banned(src):
            self.emit("Discard", self.node, ("src", src), ("packets", rec.size), ("reason", "banned"))
            return
        self.buckets.setdefault(rec.tick // self.sim.window, []).append(rec)
        st = self.adopt(src, now)
        if admits_traffic(st, now):
            self.emit("Forward", self.node, ("src", src), ("packets", rec.size))
        else:
            self.emit("Discard", self.node, ("src", src), ("packets", rec.size),
                      ("reason", "quarantine"))

    def on_window(self, now: int) -> None:
        self.count("wake")
        w = self.sim.window
        start = now - w
        raw = self.buckets.pop(start // w, [])
        for k in [k for k in self.buckets if k < start // w]:
            del self.buckets[k]
        raw = [r for r in raw
               if self.observe_from.get(r.src, now) <= start and not self.banned(r.src)]
        self.count("preprocess")
        vectors = preprocess(raw, w, now)

        db = self.repo.signatures()
        profile = self.repo.profile()
        params = self.params
        findings, unmatched, reobs, changes = [], [], [], []
        for v in vectors:
            found = self.inspect(v, db, profile)
            if not found:
                unmatched.append(v)
            findings.extend(found)
            self.count("watchdog_verdict")
            obs = watchdog_verdict(v, found, params)
            old = self.states[v.node]
            self.emit("Observe", v.node, ("lpa", self.node), ("window", now),
                      ("verdict", obs.verdict), ("class", old.cls))
            if in_reobservation(old, now):
                reobs.append(obs)
            self.count("transition")
            new, actions = transition(old, obs, now, params)
            self.states[v.node] = new
            if new.cls is not old.cls:
                self.emit("ClassChange", v.node, ("lpa", self.node), ("from", old.cls),
                          ("to", new.cls), ("reason", change_reason(old, new, obs, params)),
                          ("banned_until", new.banned_until))
            changes.append((new, actions))
        self.postprocess(findings, changes)
        self.send_up(Report(now, tuple(unmatched),
                            tuple(self.states[s] for s in sorted(self.states)), tuple(reobs)))

    def postprocess(self, findings, changes) -> None:
        self.count("postprocess")
        now = self.engine.now
        for a in findings:
            self.emit("Alert", self.node, *a.log_fields())
            self.send_up(AlertMsg(a))
        for state, actions in changes:
            if Action.EMIT_RED_ALERT in actions:
                red = Alert(AlertKind.RED_ALERT, self.node, state.node, now, None, None, "LPA")
                self.emit("RedAlert", state.node, ("lpa", self.node),
                          ("banned_until", state.banned_until))
                self.send_up(RedAlertMsg(red, state))
            if Action.PERMANENT_BAN in actions:
                self.on_malicious(state.node)

    def on_malicious(self, node: int) -> None:
        self.local_bans.add(node)
        self.emit("LocalBan", node, ("lpa", self.node))
        self.send_up(MaliciousReport(node, self.node))

    def on_message(self, d: Delivery) -> None:
        self.count("wake")
        msg = d.msg
        if isinstance(msg, PolicyMsg):
            self.apply(msg.policy)


class RegionalAgent(Agent):
    """RPA: inspects what its LPAs pass up, relays alerts, forwards policies down."""
    role = AgentRole.RPA

    def __init__(self, sim, node):
        super().__init__(sim, node)
        self.mirror: dict[int, NodeClassState] = {}
        self._heard: dict[int, None] = {}
        self._states: dict[int, NodeClassState] = {}
        self._reobs: list = []

    def install_states(self, states, now: int) -> None:
        for st in states:
            self.mirror[st.node] = st
            self._states[st.node] = st

    def on_message(self, d: Delivery) -> None:
        self.count("wake")
        msg = d.msg
        if isinstance(msg, Report):
            self._heard[d.src] = None
            for st in msg.states:
                self.mirror[st.node] = st
                self._states[st.node] = st
            self._reobs.extend(msg.reobs)
            self.count("preprocess")
            findings = []
            db, profile = self.repo.signatures(), self.repo.profile()
            for v in msg.vectors:
                findings.extend(self.inspect(v, db, profile))
            self.count("postprocess")
            for a in findings:
                self.emit("Alert", self.node, *a.log_fields())
                self.send_up(AlertMsg(a))
        elif isinstance(msg, RedAlertMsg):
            self.mirror[msg.state.node] = msg.state
            self._states[msg.state.node] = msg.state
            self.send_up(msg)
        elif isinstance(msg, (AlertMsg, MaliciousReport)):
            self.send_up(msg)
        elif isinstance(msg, PolicyMsg):
            if msg.apply:
                self.apply(msg.policy)
            kids = set(self.topology.children(self.node))
            for c in msg.forward:
                if c in kids:
                    self.engine.deliver(self.node, c, PolicyMsg(msg.policy, True, ()))
                else:
                    self.emit("Drop", c, ("at", self.node), ("reason", "not_child"),
                              ("version", msg.policy.version))

    def on_window(self, now: int) -> None:
        self.count("wake")
        self.send_up(RegionReport(now, tuple(self._heard),
                                  tuple(self._states[s] for s in sorted(self._states)),
                                  tuple(self._reobs)))
        self._heard.clear()
        self._states.clear()
        self._reobs.clear()


class BaseAgent(Agent):
    """BPDP: sole policy issuer, authoritative backup, failure detector."""
    role = AgentRole.BPDP

    def __init__(self, sim, node, heartbeat_timeout: int):
        super().__init__(sim, node)
        self.heartbeats = HeartbeatState(heartbeat_timeout)
        self.mirror: dict[int, NodeClassState] = {}
        self.controller: dict[int, int] = {}
        self.known_failed: set[int] = set()
        self.ban_policies: dict[int, Policy] = {}
        self.takeovers: list = []
        self._checks: set[int] = set()
        for n in self.topology.by_role(Role.REGIONAL) + self.topology.by_role(Role.CLUSTER):
            self.heartbeats.beat(n, 0)

    def start(self) -> None:
        self.schedule_check(self.heartbeats.timeout + 1)

    def schedule_check(self, tick: int) -> None:
        if tick not in self._checks:
            self._checks.add(tick)
            self.engine.timer(tick, self.node, "hb_check")

    # policy issue and dissemination
    def issue(self, kind: PolicyKind, body, scope: Scope = ALL) -> Policy:
        p = issue_policy(self.repo, kind, body, scope)
        self.emit("PolicyIssued", self.node, *p.log_fields())
        self.disseminate(p)
        return p

    def disseminate(self, p: Policy) -> None:
        topo = self.topology
        targets = policy_targets(p.scope, topo, self.controller)
        for r in topo.by_role(Role.REGIONAL):
            if r in self.known_failed:
                continue
            lpas = tuple(c for c in topo.children(r) if c in targets and c not in self.known_failed)
            here = r in targets
            if here or lpas:
                self.engine.deliver(self.node, r, PolicyMsg(p, here, lpas))

    def ban(self, node: int) -> None:
        existing = self.ban_policies.get(node)
        if existing is not None:
            self.disseminate(existing)
            return
        self.ban_policies[node] = self.issue(PolicyKind.BAN_ENTRY, node, ALL)

    def on_message(self, d: Delivery) -> None:
        self.count("wake")
        msg = d.msg
        now = self.engine.now
        if isinstance(msg, RegionReport):
            self.heartbeats.beat(d.src, now)
            for lpa in msg.lpas:
                self.heartbeats.beat(lpa, now)
            for st in msg.states:
                self.mirror[st.node] = st
            for o in msg.reobs:
                self.emit("Reobserve", o.node, ("verdict", o.verdict), ("window", o.at))
            self.schedule_check(now + self.heartbeats.timeout + 1)
        elif isinstance(msg, AlertMsg):
            self.emit("AlertRecorded", self.node, *msg.alert.log_fields())
        elif isinstance(msg, RedAlertMsg):
            self.mirror[msg.state.node] = msg.state
            self.emit("RedAlertRecorded", msg.alert.subject, ("lpa", msg.alert.origin_agent))
        elif isinstance(msg, MaliciousReport):
            self.ban(msg.node)

    # survivability
    def check(self, now: int) -> None:
        self.count("wake")
        for f in detect_failure(self.topology, self.heartbeats, now, self.known_failed):
            self.takeover(f, now)

    def takeover(self, failed: int, now: int) -> None:
        self.known_failed.add(failed)
        self.emit("FailureDetected", failed, ("last_report", self.heartbeats.last_report.get(failed, 0)),
                  ("timeout", self.heartbeats.timeout))
        live = lambda p: p not in self.known_failed and not self.heartbeats.expired(p, now)
        try:
            successor = select_successor(self.topology, failed, live)
        except NoSuccessor:
            self.emit("Orphaned", failed, ("subtree", tuple(self.topology.children(failed))))
            return
        new_t, reprov, rec = transfer_control(self.topology, failed, successor, now, self.repo,
                                              self.controller, self.mirror)
        self.sim.engine.topology = new_t
        for rp in reprov:
            agent = self.sim.agents[rp.target]
            agent.restore(rp.entries)
            if rp.states:
                agent.install_states(rp.states, now)
        self.takeovers.append(rec)
        self.emit("Takeover", self.node, *rec.log_fields())
        if new_t.role(successor) is Role.REGIONAL:
            for c in rec.transferred:
                self.heartbeats.beat(c, now)
            self.schedule_check(now + self.heartbeats.timeout + 1)
