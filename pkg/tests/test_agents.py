from wsnids.policy import PolicyKind
from wsnids.response import NodeClass
from wsnids.runner import run_scenario
from wsnids.scenario import parse_scenario

from conftest import PROFILE, scenario_text

SIG = "at=0 kind=signature scope=all id=s7 match=tag:s7"


def sig_scenario(attacks, length, **kw):
    return parse_scenario(scenario_text(policies=[f"at=0 {PROFILE}", SIG], attacks=attacks,
                                        length=length, **kw))


def test_two_malicious_nodes_get_distinct_ban_versions():
    s = sig_scenario(["start=50 stop=400 node=S1 kind=known_signature sig=s7",
                      "start=50 stop=400 node=S2 kind=known_signature sig=s7"], 400)
    log, _ = run_scenario(s, 1)
    issued = [r for r in log.of_kind("PolicyIssued") if r["kind"] is PolicyKind.BAN_ENTRY]
    assert sorted(r["body"] for r in issued) == ["7", "8"]
    assert len({r["version"] for r in issued}) == 2
    assert {r.tick for r in log.of_kind("LocalBan")} == {260}


def test_re_reported_ban_is_a_stale_no_op():
    s = sig_scenario(["start=50 stop=300 node=S1 kind=known_signature sig=s7"], 300)
    sim = s.simulation(1)
    sim.run(300)
    s1 = s.topology.resolve("S1")
    (ban,) = [p for p in sim.bpdp.repo.entries if p.kind is PolicyKind.BAN_ENTRY]
    sim.bpdp.ban(s1)
    sim.run(310)
    stale = [r for r in sim.engine.log.of_kind("StaleVersion") if r.tick > 300]
    assert len(stale) == 6 and {int(r["version"]) for r in stale} == {ban.version}
    for agent in sim.agents.values():
        bans = [p for p in agent.repo.entries if p.kind is PolicyKind.BAN_ENTRY]
        assert [p.version for p in bans] == [ban.version]


def test_ban_reaches_every_agent_four_hops_after_label():
    s = sig_scenario(["start=50 stop=300 node=S1 kind=known_signature sig=s7"], 300)
    log, _ = run_scenario(s, 1)
    mal = next(r for r in log.of_kind("ClassChange") if r["to"] is NodeClass.MALICIOUS)
    applied = [r for r in log.of_kind("PolicyApplied") if r["kind"] is PolicyKind.BAN_ENTRY]
    assert mal.tick == 260
    assert sorted({r.tick for r in applied}) == [263, 264]
    assert len(applied) == 6


def test_reconnected_suspect_is_watched_by_upper_layers():
    # a short signature burst sends S1 to Suspect; it behaves after the ban
    s = sig_scenario(["start=50 stop=60 node=S1 kind=known_signature sig=s7"], 700)
    log, _ = run_scenario(s, 2)
    s1 = s.topology.resolve("S1")
    changes = [(r.tick, r["to"], r["reason"]) for r in log.of_kind("ClassChange") if r.subject == s1]
    assert changes[:2] == [(60, NodeClass.SUSPECT, "misbehave"),
                           (360, NodeClass.UNSTABLE, "reobserved")]
    reobs = [r for r in log.of_kind("Reobserve") if r.subject == s1]
    windows = sorted(int(r["window"]) for r in reobs)
    # ban ends at 260; verdicts from 260 through the reconnecting one at 360 reach the BPDP
    assert windows == list(range(260, 370, 10))
    # copies ride the RPA's next region report: one window plus one hop later
    assert all(r.tick - int(r["window"]) == s.window + 1 for r in reobs)


def test_mirrored_states_follow_lpa_reports():
    s = sig_scenario(["start=50 stop=60 node=S1 kind=known_signature sig=s7"], 200)
    sim = s.simulation(2)
    sim.run(200)
    s1 = s.topology.resolve("S1")
    lpa = sim.agents[s.topology.node(s1).parent]
    assert sim.bpdp.mirror[s1].cls is lpa.states[s1].cls is NodeClass.SUSPECT
    assert sim.agents[s.topology.resolve("R1")].mirror[s1] == lpa.states[s1]
