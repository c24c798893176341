import json
import subprocess
import sys

import pytest

from wsnids.cli import main
from wsnids.errors import ParseError, ValidationError
from wsnids.engine import EventLog
from wsnids.report import AttackResult, RunReport, build_report, emit_report, parse_report
from wsnids.runner import run_scenario
from wsnids.scenario import load_scenario, parse_scenario

from conftest import PROFILE, scenario_text

MINIMAL = "[topology]\nregions = 1\nclusters_per_region = 1\nsensors_per_cluster = 1\n"


def test_minimal_file():
    s = parse_scenario(MINIMAL)
    assert len(s.topology) == 4
    assert s.attacks == [] and s.failures == [] and s.policies == []
    assert s.length == 1000 and s.window == 10


def test_attack_on_undeclared_node():
    text = scenario_text(attacks=["start=10 stop=20 node=S99 kind=flood multiplier=5"])
    with pytest.raises(ValidationError) as exc:
        parse_scenario(text)
    assert any("S99" in v for v in exc.value.violations)


def test_zero_run_length():
    with pytest.raises(ValidationError) as exc:
        parse_scenario(scenario_text(length=0))
    assert any("run length >= 1" in v for v in exc.value.violations)


def test_all_violations_listed():
    text = scenario_text(length=100, attacks=["start=10 stop=200 node=S99 kind=replay"],
                         failures=["at=50 node=S1"])
    with pytest.raises(ValidationError) as exc:
        parse_scenario(text)
    v = exc.value.violations
    assert len(v) >= 3
    assert any("S99" in x for x in v) and any("stop=200" in x for x in v)
    assert any("S1" in x and "Regional" in x for x in v)


@pytest.mark.parametrize("text,line,field", [
    ("[topology]\nregions 2\n", 2, None),
    ("[bogus]\n", 1, None),
    (MINIMAL + "[attacks]\nstart=1 stop=x node=S1 kind=flood\n", 6, "stop"),
    (MINIMAL + "[attacks]\nstart=1 stop=5 node=S1 kind=teleport\n", 6, "kind"),
    (MINIMAL + "[policies]\nat=0 kind=profile pkt_rate=2.0\n", 6, "pkt_rate"),
    ("regions = 1\n", 1, None),
])
def test_parse_errors_carry_location(text, line, field):
    with pytest.raises(ParseError) as exc:
        parse_scenario(text)
    assert exc.value.line == line
    assert exc.value.field == field
    assert f"line {line}" in str(exc.value)


def test_policy_lines():
    text = scenario_text(policies=[
        f"at=0 {PROFILE}",
        "at=5 kind=signature scope=region:R2 id=s7 match=tag:s7 desc=beacon",
        "at=6 kind=params probation=30 ban=40",
        "at=7 kind=ban scope=cluster:C1 node=S2",
    ])
    s = parse_scenario(text)
    kinds = [p.kind.value for p in s.policies]
    assert kinds == ["ProfileUpdate", "SignatureUpdate", "ResponseParams", "BanEntry"]
    assert str(s.policies[1].scope) == "Region:2"
    assert s.policies[2].body.probation_ticks == 30 and s.policies[2].body.unstable_ticks == 50
    assert s.policies[3].body == s.topology.resolve("S2")


def test_short_heartbeat_timeout_rejected():
    with pytest.raises(ValidationError, match="heartbeat"):
        parse_scenario(scenario_text(extra_run=["heartbeat_timeout = 15"]))


def test_run_is_deterministic_per_seed():
    s = parse_scenario(scenario_text(policies=[f"at=0 {PROFILE}"], length=400))
    a, ra = run_scenario(s, 1)
    b, rb = run_scenario(s, 1)
    c, _ = run_scenario(s, 2)
    assert a.text() == b.text() and ra == rb
    assert a.digest() != c.digest()


def test_report_roundtrip_and_pure_fold(tmp_path):
    s = parse_scenario(scenario_text(
        policies=[f"at=0 {PROFILE}", "at=0 kind=signature scope=all id=s7 match=tag:s7"],
        attacks=["start=50 stop=150 node=S1 kind=known_signature sig=s7"],
        failures=["at=305 node=R1"], length=600))
    log, report = run_scenario(s, 4)
    assert parse_report(emit_report(report, "machine")) == report
    path = tmp_path / "e.log"
    log.write(path)
    assert build_report(EventLog.read(path)) == report
    (atk,) = report.attacks
    assert atk.detection_latency == atk.first_alert_at - atk.injected_at == 10


def test_empty_report_is_header_only():
    out = emit_report(RunReport(), "table")
    assert out.strip().splitlines() == [out.strip()]
    assert out.startswith("attacker")


def test_one_detected_attack_one_row():
    s = parse_scenario(scenario_text(
        policies=["at=0 kind=signature scope=all id=s7 match=tag:s7"],
        attacks=["start=50 stop=150 node=S1 kind=known_signature sig=s7"], length=200))
    _, report = run_scenario(s, 1)
    lines = emit_report(report, "table").splitlines()
    rows = lines[1:lines.index("")]
    assert len(rows) == 1 and rows[0].split()[-3:] == ["10", "LPA", "Misuse"]


def test_undetected_attack_highlighted_only_with_color():
    r = RunReport(attacks=[AttackResult(7, "flood", 50, 150)])
    assert "\x1b" not in emit_report(r, "table", color=False)
    assert "\x1b[31m" in emit_report(r, "table", color=True)


# CLI

def write(tmp_path, text, name="s.scn"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cli_exit_codes(tmp_path, capsys):
    good = write(tmp_path, scenario_text(length=100))
    assert main(["validate", "--scenario", good]) == 0
    assert main(["validate", "--scenario", write(tmp_path, "[nope]\n", "p.scn")]) == 3
    assert main(["validate", "--scenario", write(tmp_path, scenario_text(length=0), "v.scn")]) == 4
    assert main(["validate", "--scenario", str(tmp_path / "missing.scn")]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert "run length" in err


def test_cli_runtime_failure_exit_code(tmp_path, monkeypatch):
    import wsnids.cli as cli

    def boom(*a, **k):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(cli, "run_scenario", boom)
    good = write(tmp_path, scenario_text(length=50))
    assert main(["run", "--scenario", good, "--out", str(tmp_path / "o")]) == 5


def test_cli_run_and_report(tmp_path, capsys):
    scn = write(tmp_path, scenario_text(
        policies=["at=0 kind=signature scope=all id=s7 match=tag:s7"],
        attacks=["start=50 stop=150 node=S1 kind=known_signature sig=s7"], length=300))
    out = tmp_path / "out"
    assert main(["run", "--scenario", scn, "--seed", "3", "--until", "200", "--out", str(out)]) == 0
    assert (out / "events-seed3.log").exists() and (out / "report-seed3.json").exists()
    table = capsys.readouterr().out
    assert "Misuse" in table
    assert main(["report", "--log", str(out / "events-seed3.log"), "--format", "machine"]) == 0
    machine = json.loads(capsys.readouterr().out)
    assert machine == json.loads((out / "report-seed3.json").read_text())
    assert machine["seed"] == 3
    last_tick = int((out / "events-seed3.log").read_text().splitlines()[-1].split("\t")[0])
    assert last_tick == 200


def test_cli_sweep(tmp_path, capsys):
    scn = write(tmp_path, scenario_text(length=120))
    out = tmp_path / "sw"
    assert main(["run", "--scenario", scn, "--sweep", "seeds=1..3", "--jobs", "2", "--out", str(out)]) == 0
    merged = json.loads((out / "sweep-report.json").read_text())
    assert [r["seed"] for r in merged] == [1, 2, 3]
    for seed in (1, 2, 3):
        assert (out / f"events-seed{seed}.log").exists()


def test_no_color_env(tmp_path):
    scn = write(tmp_path, scenario_text(
        attacks=["start=50 stop=150 node=S1 kind=known_signature sig=s7"], length=200))
    env = {"NO_COLOR": "1", "PATH": ""}
    proc = subprocess.run([sys.executable, "-m", "wsnids", "run", "--scenario", scn,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True, env=env)
    assert proc.returncode == 0
    assert "\x1b" not in proc.stdout
