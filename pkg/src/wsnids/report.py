"""Run reports, computed as a pure fold over an event log."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields

from .engine import EventLog, format_value

RED = "\x1b[31m"
RESET = "\x1b[0m"


@dataclass
class AttackResult:
    attacker: int
    kind: str
    injected_at: int
    stopped_at: int
    first_alert_at: int | None = None
    detection_latency: int | None = None
    detector: str | None = None
    alert_kind: str | None = None


@dataclass
class TakeoverSummary:
    at: int
    failed: int
    successor: int
    transferred: list = field(default_factory=list)


@dataclass
class RunReport:
    seed: int | None = None
    window: int | None = None
    attacks: list = field(default_factory=list)
    evaluated_windows: int = 0
    clean_windows: int = 0
    false_positive_windows: int = 0
    false_positive_rate: float = 0.0
    anomaly_windows: int = 0
    isolation_violations: int = 0
    red_alerts: dict = field(default_factory=dict)
    suspect_entries: dict = field(default_factory=dict)
    op_counters: dict = field(default_factory=dict)
    takeovers: list = field(default_factory=list)


def _s(rec, key) -> str:
    return format_value(rec.get(key))


def _opt_int(text: str):
    return None if text == "-" else int(text)


def build_report(log: EventLog) -> RunReport:
    """Fold the log into a RunReport; works on live or re-parsed logs alike."""
    r = RunReport()
    attack_spans: dict[int, list[tuple[int, int]]] = {}
    results: list[AttackResult] = []
    first_alert: dict[int, list] = {}
    state: dict[int, tuple[str, int | None]] = {}
    anomaly_windows = set()
    observed = []

    for rec in log:
        k = rec.kind
        if k == "RunConfig":
            r.seed = int(_s(rec, "seed"))
            r.window = int(_s(rec, "window"))
        elif k == "AttackStart":
            start, stop = int(_s(rec, "start")), int(_s(rec, "stop"))
            attack_spans.setdefault(rec.subject, []).append((start, stop))
            results.append(AttackResult(rec.subject, _s(rec, "attack"), start, stop))
        elif k == "Alert":
            node = int(_s(rec, "node"))
            first_alert.setdefault(node, []).append(rec)
            if _s(rec, "alert") == "Anomaly" and _s(rec, "role") == "LPA":
                anomaly_windows.add((node, rec.tick))
        elif k == "Observe":
            observed.append((rec.subject, int(_s(rec, "window")), _s(rec, "verdict")))
        elif k == "ClassChange":
            to = _s(rec, "to")
            state[rec.subject] = (to, _opt_int(_s(rec, "banned_until")))
            if to == "Suspect":
                r.suspect_entries[rec.subject] = r.suspect_entries.get(rec.subject, 0) + 1
        elif k == "StateInstall":
            state[rec.subject] = (_s(rec, "class"), _opt_int(_s(rec, "banned_until")))
        elif k == "RedAlert":
            r.red_alerts[rec.subject] = r.red_alerts.get(rec.subject, 0) + 1
        elif k == "Forward":
            src = int(_s(rec, "src"))
            cls, until = state.get(src, ("Fresh", None))
            if cls == "Malicious" or (cls == "Suspect" and until is not None and rec.tick < until):
                r.isolation_violations += 1
        elif k == "Takeover":
            tr = _s(rec, "transferred")
            r.takeovers.append(TakeoverSummary(
                rec.tick, int(_s(rec, "failed")), int(_s(rec, "successor")),
                [] if tr == "-" else [int(x) for x in tr.split("|")]))
        elif k == "OpCount":
            counts = {}
            for key, v in rec.fields:
                if key != "role":
                    counts[key] = int(format_value(v))
            r.op_counters[rec.subject] = counts

    w = r.window or 1
    for res in results:
        horizon = res.stopped_at + w
        for a in first_alert.get(res.attacker, ()):
            if res.injected_at <= a.tick <= horizon:
                res.first_alert_at = a.tick
                res.detection_latency = a.tick - res.injected_at
                res.detector = _s(a, "role")
                res.alert_kind = _s(a, "alert")
                break
    r.attacks = results

    for node, end, verdict in observed:
        r.evaluated_windows += 1
        if (node, end) in anomaly_windows:
            r.anomaly_windows += 1
        spans = attack_spans.get(node, ())
        if any(s < end and end - w < e for s, e in spans):
            continue
        r.clean_windows += 1
        if verdict == "Misbehaving":
            r.false_positive_windows += 1
    if r.clean_windows:
        r.false_positive_rate = r.false_positive_windows / r.clean_windows
    return r


# serialisation

def to_dict(report: RunReport) -> dict:
    return asdict(report)


def from_dict(d: dict) -> RunReport:
    r = RunReport(**{f.name: d[f.name] for f in fields(RunReport) if f.name in d})
    r.attacks = [AttackResult(**a) for a in r.attacks]
    r.takeovers = [TakeoverSummary(**t) for t in r.takeovers]
    r.red_alerts = {int(k): v for k, v in r.red_alerts.items()}
    r.suspect_entries = {int(k): v for k, v in r.suspect_entries.items()}
    r.op_counters = {int(k): dict(v) for k, v in r.op_counters.items()}
    return r


def parse_report(text: str) -> RunReport:
    return from_dict(json.loads(text))


ATTACK_HEADER = ("attacker", "kind", "injected", "first_alert", "latency", "detector", "alert")


def _table(rows, header) -> list[str]:
    cells = [list(header)] + [[format_value(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]


def _is_empty(r: RunReport) -> bool:
    return not (r.attacks or r.takeovers or r.evaluated_windows or r.op_counters
                or r.isolation_violations)


def emit_report(report: RunReport, fmt: str = "table", color: bool = False) -> str:
    if fmt == "machine":
        return json.dumps(to_dict(report), sort_keys=False, separators=(",", ":")) + "\n"
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")

    rows = [(a.attacker, a.kind, a.injected_at, a.first_alert_at, a.detection_latency,
             a.detector, a.alert_kind) for a in report.attacks]
    lines = _table(rows, ATTACK_HEADER)
    if color:
        for i, a in enumerate(report.attacks, start=1):
            if a.first_alert_at is None:
                lines[i] = RED + lines[i] + RESET
    if _is_empty(report):
        return "\n".join(lines) + "\n"

    lines.append("")
    rate = f"{100 * report.false_positive_rate:.3f}%"
    lines.append(f"evaluated windows       {report.evaluated_windows}")
    lines.append(f"false-positive windows  {report.false_positive_windows} of "
                 f"{report.clean_windows} clean ({rate})")
    lines.append(f"isolation violations    {report.isolation_violations}")
    lines.append(f"red alerts              {sum(report.red_alerts.values())}")
    if report.takeovers:
        lines.append("")
        lines += _table([(t.at, t.failed, t.successor, t.transferred) for t in report.takeovers],
                        ("tick", "failed", "successor", "transferred"))
    if report.op_counters:
        lines.append("")
        top = sorted(report.op_counters.items(), key=lambda kv: (-kv[1].get("total", 0), kv[0]))
        busy = [(n, c.get("total", 0)) for n, c in top if c.get("total", 0)]
        idle = sum(1 for _, c in report.op_counters.items() if not c.get("total", 0))
        lines += _table(busy, ("node", "ids_ops"))
        lines.append(f"nodes with zero IDS operations: {idle}")
    return "\n".join(lines) + "\n"
