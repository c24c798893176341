"""Run orchestration: scenario + seed -> (event log, report)."""
from __future__ import annotations

from .engine import EventLog
from .report import RunReport, build_report
from .scenario import Scenario


def run_scenario(s: Scenario, seed: int, until: int | None = None) -> tuple[EventLog, RunReport]:
    """Execute one deterministic run; ``until`` overrides the scenario length."""
    sim = s.simulation(seed)
    sim.run(s.length if until is None else until)
    log = sim.finish()
    return log, build_report(log)
