"""Discrete-event simulator for policy-based hierarchical intrusion detection in WSNs."""
from .engine import Engine, Event, EventKind, EventLog
from .network import ScheduledPolicy, Simulation
from .report import RunReport, build_report, emit_report, parse_report
from .runner import run_scenario
from .scenario import Scenario, load_scenario, parse_scenario
from .topology import Role, Topology, TopologySpec, build_topology

__all__ = [
    "Engine", "Event", "EventKind", "EventLog", "RunReport", "Role", "Scenario",
    "ScheduledPolicy", "Simulation", "Topology", "TopologySpec", "build_report",
    "build_topology", "emit_report", "load_scenario", "parse_report", "parse_scenario",
    "run_scenario",
]

__version__ = "0.1.0"
