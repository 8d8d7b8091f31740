"""Deterministic simulator of cellular access, authentication, and handover
security procedures, with scripted attacker agents and a sync-signal
authentication defense for the handover decision."""

from .metrics import MetricsSummary, scan_cleartext, summarize
from .runner import RunResult, build_engine, run_scenario
from .scenario import Scenario, ScenarioError, load_scenario

__version__ = "0.1.0"

__all__ = [
    "MetricsSummary",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "build_engine",
    "load_scenario",
    "run_scenario",
    "scan_cleartext",
    "summarize",
    "__version__",
]
