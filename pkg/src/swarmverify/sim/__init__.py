"""Discrete-event simulation of a verifying swarm."""

from .config import AgentConfig, ChannelConfig, ScenarioConfig, load_scenario, scenario_from_dict
from .engine import EventRecord, GroundTruth, ReachRecord, RunResult, run_scenario
from .metrics import AuditReport, Metrics, metrics_report, soundness_audit
from .scenarios import BUILTINS

__all__ = [
    "AgentConfig",
    "AuditReport",
    "BUILTINS",
    "ChannelConfig",
    "EventRecord",
    "GroundTruth",
    "Metrics",
    "ReachRecord",
    "RunResult",
    "ScenarioConfig",
    "load_scenario",
    "metrics_report",
    "run_scenario",
    "scenario_from_dict",
    "soundness_audit",
]
