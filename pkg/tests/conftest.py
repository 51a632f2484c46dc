from __future__ import annotations

import time
from dataclasses import dataclass

import pytest
from hypothesis import HealthCheck, settings

from swarmverify.sim.config import ScenarioConfig
from swarmverify.sim.engine import RunResult, run_scenario
from swarmverify.sim.scenarios import search_mission

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@dataclass
class TimedRun:
    cfg: ScenarioConfig
    result: RunResult
    seconds: float


@pytest.fixture(scope="session")
def nominal_run() -> TimedRun:
    """The 8-quadcopter search mission, simulated once per session."""
    cfg = search_mission(8, seed=0)
    start = time.perf_counter()
    result = run_scenario(cfg)
    return TimedRun(cfg, result, time.perf_counter() - start)


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def criterion(request):
    """Record one acceptance line: ``criterion(n, title, ok, detail)``."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(n: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}" + (f": {detail}" if detail else "")
        lines[n] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
