"""Scenario configuration: dataclasses plus the YAML document loader.

Document schema (times in seconds unless a key ends in ``_ms``)::

    duration: 60.0                # hard stop, simulated seconds
    seed: 0
    safe_distance: 100.0          # l
    position_axes: [0, 2]
    stop_when_done: true          # end once every agent finished its waypoints
    truth_dt: 0.001
    channel:
      delay_min: 0.0005
      delay_max: 0.003
      drop_prob: 0.0
      corrupt_prob: 0.0
      fixed_delay: null           # null | seconds | "profile" (use recipient tau_tf)
    timing_profile: {tau_e: 0.05, tau_d: 0.02, tau_tf: 1.5, tau_c: 0.05,
                     tau_control: 5.0, t_runtime: 10.0}      # ms
    global_unsafe:                # rows over the stacked state, agents by ascending id
      rows: [{coeffs: [...], bound: 0.0}]
    agent_defaults: {...}         # any agent key below
    agents:
      - id: 0
        model: quadcopter4d
        initial_state: [0, 0, 0, 0]
        waypoints: [[0, 300], [150, 300]]
        input: null               # fixed input for models without a controller
        gains: {kp: [0.3, 0.3], ki: [0.0001, 0.0001], kd: [0.5, 0.5], output_clamp: 0.35}
        delta: 0.003
        clock_offset: null        # null draws uniformly from [-delta, delta]
        control_period: 0.2
        horizon: 2.0
        h0: 0.1
        budget: {mode: deterministic, limit: 2}
        sensor_bloat: null        # null = 2 % GPS rule; or a per-axis list
        local_unsafe: {rows: [...]}
        waypoint_tolerance: 10.0
        timing_profile: {...}     # per-agent override
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import yaml

from ..dynamics import PidGains, get_model
from ..errors import ConfigError, SwarmVerifyError
from ..geometry import LinearConstraintSet
from ..reach import RuntimeBudget
from ..verify import TimingProfile


@dataclass(frozen=True)
class AgentConfig:
    id: int
    initial_state: tuple[float, ...]
    model: str = "quadcopter4d"
    waypoints: tuple[tuple[float, float], ...] = ()
    input: Optional[tuple[float, ...]] = None
    gains: PidGains = PidGains()
    delta: float = 0.003
    clock_offset: Optional[float] = None
    control_period: float = 0.2
    horizon: float = 2.0
    h0: float = 0.1
    budget: RuntimeBudget = RuntimeBudget()
    sensor_bloat: Optional[tuple[float, ...]] = None
    local_unsafe: Optional[LinearConstraintSet] = None
    waypoint_tolerance: float = 10.0
    timing_profile: Optional[TimingProfile] = None

    def __post_init__(self) -> None:
        model = get_model(self.model)
        if len(self.initial_state) != model.state_dim:
            raise ConfigError(
                f"agent {self.id}: initial_state has {len(self.initial_state)} values, "
                f"{self.model} needs {model.state_dim}"
            )
        if not self.control_period > 0:
            raise ConfigError(f"agent {self.id}: control_period must be positive")
        if not self.horizon > self.control_period:
            raise ConfigError(f"agent {self.id}: horizon must exceed control_period")
        if not self.h0 > 0:
            raise ConfigError(f"agent {self.id}: h0 must be positive")
        if self.delta < 0:
            raise ConfigError(f"agent {self.id}: delta must be non-negative")
        if self.clock_offset is not None and abs(self.clock_offset) > self.delta:
            raise ConfigError(f"agent {self.id}: |clock_offset| exceeds delta")
        if model.name == "quadcopter4d":
            if self.input is None and not self.waypoints:
                raise ConfigError(f"agent {self.id}: quadcopter needs waypoints or a fixed input")
        elif self.input is None or len(self.input) != model.input_dim:
            raise ConfigError(f"agent {self.id}: {self.model} needs an input of length {model.input_dim}")
        if self.sensor_bloat is not None and (
            len(self.sensor_bloat) != model.state_dim or min(self.sensor_bloat) < 0
        ):
            raise ConfigError(f"agent {self.id}: sensor_bloat must be {model.state_dim} non-negative values")
        if self.local_unsafe is not None and self.local_unsafe.dim != model.state_dim:
            raise ConfigError(f"agent {self.id}: local_unsafe width must be {model.state_dim}")


@dataclass(frozen=True)
class ChannelConfig:
    delay_min: float = 0.0005
    delay_max: float = 0.003
    drop_prob: float = 0.0
    corrupt_prob: float = 0.0
    fixed_delay: Optional[float | str] = None

    def __post_init__(self) -> None:
        if not 0 <= self.delay_min <= self.delay_max:
            raise ConfigError("channel needs 0 <= delay_min <= delay_max")
        if not (0 <= self.drop_prob <= 1 and 0 <= self.corrupt_prob <= 1):
            raise ConfigError("channel probabilities must lie in [0, 1]")
        if isinstance(self.fixed_delay, str) and self.fixed_delay != "profile":
            raise ConfigError("fixed_delay must be a number, null, or 'profile'")


@dataclass(frozen=True)
class ScenarioConfig:
    agents: tuple[AgentConfig, ...]
    duration: float
    seed: int = 0
    safe_distance: float = 100.0
    position_axes: tuple[int, ...] = (0, 2)
    channel: ChannelConfig = ChannelConfig()
    global_unsafe: Optional[LinearConstraintSet] = None
    timing_profile: TimingProfile = TimingProfile()
    stop_when_done: bool = True
    truth_dt: float = 0.001

    def __post_init__(self) -> None:
        if not self.agents:
            raise ConfigError("scenario needs at least one agent")
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"agent ids must be unique, got {ids}")
        if not self.duration > 0:
            raise ConfigError("duration must be positive")
        if self.global_unsafe is not None:
            width = sum(get_model(a.model).state_dim for a in self.agents)
            if self.global_unsafe.dim != width:
                raise ConfigError(f"global_unsafe width {self.global_unsafe.dim} != joint state width {width}")

    def profile_for(self, agent: AgentConfig) -> TimingProfile:
        return agent.timing_profile or self.timing_profile

    def with_seed(self, seed: int) -> ScenarioConfig:
        return dataclasses.replace(self, seed=seed)


def _constraints(doc) -> Optional[LinearConstraintSet]:
    if doc is None:
        return None
    rows = doc["rows"] if isinstance(doc, dict) else doc
    return LinearConstraintSet([(r["coeffs"], r["bound"]) for r in rows])


def _constraints_doc(cs: Optional[LinearConstraintSet]):
    if cs is None:
        return None
    return {"rows": [{"coeffs": list(c), "bound": b} for c, b in cs.rows]}


_AGENT_KEYS = {f.name for f in dataclasses.fields(AgentConfig)}
_SCENARIO_KEYS = {f.name for f in dataclasses.fields(ScenarioConfig)} | {"agent_defaults"}


def agent_from_dict(doc: dict[str, Any]) -> AgentConfig:
    unknown = set(doc) - _AGENT_KEYS
    if unknown:
        raise ConfigError(f"unknown agent keys: {sorted(unknown)}")
    kw = dict(doc)
    kw["initial_state"] = tuple(float(v) for v in kw["initial_state"])
    if "waypoints" in kw:
        kw["waypoints"] = tuple((float(p[0]), float(p[1])) for p in kw["waypoints"] or ())
    if kw.get("input") is not None:
        kw["input"] = tuple(float(v) for v in kw["input"])
    if "gains" in kw:
        g = dict(kw["gains"])
        for k in ("kp", "ki", "kd"):
            if k in g:
                g[k] = tuple(g[k]) if isinstance(g[k], (list, tuple)) else (g[k], g[k])
        kw["gains"] = PidGains(**g)
    if "budget" in kw:
        kw["budget"] = RuntimeBudget(**kw["budget"])
    if kw.get("sensor_bloat") is not None:
        kw["sensor_bloat"] = tuple(float(v) for v in kw["sensor_bloat"])
    if "local_unsafe" in kw:
        kw["local_unsafe"] = _constraints(kw["local_unsafe"])
    if kw.get("timing_profile") is not None:
        kw["timing_profile"] = TimingProfile(**kw["timing_profile"])
    return AgentConfig(**kw)


def scenario_from_dict(doc: dict[str, Any]) -> ScenarioConfig:
    try:
        if not isinstance(doc, dict):
            raise ConfigError("scenario document must be a mapping")
        unknown = set(doc) - _SCENARIO_KEYS
        if unknown:
            raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
        defaults = doc.get("agent_defaults") or {}
        agents = tuple(agent_from_dict({**defaults, **a}) for a in doc.get("agents") or ())
        kw = {k: v for k, v in doc.items() if k not in ("agents", "agent_defaults")}
        kw["agents"] = agents
        if "channel" in kw:
            kw["channel"] = ChannelConfig(**(kw["channel"] or {}))
        if "timing_profile" in kw:
            kw["timing_profile"] = TimingProfile(**kw["timing_profile"])
        if "global_unsafe" in kw:
            kw["global_unsafe"] = _constraints(kw["global_unsafe"])
        if "position_axes" in kw:
            kw["position_axes"] = tuple(kw["position_axes"])
        return ScenarioConfig(**kw)
    except ConfigError:
        raise
    except (SwarmVerifyError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return scenario_from_dict(doc)


def _profile_doc(p: Optional[TimingProfile]):
    return None if p is None else dataclasses.asdict(p)


def agent_to_dict(a: AgentConfig) -> dict[str, Any]:
    return {
        "id": a.id,
        "model": a.model,
        "initial_state": list(a.initial_state),
        "waypoints": [list(p) for p in a.waypoints],
        "input": None if a.input is None else list(a.input),
        "gains": {
            "kp": list(a.gains.kp),
            "ki": list(a.gains.ki),
            "kd": list(a.gains.kd),
            "output_clamp": a.gains.output_clamp,
        },
        "delta": a.delta,
        "clock_offset": a.clock_offset,
        "control_period": a.control_period,
        "horizon": a.horizon,
        "h0": a.h0,
        "budget": {"mode": a.budget.mode.value, "limit": a.budget.limit},
        "sensor_bloat": None if a.sensor_bloat is None else list(a.sensor_bloat),
        "local_unsafe": _constraints_doc(a.local_unsafe),
        "waypoint_tolerance": a.waypoint_tolerance,
        "timing_profile": _profile_doc(a.timing_profile),
    }


def scenario_to_dict(cfg: ScenarioConfig) -> dict[str, Any]:
    return {
        "duration": cfg.duration,
        "seed": cfg.seed,
        "safe_distance": cfg.safe_distance,
        "position_axes": list(cfg.position_axes),
        "stop_when_done": cfg.stop_when_done,
        "truth_dt": cfg.truth_dt,
        "channel": dataclasses.asdict(cfg.channel),
        "timing_profile": dataclasses.asdict(cfg.timing_profile),
        "global_unsafe": _constraints_doc(cfg.global_unsafe),
        "agents": [agent_to_dict(a) for a in cfg.agents],
    }


def dump_scenario(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(scenario_to_dict(cfg), sort_keys=False, default_flow_style=None))


def coordinate_row(width: int, axis: int, sign: float, bound: float) -> tuple[list[float], float]:
    """Row ``sign * x[axis] <= bound`` over a ``width``-wide state."""
    coeffs = [0.0] * width
    coeffs[axis] = sign
    return coeffs, bound


def region_rows(width: int, axes: Sequence[int], lo: float, hi: float) -> list[tuple[list[float], float]]:
    """Rows confining every listed axis to ``[lo, hi]`` at once."""
    rows = []
    for ax in axes:
        rows.append(coordinate_row(width, ax, -1.0, -lo))
        rows.append(coordinate_row(width, ax, 1.0, hi))
    return rows
