"""Built-in scenarios: the 8-quadcopter search mission, an injected head-on
encounter, the two-agent forbidden-region scenario, and the eight-agent field-cost run."""

from __future__ import annotations

from ..geometry import LinearConstraintSet
from ..verify import TimingProfile
from .config import AgentConfig, ChannelConfig, ScenarioConfig, coordinate_row, region_rows

# Per-quadcopter averages (ms) from the eight-agent field measurements.
TABLE1_PROFILES = {
    1: TimingProfile(tau_e=0.058, tau_d=0.0169, tau_tf=2.64, tau_c=0.04, t_runtime=10.0),
    2: TimingProfile(tau_e=0.055, tau_d=0.0193, tau_tf=2.48, tau_c=0.05, t_runtime=10.0),
    3: TimingProfile(tau_e=0.0553, tau_d=0.0197, tau_tf=1.42, tau_c=0.07, t_runtime=10.0),
    4: TimingProfile(tau_e=0.0525, tau_d=0.019, tau_tf=1.11, tau_c=0.05, t_runtime=10.0),
    5: TimingProfile(tau_e=0.0557, tau_d=0.0210, tau_tf=1.12, tau_c=0.03, t_runtime=10.0),
    6: TimingProfile(tau_e=0.0583, tau_d=0.0181, tau_tf=1.08, tau_c=0.07, t_runtime=10.0),
    7: TimingProfile(tau_e=0.0584, tau_d=0.0177, tau_tf=1.05, tau_c=0.07, t_runtime=10.0),
    8: TimingProfile(tau_e=0.0597, tau_d=0.022, tau_tf=1.13, tau_c=0.14, t_runtime=10.0),
}
TABLE1_VT = {1: 28.9363, 2: 27.9, 3: 20.6232, 4: 18.3055, 5: 18.2527, 6: 18.235, 7: 18.0223, 8: 19.1037}

DEFAULT_PROFILE = TimingProfile(tau_e=0.06, tau_d=0.02, tau_tf=1.5, tau_c=0.05, tau_control=5.0, t_runtime=10.0)

VX_LIMIT = 500.0


def vx_limit_unsafe(limit: float = VX_LIMIT) -> LinearConstraintSet:
    """Unsafe set v_x >= limit for the (x, v_x, y, v_y) state."""
    return LinearConstraintSet([coordinate_row(4, 1, -1.0, -limit)])


def _lawnmower(ox: float, oy: float, width: float, height: float, lanes: int):
    """Boustrophedon sweep of a cell starting from its lower-left corner."""
    xs = [ox + k * width / (lanes - 1) for k in range(lanes)]
    pts = []
    for k, x in enumerate(xs):
        y_far = oy + height if k % 2 == 0 else oy
        pts.append((x, y_far))
        if k + 1 < lanes:
            pts.append((xs[k + 1], y_far))
    return tuple(pts)


def search_mission(
    n_agents: int = 8,
    seed: int = 0,
    cell_pitch: tuple[float, float] = (600.0, 700.0),
    cell_size: tuple[float, float] = (300.0, 300.0),
    lanes: int = 3,
    duration: float = 300.0,
    **agent_kw,
) -> ScenarioConfig:
    """Each quadcopter sweeps its own cell of a 4-wide grid in a lawnmower pattern."""
    agents = []
    for i in range(n_agents):
        ox = (i % 4) * cell_pitch[0]
        oy = (i // 4) * cell_pitch[1]
        agents.append(
            AgentConfig(
                id=i,
                initial_state=(ox, 0.0, oy, 0.0),
                waypoints=_lawnmower(ox, oy, cell_size[0], cell_size[1], lanes),
                local_unsafe=vx_limit_unsafe(),
                **agent_kw,
            )
        )
    return ScenarioConfig(
        agents=tuple(agents),
        duration=duration,
        seed=seed,
        safe_distance=100.0,
        timing_profile=DEFAULT_PROFILE,
    )


def head_on(seed: int = 0, separation: float = 1000.0, duration: float = 60.0, **agent_kw) -> ScenarioConfig:
    """Two quadcopters fly opposing legs through a shared midpoint."""
    mid = separation / 2
    agents = (
        AgentConfig(
            id=0,
            initial_state=(0.0, 0.0, 500.0, 0.0),
            waypoints=((mid, 500.0), (separation, 500.0)),
            local_unsafe=vx_limit_unsafe(),
            **agent_kw,
        ),
        AgentConfig(
            id=1,
            initial_state=(separation, 0.0, 500.0, 0.0),
            waypoints=((mid, 500.0), (0.0, 500.0)),
            local_unsafe=vx_limit_unsafe(),
            **agent_kw,
        ),
    )
    return ScenarioConfig(agents=agents, duration=duration, seed=seed, safe_distance=100.0, timing_profile=DEFAULT_PROFILE)


def near_miss(seed: int = 0, lateral_gap: float = 180.0, duration: float = 60.0, **agent_kw) -> ScenarioConfig:
    """Opposing legs offset sideways: the agents pass close but never within ``l``."""
    y0 = 500.0
    agents = (
        AgentConfig(
            id=0,
            initial_state=(0.0, 0.0, y0, 0.0),
            waypoints=((1000.0, y0),),
            local_unsafe=vx_limit_unsafe(),
            **agent_kw,
        ),
        AgentConfig(
            id=1,
            initial_state=(1000.0, 0.0, y0 + lateral_gap, 0.0),
            waypoints=((0.0, y0 + lateral_gap),),
            local_unsafe=vx_limit_unsafe(),
            **agent_kw,
        ),
    )
    return ScenarioConfig(agents=agents, duration=duration, seed=seed, safe_distance=100.0, timing_profile=DEFAULT_PROFILE)


def geospatial(staggered: bool, seed: int = 0, duration: float = 120.0, **agent_kw) -> ScenarioConfig:
    """Two agents crossing the forbidden band 900 < x < 1200 on parallel tracks.

    Agent rows are stacked by id, so x of agent 0 is joint axis 0 and x of
    agent 1 is joint axis 4. With ``staggered`` the second agent starts far
    enough behind that it reaches the band only after the first has left it.
    """
    a0 = AgentConfig(id=0, initial_state=(600.0, 0.0, 0.0, 0.0), waypoints=((1500.0, 0.0),), **agent_kw)
    if staggered:
        a1 = AgentConfig(id=1, initial_state=(-600.0, 0.0, 400.0, 0.0), waypoints=((1500.0, 400.0),), **agent_kw)
    else:
        a1 = AgentConfig(id=1, initial_state=(600.0, 0.0, 400.0, 0.0), waypoints=((1500.0, 400.0),), **agent_kw)
    unsafe = LinearConstraintSet(region_rows(8, (0, 4), 900.0, 1200.0))
    return ScenarioConfig(
        agents=(a0, a1),
        duration=duration,
        seed=seed,
        safe_distance=100.0,
        global_unsafe=unsafe,
        timing_profile=DEFAULT_PROFILE,
    )


def table1_run(seed: int = 0, duration: float = 4.0) -> ScenarioConfig:
    """Eight agents with the field-measured per-quadcopter costs; the channel
    delivers to each agent after exactly its measured transfer time."""
    base = search_mission(8, seed=seed, duration=duration)
    agents = tuple(
        AgentConfig(**{**a.__dict__, "id": a.id + 1, "timing_profile": TABLE1_PROFILES[a.id + 1]})
        for a in base.agents
    )
    return ScenarioConfig(
        agents=agents,
        duration=duration,
        seed=seed,
        safe_distance=100.0,
        channel=ChannelConfig(fixed_delay="profile"),
        timing_profile=DEFAULT_PROFILE,
        stop_when_done=False,
    )


def single_agent(model: str = "constant1d", seed: int = 0, duration: float = 1.0) -> ScenarioConfig:
    if model == "constant1d":
        agent = AgentConfig(id=0, model=model, initial_state=(0.0,), input=(1.0,), sensor_bloat=(0.0,))
    elif model == "harmonic2d":
        agent = AgentConfig(id=0, model=model, initial_state=(1.0, 0.0), input=(), sensor_bloat=(0.01, 0.01), h0=0.05)
    else:
        agent = AgentConfig(id=0, initial_state=(0.0, 0.0, 0.0, 0.0), waypoints=((200.0, 100.0),))
    return ScenarioConfig(agents=(agent,), duration=duration, seed=seed, timing_profile=DEFAULT_PROFILE)


BUILTINS = {
    "search": search_mission,
    "head_on": head_on,
    "near_miss": near_miss,
    "geospatial_concurrent": lambda seed=0, **kw: geospatial(False, seed, **kw),
    "geospatial_staggered": lambda seed=0, **kw: geospatial(True, seed, **kw),
    "table1": table1_run,
    "single_constant": lambda seed=0, **kw: single_agent("constant1d", seed, **kw),
}
