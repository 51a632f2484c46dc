"""Deterministic discrete-event execution of a scenario.

Each agent runs, on its own skewed clock, the loop
sense -> control -> reach -> encode/broadcast, and on every delivery
decode -> usefulness -> pairwise check (-> global check). Costs come from
the scenario's timing profiles, so the event timeline depends only on the
config and its seed.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
import random
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..comm import ChannelModel, ClockModel, ReachMessage, decode, encode, global_time, local_time
from ..dynamics import ModelSpec, PidMemory, get_model, pid_step, rk4_step
from ..errors import MalformedMessageError, NoVerdictError, StaleMessageError
from ..geometry import HyperRectangle, bloat
from ..reach import ReachResult, reach_anytime
from ..verify import check_global, check_pairwise
from .config import AgentConfig, ScenarioConfig

log = logging.getLogger(__name__)

GPS_ERROR = 0.02
BLOAT_FLOOR = 0.01
# Sensor noise stays within this fraction of the bloat, so the bloated box
# always holds the true state.
NOISE_FRACTION = 0.5

EVENT_KINDS = frozenset(
    {
        "reach_start",
        "reach_done",
        "send",
        "deliver",
        "decode",
        "pair_check",
        "global_check",
        "waypoint_reached",
        "local_unsafe",
        "budget_overrun",
        "stale_msg",
        "malformed_msg",
    }
)


@dataclass(frozen=True)
class EventRecord:
    time: float  # global, s
    agent: int
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {"t": self.time, "agent": self.agent, "kind": self.kind, **self.payload},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, line: str) -> EventRecord:
        doc = json.loads(line)
        t = doc.pop("t")
        agent = doc.pop("agent")
        kind = doc.pop("kind")
        return cls(t, agent, kind, doc)


@dataclass
class GroundTruth:
    """True states of every agent sampled on a common grid."""

    times: np.ndarray
    states: dict[int, np.ndarray]  # agent id -> (len(times), n)
    dt: float

    def index_range(self, t0: float, t1: float) -> range:
        i0 = max(0, math.ceil(t0 / self.dt - 1e-9))
        i1 = min(len(self.times) - 1, math.floor(t1 / self.dt + 1e-9))
        return range(i0, i1 + 1)


@dataclass(frozen=True)
class ReachRecord:
    agent: int
    t_global: float  # global instant the reach computation started
    result: ReachResult
    true_state: tuple[float, ...] = ()
    u: tuple[float, ...] = ()
    held_until: float = math.inf  # global instant the input next changes


@dataclass
class RunResult:
    events: list[EventRecord]
    truth: GroundTruth
    reaches: list[ReachRecord]
    clocks: dict[int, ClockModel]
    end_time: float

    def events_jsonl(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)


class _TruthTrack:
    """Integrates one agent's true dynamics, recording samples on the grid."""

    def __init__(self, model: ModelSpec, x0, u, dt: float) -> None:
        self.model = model
        self.t = 0.0
        self.x = tuple(float(v) for v in x0)
        self.u = tuple(u)
        self.dt = dt
        self.next_idx = 1
        self.samples = [self.x]

    def advance_to(self, t_target: float) -> None:
        while self.t < t_target:
            grid = self.next_idx * self.dt
            end = min(grid, t_target)
            h = end - self.t
            if h > 0:
                self.x = rk4_step(self.model, self.x, self.u, h)
            if end >= grid - 1e-12:
                self.t = grid
                self.samples.append(self.x)
                self.next_idx += 1
            else:
                self.t = end


class _Agent:
    def __init__(self, cfg: AgentConfig, clock: ClockModel, profile, rng: random.Random, truth_dt: float):
        self.cfg = cfg
        self.model = get_model(cfg.model)
        self.clock = clock
        self.profile = profile
        self.rng = rng
        self.u = tuple(cfg.input) if cfg.input is not None else (0.0,) * self.model.input_dim
        self.truth = _TruthTrack(self.model, cfg.initial_state, self.u, truth_dt)
        self.memory = PidMemory()
        self.wp_index = 0
        self.done = not cfg.waypoints
        self.reach: Optional[ReachResult] = None
        self.pending_reach: Optional[ReachResult] = None
        self.pending_msgs: list[tuple[int, ReachMessage]] = []  # (channel seq, message)
        self.stored: dict[int, ReachMessage] = {}
        self.sent = 0

    def local(self, t_global: float) -> float:
        return local_time(self.clock, t_global)

    def sensor_box(self, true_state) -> tuple[tuple[float, ...], HyperRectangle]:
        """Noisy reading of the true state and the bloated box around it."""
        true_eps = self._bloat_for(true_state)
        sensed = tuple(
            x + self.rng.uniform(-1.0, 1.0) * NOISE_FRACTION * e for x, e in zip(true_state, true_eps)
        )
        eps = self.cfg.sensor_bloat or self._bloat_for(sensed)
        return sensed, bloat(HyperRectangle.point(sensed), eps)

    def _bloat_for(self, state) -> tuple[float, ...]:
        if self.cfg.sensor_bloat is not None:
            return self.cfg.sensor_bloat
        if self.model.name == "quadcopter4d":
            T_c = self.cfg.control_period
            vx, vy = abs(state[1]), abs(state[3])
            return (
                GPS_ERROR * vx * T_c + BLOAT_FLOOR,
                GPS_ERROR * vx + BLOAT_FLOOR,
                GPS_ERROR * vy * T_c + BLOAT_FLOOR,
                GPS_ERROR * vy + BLOAT_FLOOR,
            )
        return tuple(GPS_ERROR * abs(v) + BLOAT_FLOOR for v in state)


class Simulation:
    def __init__(self, cfg: ScenarioConfig) -> None:
        self.cfg = cfg
        self.events: list[EventRecord] = []
        self.reaches: list[ReachRecord] = []
        self._queue: list[tuple[float, int, str, int, Any]] = []
        self._seq = 0
        seed = cfg.seed
        clock_rng = random.Random(f"{seed}:clocks")
        self.agents: dict[int, _Agent] = {}
        for a in sorted(cfg.agents, key=lambda a: a.id):
            offset = a.clock_offset
            if offset is None:
                offset = clock_rng.uniform(-a.delta, a.delta)
            clock = ClockModel(a.id, offset, a.delta)
            rng = random.Random(f"{seed}:sensor:{a.id}")
            self.agents[a.id] = _Agent(a, clock, cfg.profile_for(a), rng, cfg.truth_dt)
        ch = cfg.channel
        fixed: dict[int, float] = {}
        if ch.fixed_delay == "profile":
            fixed = {i: ag.profile.tau_tf / 1000.0 for i, ag in self.agents.items()}
        elif ch.fixed_delay is not None:
            fixed = {i: float(ch.fixed_delay) for i in self.agents}
        self.channel = ChannelModel(
            (ch.delay_min, ch.delay_max),
            ch.drop_prob,
            rng_seed=seed,
            fixed_delays=fixed,
            corrupt_prob=ch.corrupt_prob,
        )
        self.deltas = {i: ag.clock.delta for i, ag in self.agents.items()}
        self.ids = sorted(self.agents)
        self.tick_origin = max(self.deltas.values())

    # -- bookkeeping -------------------------------------------------------

    def _schedule(self, t: float, kind: str, agent: int, data: Any = None) -> None:
        self._seq += 1
        heapq.heappush(self._queue, (t, self._seq, kind, agent, data))

    def _log(self, t: float, agent: int, kind: str, **payload) -> None:
        payload["t_local"] = self.agents[agent].local(t)
        self.events.append(EventRecord(t, agent, kind, payload))

    # -- handlers ----------------------------------------------------------

    def _on_tick(self, t: float, aid: int, k: int) -> None:
        ag = self.agents[aid]
        cfg = ag.cfg
        ag.truth.advance_to(t)
        sensed, box = ag.sensor_box(ag.truth.x)

        if ag.model.name == "quadcopter4d" and cfg.waypoints:
            wp = cfg.waypoints[ag.wp_index]
            if not ag.done and math.hypot(sensed[0] - wp[0], sensed[2] - wp[1]) < cfg.waypoint_tolerance:
                self._log(t, aid, "waypoint_reached", index=ag.wp_index, waypoint=list(wp))
                if ag.wp_index + 1 < len(cfg.waypoints):
                    ag.wp_index += 1
                else:
                    ag.done = True
            wp = cfg.waypoints[ag.wp_index]
            u, ag.memory = pid_step(sensed, wp, cfg.gains, cfg.control_period, ag.memory)
            ag.u = tuple(u)
        ag.truth.u = ag.u

        t_rs = ag.local(t)
        self._log(t, aid, "reach_start", t_rs=t_rs, u=list(ag.u))
        result = reach_anytime(
            box, ag.u, t_rs, cfg.horizon, cfg.h0, cfg.budget, cfg.local_unsafe, ag.model
        )
        next_tick = global_time(ag.clock, self.tick_origin + (k + 1) * cfg.control_period)
        self.reaches.append(ReachRecord(aid, t, result, tuple(ag.truth.x), ag.u, next_tick))
        self._schedule(t + ag.profile.t_runtime / 1000.0, "reach_done", aid, result)
        self._schedule(next_tick, "tick", aid, k + 1)

    def _on_reach_done(self, t: float, aid: int, result: ReachResult) -> None:
        ag = self.agents[aid]
        self._log(
            t,
            aid,
            "reach_done",
            t_rs=result.t_rs,
            local_safe="safe" if result.local_safe else "uncertain",
            passes=result.passes_completed,
            final_step=result.final_step,
            t_runtime_ms=ag.profile.t_runtime,
            hull_lo=list(result.hull.lo),
            hull_hi=list(result.hull.hi),
        )
        if not result.local_safe:
            self._log(t, aid, "local_unsafe", t_rs=result.t_rs)
        if result.budget_overrun:
            self._log(t, aid, "budget_overrun", t_rs=result.t_rs)
        ag.reach = result
        pending, ag.pending_msgs = ag.pending_msgs, []
        for seq, msg in pending:
            self._pair_check(t, aid, seq, msg)
        if len(self.agents) > 1:
            self._schedule(t + ag.profile.tau_e / 1000.0, "send", aid, result)

    def _on_send(self, t: float, aid: int, result: ReachResult) -> None:
        ag = self.agents[aid]
        ag.sent += 1
        msg = ReachMessage(aid, result.t_rs, result.horizon, result.hull, ag.local(t))
        data = encode(msg)
        peers = [i for i in self.ids if i != aid]
        entries = self.channel.send(data, aid, peers, t)
        self._log(
            t,
            aid,
            "send",
            msg=ag.sent,
            t_rs=result.t_rs,
            tau_e_ms=ag.profile.tau_e,
            seqs=[e.seq for e in entries],
            dropped=[e.recipient for e in entries if e.deliver_at is None],
        )
        for e in entries:
            if e.deliver_at is not None:
                self._schedule(e.deliver_at, "deliver", e.recipient, (ag.sent, e))

    def _on_deliver(self, t: float, rid: int, data) -> None:
        ag = self.agents[rid]
        msg_no = {}
        for e in self.channel.poll(rid, t):
            msg_no[e.seq] = e
        for e in sorted(msg_no.values(), key=lambda e: (e.deliver_at, e.seq)):
            self._log(t, rid, "deliver", sender=e.sender, seq=e.seq, tau_tf_ms=e.delay * 1000.0)
            self._schedule(t + ag.profile.tau_d / 1000.0, "decode", rid, e)

    def _on_decode(self, t: float, rid: int, entry) -> None:
        ag = self.agents[rid]
        try:
            msg = decode(entry.payload)
            if msg.sender not in self.agents or msg.sender == rid:
                raise MalformedMessageError(f"unknown sender id {msg.sender}")
            if msg.hull.dim != ag.model.state_dim:
                raise MalformedMessageError(f"hull has {msg.hull.dim} axes, expected {ag.model.state_dim}")
        except MalformedMessageError as exc:
            log.info("agent %s dropped malformed message from %s: %s", rid, entry.sender, exc)
            self._log(t, rid, "malformed_msg", sender=entry.sender, seq=entry.seq, error=str(exc))
            return
        self._log(t, rid, "decode", sender=msg.sender, seq=entry.seq, tau_d_ms=ag.profile.tau_d)
        self._schedule(t + ag.profile.tau_c / 1000.0, "pair_check", rid, (entry.seq, msg))

    def _on_pair_check(self, t: float, rid: int, data: tuple[int, ReachMessage]) -> None:
        ag = self.agents[rid]
        if ag.reach is None:
            # Nothing to compare against yet; check once the first reach lands.
            ag.pending_msgs.append(data)
            return
        self._pair_check(t, rid, *data)

    def _pair_check(self, t: float, rid: int, seq: int, msg: ReachMessage) -> None:
        sender = msg.sender
        ag = self.agents[rid]
        t_c = ag.local(t)
        try:
            v = check_pairwise(
                ag.reach, t_c, msg, self.cfg.safe_distance,
                self.deltas[rid], self.deltas[sender], self.cfg.position_axes,
            )
        except StaleMessageError:
            log.debug("agent %s: stale reach set from %s", rid, sender)
            self._log(
                t, rid, "stale_msg", peer=sender, seq=seq, t_c=t_c, peer_t_rs=msg.t_rs, own_t_rs=ag.reach.t_rs
            )
            return
        self._log(
            t,
            rid,
            "pair_check",
            peer=sender,
            seq=seq,
            t_c=t_c,
            collision="false" if v.collision is False else "uncertain",
            t_safe=v.t_safe,
            d_min=v.d_min,
            peer_t_rs=msg.t_rs,
            own_t_rs=ag.reach.t_rs,
            tau_c_ms=ag.profile.tau_c,
        )
        ag.stored[sender] = msg
        if self.cfg.global_unsafe is not None and len(ag.stored) == len(self.agents) - 1:
            self._global_check(t, rid)

    def _global_check(self, t: float, rid: int) -> None:
        ag = self.agents[rid]
        t_c = ag.local(t)
        try:
            gv = check_global(
                ag.reach, rid, list(ag.stored.values()), self.cfg.global_unsafe,
                t_c, self.deltas, ag.cfg.horizon, self.ids,
            )
        except NoVerdictError as exc:
            self._log(t, rid, "global_check", t_c=t_c, global_safe=None, t_global_safe=None, reason=str(exc))
            return
        self._log(
            t,
            rid,
            "global_check",
            t_c=t_c,
            global_safe="true" if gv.global_safe else "uncertain",
            t_global_safe=gv.t_global_safe,
            reason=None,
        )

    # -- main loop ---------------------------------------------------------

    def run(self) -> RunResult:
        for aid in self.ids:
            ag = self.agents[aid]
            self._schedule(global_time(ag.clock, self.tick_origin), "tick", aid, 0)
        handlers = {
            "tick": self._on_tick,
            "reach_done": self._on_reach_done,
            "send": self._on_send,
            "deliver": self._on_deliver,
            "decode": self._on_decode,
            "pair_check": self._on_pair_check,
        }
        end = self.cfg.duration
        while self._queue:
            t, _, kind, aid, data = heapq.heappop(self._queue)
            if t > self.cfg.duration:
                break
            if kind == "tick" and self.cfg.stop_when_done and all(a.done for a in self.agents.values()):
                if any(a.cfg.waypoints for a in self.agents.values()):
                    end = t
                    break
            handlers[kind](t, aid, data)
        for ag in self.agents.values():
            ag.truth.advance_to(end)
        n_samples = min(len(ag.truth.samples) for ag in self.agents.values())
        dt = self.cfg.truth_dt
        truth = GroundTruth(
            times=np.arange(n_samples) * dt,
            states={i: np.asarray(ag.truth.samples[:n_samples]) for i, ag in self.agents.items()},
            dt=dt,
        )
        clocks = {i: ag.clock for i, ag in self.agents.items()}
        return RunResult(self.events, truth, self.reaches, clocks, end)


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    return Simulation(cfg).run()
