"""Run metrics and the ground-truth soundness audit."""

from __future__ import annotations

import dataclasses
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from ..dynamics import ModelSpec, get_model, rk4_batch
from ..reach import ReachResult
from ..verify import TimingProfile, vt_estimate
from .config import ScenarioConfig
from .engine import EventRecord, GroundTruth, ReachRecord


@dataclass
class AgentMetrics:
    agent: int
    tau_e: Optional[float] = None
    tau_d: Optional[float] = None
    tau_tf: Optional[float] = None
    tau_c: Optional[float] = None
    t_runtime: Optional[float] = None
    vt: Optional[float] = None
    reaches: int = 0
    useful: int = 0
    stale: int = 0
    malformed: int = 0
    uncertain: int = 0
    local_unsafe: int = 0
    global_uncertain: int = 0


@dataclass
class Metrics:
    n_agents: int
    agents: dict[int, AgentMetrics]
    min_distance: Optional[float]
    messages_delivered: int
    comm_empty: bool

    @property
    def uncertain_total(self) -> int:
        return sum(a.uncertain for a in self.agents.values())

    @property
    def local_unsafe_total(self) -> int:
        return sum(a.local_unsafe for a in self.agents.values())

    @property
    def global_uncertain_total(self) -> int:
        return sum(a.global_uncertain for a in self.agents.values())

    @property
    def any_uncertain(self) -> bool:
        return self.uncertain_total + self.local_unsafe_total + self.global_uncertain_total > 0


COLUMNS = [f.name for f in dataclasses.fields(AgentMetrics)]


def _mean(values: Sequence[float]) -> Optional[float]:
    return math.fsum(values) / len(values) if values else None


def min_pairwise_distance(truth: GroundTruth, position_axes: Sequence[int] = (0, 2)) -> Optional[float]:
    ids = sorted(truth.states)
    best = None
    axes = list(position_axes)
    for a_i, a in enumerate(ids):
        for b in ids[a_i + 1 :]:
            diff = truth.states[a][:, axes] - truth.states[b][:, axes]
            d = float(np.sqrt((diff**2).sum(axis=1)).min())
            best = d if best is None else min(best, d)
    return best


def pairwise_distance_trace(truth: GroundTruth, a: int, b: int, position_axes: Sequence[int] = (0, 2)) -> np.ndarray:
    axes = list(position_axes)
    diff = truth.states[a][:, axes] - truth.states[b][:, axes]
    return np.sqrt((diff**2).sum(axis=1))


def metrics_report(
    events: Iterable[EventRecord],
    n_agents: int,
    truth: Optional[GroundTruth] = None,
    position_axes: Sequence[int] = (0, 2),
) -> Metrics:
    """Aggregate a run from its event log (plus ground truth for min distance).

    Costs are averaged from the values scheduled into the log; VT follows
    the per-agent verification-time formula with N = ``n_agents``.
    """
    samples: dict[int, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    per = {}
    delivered = 0

    def agent(aid: int) -> AgentMetrics:
        if aid not in per:
            per[aid] = AgentMetrics(aid)
        return per[aid]

    for e in events:
        m = agent(e.agent)
        p = e.payload
        if e.kind == "reach_done":
            m.reaches += 1
            samples[e.agent]["t_runtime"].append(p["t_runtime_ms"])
        elif e.kind == "send":
            samples[e.agent]["tau_e"].append(p["tau_e_ms"])
        elif e.kind == "deliver":
            delivered += 1
            samples[e.agent]["tau_tf"].append(p["tau_tf_ms"])
        elif e.kind == "decode":
            samples[e.agent]["tau_d"].append(p["tau_d_ms"])
        elif e.kind == "pair_check":
            m.useful += 1
            samples[e.agent]["tau_c"].append(p["tau_c_ms"])
            if p["collision"] == "uncertain":
                m.uncertain += 1
        elif e.kind == "stale_msg":
            m.stale += 1
        elif e.kind == "malformed_msg":
            m.malformed += 1
        elif e.kind == "local_unsafe":
            m.local_unsafe += 1
        elif e.kind == "global_check" and p.get("global_safe") == "uncertain":
            m.global_uncertain += 1

    if truth is not None:
        for aid in truth.states:
            agent(aid)
    for aid, m in per.items():
        s = samples[aid]
        m.tau_e = _mean(s["tau_e"])
        m.tau_d = _mean(s["tau_d"])
        m.tau_tf = _mean(s["tau_tf"])
        m.tau_c = _mean(s["tau_c"])
        m.t_runtime = _mean(s["t_runtime"])
        if n_agents >= 2 and None not in (m.tau_e, m.tau_d, m.tau_tf, m.tau_c, m.t_runtime):
            m.vt = vt_estimate(
                TimingProfile(tau_e=m.tau_e, tau_d=m.tau_d, tau_tf=m.tau_tf, tau_c=m.tau_c, t_runtime=m.t_runtime),
                n_agents,
            )
    min_d = min_pairwise_distance(truth, position_axes) if truth is not None and n_agents > 1 else None
    return Metrics(
        n_agents=n_agents,
        agents=dict(sorted(per.items())),
        min_distance=min_d,
        messages_delivered=delivered,
        comm_empty=delivered == 0,
    )


@dataclass
class AuditReport:
    reach_checked: int = 0
    reach_violations: int = 0
    pair_checked: int = 0
    pair_violations: int = 0
    global_checked: int = 0
    global_violations: int = 0
    details: list[str] = field(default_factory=list)

    @property
    def total_violations(self) -> int:
        return self.reach_violations + self.pair_violations + self.global_violations

    @property
    def ok(self) -> bool:
        return self.total_violations == 0


def _box_arrays(res: ReachResult, offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ends = np.array([s.t_end for s in res.intermediates])
    seg = np.minimum(np.searchsorted(ends, offsets, side="left"), len(ends) - 1)
    lo = np.array([s.box.lo for s in res.intermediates])[seg]
    hi = np.array([s.box.hi for s in res.intermediates])[seg]
    return lo, hi


def _count_outside(rep: AuditReport, label: str, rec: ReachRecord, states, offsets, tol: float) -> None:
    lo, hi = _box_arrays(rec.result, offsets)
    bad = np.any((states < lo - tol) | (states > hi + tol), axis=1)
    rep.reach_checked += len(states)
    n_bad = int(bad.sum())
    if n_bad:
        rep.reach_violations += n_bad
        first = int(np.argmax(bad))
        if len(rep.details) < 50:
            rep.details.append(
                f"reach/{label}: agent {rec.agent} t_rs@{rec.t_global:.4f} offset {offsets[first]:.4f} "
                f"state {states[first].tolist()} box {lo[first].tolist()}..{hi[first].tolist()}"
            )


def _audit_flows(rep: AuditReport, recs: Sequence[ReachRecord], model: ModelSpec, dt: float, tol: float) -> None:
    """Integrate every record's true start state under its held input, all at once."""
    horizon = recs[0].result.horizon
    steps = max(1, int(round(horizon / dt)))
    h = horizon / steps
    x0 = np.asarray([r.true_state for r in recs], dtype=float)
    u = np.asarray([r.u for r in recs], dtype=float).reshape(len(recs), -1)
    flows = rk4_batch(model, x0, u, h, steps)
    offsets = np.arange(steps + 1) * h
    for k, rec in enumerate(recs):
        _count_outside(rep, "flow", rec, flows[:, k, :], offsets, tol)


def _audit_truth(rep: AuditReport, rec: ReachRecord, truth: GroundTruth, tol: float) -> None:
    # Recorded truth, limited to the span over which the input stayed fixed.
    res = rec.result
    t_end = rec.t_global + min(res.horizon, rec.held_until - rec.t_global)
    rng = truth.index_range(rec.t_global, t_end)
    if len(rng) == 0:
        return
    states = truth.states[rec.agent][rng.start : rng.stop]
    offsets = np.clip(truth.times[rng.start : rng.stop] - rec.t_global, 0.0, res.horizon)
    _count_outside(rep, "truth", rec, states, offsets, tol)


def soundness_audit(
    events: Sequence[EventRecord],
    truth: GroundTruth,
    cfg: ScenarioConfig,
    reaches: Sequence[ReachRecord] = (),
    clock_offsets: Optional[dict[int, float]] = None,
    tol: float = 1e-9,
) -> AuditReport:
    """Replay verdicts against the ground truth.

    (a) every reach box contains the flow of the true starting state under
        the input it was computed for, and also the recorded truth for as
        long as that input was actually held;
    (b) every no-collision verdict keeps the pair at least ``l`` apart over
        its window; (c) no joint true state inside a globally-safe window
        satisfies every unsafe row.

    Verdict windows are in the checking agent's local clock and are mapped
    back to global time with that agent's clock offset, read from the
    ``t_local`` field of each event.
    """
    rep = AuditReport()
    truth_states = truth.states
    models = {a.id: get_model(a.model) for a in cfg.agents}
    groups: dict[tuple[int, float], list[ReachRecord]] = defaultdict(list)
    for rec in reaches:
        _audit_truth(rep, rec, truth, tol)
        if rec.true_state and models[rec.agent].deriv_batch is not None:
            groups[(rec.agent, rec.result.horizon)].append(rec)
    for (aid, _), recs in sorted(groups.items()):
        _audit_flows(rep, recs, models[aid], truth.dt, tol)

    l = cfg.safe_distance
    axes = list(cfg.position_axes)
    for e in events:
        if e.kind == "pair_check" and e.payload["collision"] == "false":
            offset = e.payload["t_local"] - e.time if clock_offsets is None else clock_offsets[e.agent]
            g0 = e.payload["t_c"] - offset
            g1 = e.payload["t_safe"] - offset
            peer = e.payload["peer"]
            rng = truth.index_range(g0, g1)
            if len(rng) == 0:
                continue
            a = truth_states[e.agent][rng.start : rng.stop][:, axes]
            b = truth_states[peer][rng.start : rng.stop][:, axes]
            d = np.sqrt(((a - b) ** 2).sum(axis=1))
            rep.pair_checked += 1
            if d.min() < l:
                rep.pair_violations += 1
                if len(rep.details) < 50:
                    rep.details.append(
                        f"pair: agent {e.agent} vs {peer} window [{g0:.4f}, {g1:.4f}] min distance {d.min():.3f}"
                    )
        elif e.kind == "global_check" and e.payload.get("global_safe") == "true" and cfg.global_unsafe is not None:
            offset = e.payload["t_local"] - e.time if clock_offsets is None else clock_offsets[e.agent]
            g0 = e.payload["t_c"] - offset
            g1 = e.payload["t_global_safe"] - offset
            rng = truth.index_range(g0, g1)
            if len(rng) == 0:
                continue
            joint = np.hstack([truth_states[a][rng.start : rng.stop] for a in sorted(truth_states)])
            C = np.array([c for c, _ in cfg.global_unsafe.rows])
            d = np.array([b for _, b in cfg.global_unsafe.rows])
            inside = np.all(joint @ C.T <= d, axis=1)
            rep.global_checked += 1
            if inside.any():
                rep.global_violations += 1
                if len(rep.details) < 50:
                    rep.details.append(f"global: agent {e.agent} window [{g0:.4f}, {g1:.4f}]")
    return rep
