"""Pairwise and global safety checks over exchanged reach sets, plus the
verification-time and agent-capacity arithmetic."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .comm import ReachMessage
from .errors import (
    CapacityZeroError,
    IncompleteSetError,
    InvalidInputError,
    StaleMessageError,
    WindowExpiredError,
)
from .geometry import (
    DEFAULT_POSITION_AXES,
    HyperRectangle,
    LinearConstraintSet,
    min_distance,
    possibly_intersects,
)
from .reach import ReachResult


@dataclass(frozen=True)
class PairVerdict:
    collision: bool | None  # False means no collision; None means uncertain
    t_safe: Optional[float]
    d_min: float

    @property
    def uncertain(self) -> bool:
        return self.collision is None


@dataclass(frozen=True)
class GlobalVerdict:
    global_safe: bool | None  # True, or None for uncertain
    t_global_safe: Optional[float]


@dataclass(frozen=True)
class TimingProfile:
    """Per-agent costs in milliseconds."""

    tau_e: float = 0.0
    tau_d: float = 0.0
    tau_tf: float = 0.0
    tau_c: float = 0.0
    tau_control: float = 0.0
    t_runtime: float = 10.0

    def __post_init__(self) -> None:
        for name in ("tau_e", "tau_d", "tau_tf", "tau_c", "tau_control", "t_runtime"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative")


def is_useful(
    t_c_i: float, t_rs_i: float, t_rs_j: float, T: float, delta_i: float, delta_j: float
) -> bool:
    """Both reach sets still describe the future as seen from agent i's clock."""
    return t_c_i < t_rs_j + T - delta_i - delta_j and t_c_i < t_rs_i + T


def check_pairwise(
    own: ReachResult,
    own_t_c: float,
    msg: ReachMessage,
    l: float,
    delta_i: float,
    delta_j: float,
    position_axes: Sequence[int] = DEFAULT_POSITION_AXES,
) -> PairVerdict:
    """Raises StaleMessageError when the pair of reach sets is no longer useful."""
    if own.hull.dim != msg.hull.dim:
        raise InvalidInputError(f"hull dimensions differ: {own.hull.dim} vs {msg.hull.dim}")
    T = own.horizon
    if not is_useful(own_t_c, own.t_rs, msg.t_rs, T, delta_i, delta_j):
        raise StaleMessageError(
            f"message from {msg.sender} (t_rs={msg.t_rs}) not useful at t_c={own_t_c}"
        )
    d_min = min_distance(own.hull, msg.hull, position_axes)
    if d_min > l:
        t_safe = min(msg.t_rs + T - delta_i - delta_j, own.t_rs + T)
        return PairVerdict(False, t_safe, d_min)
    return PairVerdict(None, None, d_min)


def global_window(
    t_c_i: float,
    own_t_rs: float,
    msgs: Sequence[ReachMessage],
    T: float,
    delta_i: float,
    deltas: Mapping[int, float],
    expected_peers: Optional[Sequence[int]] = None,
) -> tuple[float, float]:
    """Common window over which every agent's hull is valid, in agent i's clock.

    ``deltas`` maps sender id to its sync bound.
    """
    senders = {m.sender for m in msgs}
    if expected_peers is not None:
        missing = set(expected_peers) - senders
        if missing:
            raise IncompleteSetError(f"no reach set from agents {sorted(missing)}")
    ends = [own_t_rs] + [m.t_rs - delta_i - deltas[m.sender] for m in msgs]
    end = T + min(ends)
    if not t_c_i < end:
        raise WindowExpiredError(f"t_c={t_c_i} is past window end {end}")
    return t_c_i, end


def check_global(
    own: ReachResult,
    own_id: int,
    msgs: Sequence[ReachMessage],
    unsafe: LinearConstraintSet,
    t_c_i: float,
    deltas: Mapping[int, float],
    T: Optional[float] = None,
    agent_ids: Optional[Sequence[int]] = None,
) -> GlobalVerdict:
    """Check the product of all agents' hulls against a joint unsafe set.

    Hulls are concatenated in ascending agent id. Raises a NoVerdictError
    subclass when a peer's set is missing or any set has gone stale.
    """
    T = own.horizon if T is None else T
    delta_i = deltas[own_id]
    by_sender = {m.sender: m for m in msgs}
    ids = sorted(set(agent_ids) if agent_ids is not None else set(by_sender) | {own_id})
    peers = [a for a in ids if a != own_id]
    missing = [a for a in peers if a not in by_sender]
    if missing:
        raise IncompleteSetError(f"no reach set from agents {missing}")
    for a in peers:
        m = by_sender[a]
        if not is_useful(t_c_i, own.t_rs, m.t_rs, T, delta_i, deltas[a]):
            raise WindowExpiredError(f"reach set from agent {a} no longer useful at t_c={t_c_i}")
    _, end = global_window(t_c_i, own.t_rs, [by_sender[a] for a in peers], T, delta_i, deltas)

    lo: list[float] = []
    hi: list[float] = []
    for a in ids:
        hull = own.hull if a == own_id else by_sender[a].hull
        lo.extend(hull.lo)
        hi.extend(hull.hi)
    product = HyperRectangle._raw(tuple(lo), tuple(hi))
    if unsafe.dim != product.dim:
        raise InvalidInputError(f"unsafe set width {unsafe.dim} != joint state width {product.dim}")
    if possibly_intersects(product, unsafe):
        return GlobalVerdict(None, None)
    return GlobalVerdict(True, end)


def vt_estimate(p: TimingProfile, n_agents: int) -> float:
    if n_agents < 2:
        raise InvalidInputError(f"need at least two agents, got {n_agents}")
    return p.t_runtime + p.tau_e + (n_agents - 1) * (p.tau_tf + p.tau_d + p.tau_c)


def agent_capacity_bounds(
    worst: TimingProfile, best: TimingProfile, T_c: float, t_runtime: float
) -> tuple[float, float]:
    """Range of agent counts whose verification still fits in one control period (ms)."""

    def bound(p: TimingProfile) -> float:
        per_peer = p.tau_tf + p.tau_d + p.tau_c
        if per_peer <= 0:
            raise CapacityZeroError("per-peer communication cost must be positive")
        budget = T_c - p.tau_control - t_runtime - p.tau_e
        if budget <= 0:
            raise CapacityZeroError(f"no time left for peers: {budget} ms")
        return budget / per_peer + 1

    return bound(worst), bound(best)
