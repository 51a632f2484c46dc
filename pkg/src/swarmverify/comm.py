"""Clocks, the reach-set wire format, and a simulated lossy channel."""

from __future__ import annotations

import heapq
import math
import random
import struct
from dataclasses import dataclass
from typing import Any, Hashable, Iterable, Optional

from .errors import InvalidInputError, MalformedMessageError
from .geometry import HyperRectangle

MAGIC = b"RSM1"
_HEADER = struct.Struct("<4sIddd")
_BOUNDS = struct.Struct("<dd")
HEADER_SIZE = _HEADER.size  # 32
BOUND_SIZE = _BOUNDS.size  # 16


@dataclass(frozen=True)
class ClockModel:
    agent_id: int
    offset: float = 0.0
    delta: float = 0.0

    def __post_init__(self) -> None:
        if self.delta < 0 or abs(self.offset) > self.delta:
            raise InvalidInputError(
                f"clock offset {self.offset} exceeds sync bound {self.delta} for agent {self.agent_id}"
            )


def local_time(clock: ClockModel, t_global: float) -> float:
    return t_global + clock.offset


def global_time(clock: ClockModel, t_local: float) -> float:
    return t_local - clock.offset


@dataclass(frozen=True)
class ReachMessage:
    sender: int
    t_rs: float
    horizon: float
    hull: HyperRectangle
    t_send: float

    def __post_init__(self) -> None:
        if not self.horizon > 0:
            raise InvalidInputError(f"message horizon must be positive, got {self.horizon}")
        if self.t_send < self.t_rs:
            raise InvalidInputError(f"t_send {self.t_send} precedes t_rs {self.t_rs}")
        if not 0 <= self.sender < 2**32:
            raise InvalidInputError(f"sender id {self.sender} does not fit in 32 bits")


def encode(msg: ReachMessage) -> bytes:
    """Little-endian layout: magic | sender u32 | t_send f64 | t_rs f64 |
    horizon f64 | n x (lo f64, hi f64). The axis count n is implied by the
    length, which is always 32 + 16 n."""
    parts = [_HEADER.pack(MAGIC, msg.sender, msg.t_send, msg.t_rs, msg.horizon)]
    parts.extend(_BOUNDS.pack(a, b) for a, b in zip(msg.hull.lo, msg.hull.hi))
    return b"".join(parts)


def decode(data: bytes) -> ReachMessage:
    if len(data) < HEADER_SIZE + BOUND_SIZE:
        raise MalformedMessageError(f"truncated message: {len(data)} bytes")
    if (len(data) - HEADER_SIZE) % BOUND_SIZE:
        raise MalformedMessageError(f"length {len(data)} is not 32 + 16 n")
    magic, sender, t_send, t_rs, horizon = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise MalformedMessageError(f"bad magic {magic!r}")
    n = (len(data) - HEADER_SIZE) // BOUND_SIZE
    lo, hi = [], []
    for k in range(n):
        a, b = _BOUNDS.unpack_from(data, HEADER_SIZE + BOUND_SIZE * k)
        if not (a <= b):
            raise MalformedMessageError(f"axis {k}: lo {a} > hi {b}")
        lo.append(a)
        hi.append(b)
    for v in (t_send, t_rs, horizon):
        if not math.isfinite(v):
            raise MalformedMessageError("non-finite timing field")
    try:
        return ReachMessage(sender, t_rs, horizon, HyperRectangle(lo, hi), t_send)
    except InvalidInputError as exc:
        raise MalformedMessageError(str(exc)) from exc


DROP = None


@dataclass(frozen=True)
class InFlight:
    seq: int
    payload: Any
    sender: Hashable
    recipient: Hashable
    t_send: float  # global
    deliver_at: Optional[float]  # global, or DROP
    delay: Optional[float]


class ChannelModel:
    """The in-flight message set of an asynchronous, lossy network.

    Delays are drawn uniformly from ``delay_law`` (seconds) unless a
    recipient has a fixed delay in ``fixed_delays``. All randomness comes
    from one seeded generator, so the delivery schedule is a function of
    the seed and the send sequence.
    """

    def __init__(
        self,
        delay_law: tuple[float, float] = (0.0005, 0.003),
        drop_prob: float = 0.0,
        rng_seed: int = 0,
        fixed_delays: Optional[dict[Hashable, float]] = None,
        corrupt_prob: float = 0.0,
    ) -> None:
        lo, hi = delay_law
        if not 0 <= lo <= hi:
            raise InvalidInputError(f"delay law needs 0 <= min <= max, got {delay_law}")
        if not (0.0 <= drop_prob <= 1.0 and 0.0 <= corrupt_prob <= 1.0):
            raise InvalidInputError("probabilities must lie in [0, 1]")
        self.delay_law = (float(lo), float(hi))
        self.drop_prob = drop_prob
        self.corrupt_prob = corrupt_prob
        self.rng_seed = rng_seed
        self.fixed_delays = dict(fixed_delays or {})
        self._rng = random.Random(rng_seed)
        self._seq = 0
        self._queue: list[tuple[float, int, InFlight]] = []
        self.in_flight: dict[int, InFlight] = {}

    def _draw_delay(self, recipient) -> float:
        if recipient in self.fixed_delays:
            return self.fixed_delays[recipient]
        lo, hi = self.delay_law
        return lo if lo == hi else self._rng.uniform(lo, hi)

    def send(self, payload, sender, recipients: Iterable, t_global: float) -> list[InFlight]:
        entries = []
        for r in recipients:
            self._seq += 1
            dropped = self.drop_prob > 0 and self._rng.random() < self.drop_prob
            if dropped:
                entry = InFlight(self._seq, payload, sender, r, t_global, DROP, None)
            else:
                delay = self._draw_delay(r)
                body = payload
                if self.corrupt_prob > 0 and self._rng.random() < self.corrupt_prob:
                    body = _corrupt(payload, self._rng)
                entry = InFlight(self._seq, body, sender, r, t_global, t_global + delay, delay)
                heapq.heappush(self._queue, (entry.deliver_at, entry.seq, entry))
            self.in_flight[entry.seq] = entry
            entries.append(entry)
        return entries

    def poll(self, recipient, t_global: float) -> list[InFlight]:
        """Remove and return every entry for ``recipient`` due by ``t_global``,
        earliest delivery first; dropped entries are discarded."""
        for seq in [s for s, e in self.in_flight.items() if e.deliver_at is DROP and e.recipient == recipient]:
            del self.in_flight[seq]
        due = []
        keep = []
        while self._queue and self._queue[0][0] <= t_global:
            item = heapq.heappop(self._queue)
            if item[2].recipient == recipient:
                due.append(item[2])
                del self.in_flight[item[2].seq]
            else:
                keep.append(item)
        for item in keep:
            heapq.heappush(self._queue, item)
        return due

    def next_delivery(self) -> Optional[float]:
        return self._queue[0][0] if self._queue else None


def _corrupt(payload, rng: random.Random):
    if not isinstance(payload, (bytes, bytearray)) or not payload:
        return payload
    data = bytearray(payload)
    data[rng.randrange(len(data))] ^= 0xFF
    return bytes(data)


def channel_send(ch: ChannelModel, msg, recipients, t_global: float, sender=None) -> ChannelModel:
    ch.send(msg, getattr(msg, "sender", sender), recipients, t_global)
    return ch


def channel_poll(ch: ChannelModel, recipient, t_global: float) -> tuple[list[InFlight], ChannelModel]:
    return ch.poll(recipient, t_global), ch
