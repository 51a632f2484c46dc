"""Intervals, hyper-rectangles and the set operations the verifiers need.

Boxes store their bounds as two float tuples; this keeps the face-lifting
inner loop in plain Python arithmetic, which is faster than numpy at the
state dimensions involved (n <= ~16).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import InvalidInputError

#: State ordering of the planar quadcopter is (x, v_x, y, v_y).
DEFAULT_POSITION_AXES = (0, 2)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidInputError(f"interval bounds must be finite: [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise InvalidInputError(f"interval has lo > hi: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


class HyperRectangle:
    """Axis-aligned box, immutable once built."""

    __slots__ = ("lo", "hi")

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __init__(self, lo: Iterable[float], hi: Iterable[float]) -> None:
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if len(lo) == 0 or len(lo) != len(hi):
            raise InvalidInputError(f"box needs matching non-empty bounds, got {len(lo)} and {len(hi)}")
        for k, (a, b) in enumerate(zip(lo, hi)):
            if not (math.isfinite(a) and math.isfinite(b)):
                raise InvalidInputError(f"axis {k} has non-finite bound [{a}, {b}]")
            if a > b:
                raise InvalidInputError(f"axis {k} has lo > hi: [{a}, {b}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def _raw(cls, lo: tuple[float, ...], hi: tuple[float, ...]) -> HyperRectangle:
        # Hot-path constructor: caller guarantees validity.
        box = object.__new__(cls)
        object.__setattr__(box, "lo", lo)
        object.__setattr__(box, "hi", hi)
        return box

    @classmethod
    def from_intervals(cls, dims: Sequence[Interval | tuple[float, float]]) -> HyperRectangle:
        pairs = [(d.lo, d.hi) if isinstance(d, Interval) else tuple(d) for d in dims]
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @classmethod
    def point(cls, values: Iterable[float]) -> HyperRectangle:
        values = tuple(float(v) for v in values)
        return cls(values, values)

    def __setattr__(self, name, value):
        raise AttributeError("HyperRectangle is immutable")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, HyperRectangle):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        axes = " x ".join(f"[{a:.6g}, {b:.6g}]" for a, b in zip(self.lo, self.hi))
        return f"HyperRectangle({axes})"

    def __getstate__(self):
        return (self.lo, self.hi)

    def __setstate__(self, state):
        object.__setattr__(self, "lo", state[0])
        object.__setattr__(self, "hi", state[1])

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def dims(self) -> list[Interval]:
        return [Interval(a, b) for a, b in zip(self.lo, self.hi)]

    def widths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    def contains_point(self, point: Sequence[float], tol: float = 0.0) -> bool:
        return all(a - tol <= p <= b + tol for a, b, p in zip(self.lo, self.hi, point))

    def contains(self, other: HyperRectangle, tol: float = 0.0) -> bool:
        _check_same_dim(self, other)
        return all(
            a - tol <= c and d <= b + tol
            for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi)
        )

    def with_axis(self, axis: int, lo: float, hi: float) -> HyperRectangle:
        los = list(self.lo)
        his = list(self.hi)
        los[axis] = lo
        his[axis] = hi
        return HyperRectangle._raw(tuple(los), tuple(his))


def _check_same_dim(a: HyperRectangle, b: HyperRectangle) -> None:
    if a.dim != b.dim:
        raise InvalidInputError(f"dimension mismatch: {a.dim} vs {b.dim}")


def interval_hull(rects: Sequence[HyperRectangle]) -> HyperRectangle:
    """Smallest box containing every box in ``rects``."""
    if not rects:
        raise InvalidInputError("interval_hull needs at least one box")
    n = rects[0].dim
    lo = list(rects[0].lo)
    hi = list(rects[0].hi)
    for r in rects[1:]:
        if r.dim != n:
            raise InvalidInputError(f"dimension mismatch: {n} vs {r.dim}")
        for k in range(n):
            if r.lo[k] < lo[k]:
                lo[k] = r.lo[k]
            if r.hi[k] > hi[k]:
                hi[k] = r.hi[k]
    return HyperRectangle._raw(tuple(lo), tuple(hi))


def min_distance(
    a: HyperRectangle,
    b: HyperRectangle,
    position_axes: Sequence[int] = DEFAULT_POSITION_AXES,
) -> float:
    """Euclidean lower bound on the distance between any point of ``a`` and of ``b``,
    measured on ``position_axes`` only."""
    total = 0.0
    for k in position_axes:
        if not (0 <= k < a.dim and k < b.dim):
            raise InvalidInputError(f"position axis {k} out of range for dims {a.dim}, {b.dim}")
        gap = max(0.0, a.lo[k] - b.hi[k], b.lo[k] - a.hi[k])
        total += gap * gap
    return math.sqrt(total)


class LinearConstraintSet:
    """The polyhedron {x : C x <= d}, one row per constraint."""

    __slots__ = ("rows",)

    def __init__(self, rows: Iterable[tuple[Sequence[float], float]]) -> None:
        rows = tuple((tuple(float(c) for c in coeffs), float(bound)) for coeffs, bound in rows)
        if not rows:
            raise InvalidInputError("constraint set needs at least one row")
        width = len(rows[0][0])
        if width == 0 or any(len(c) != width for c, _ in rows):
            raise InvalidInputError("constraint rows must share a non-zero coefficient length")
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, name, value):
        raise AttributeError("LinearConstraintSet is immutable")

    def __repr__(self) -> str:
        return f"LinearConstraintSet({len(self.rows)} rows, n={self.dim})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LinearConstraintSet):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self) -> int:
        return hash(self.rows)

    def __getstate__(self):
        return self.rows

    def __setstate__(self, state):
        object.__setattr__(self, "rows", state)

    @property
    def dim(self) -> int:
        return len(self.rows[0][0])

    def satisfied_by(self, point: Sequence[float]) -> bool:
        return all(sum(c * x for c, x in zip(coeffs, point)) <= bound for coeffs, bound in self.rows)


def possibly_intersects(rect: HyperRectangle, unsafe: LinearConstraintSet) -> bool:
    """False only when some row's minimum over the box already exceeds its bound.

    Each row is tested independently, so a box can be reported as
    intersecting a polyhedron it actually misses; it is never the other
    way round.
    """
    if unsafe.dim != rect.dim:
        raise InvalidInputError(f"constraint width {unsafe.dim} != box dimension {rect.dim}")
    for coeffs, bound in unsafe.rows:
        row_min = 0.0
        for c, a, b in zip(coeffs, rect.lo, rect.hi):
            row_min += c * a if c >= 0.0 else c * b
        if row_min > bound:
            return False
    return True


def bloat(rect: HyperRectangle, eps: Sequence[float]) -> HyperRectangle:
    if len(eps) != rect.dim:
        raise InvalidInputError(f"bloat vector has length {len(eps)}, box has {rect.dim}")
    if any(not (e >= 0.0) for e in eps):
        raise InvalidInputError(f"bloat amounts must be non-negative, got {list(eps)}")
    return HyperRectangle(
        [a - e for a, e in zip(rect.lo, eps)],
        [b + e for b, e in zip(rect.hi, eps)],
    )
