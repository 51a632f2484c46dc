"""Anytime reachability by face lifting over hyper-rectangles.

One face-lifting step works in two stages:

1. Find a box ``E`` that provably contains every trajectory from the
   current box over ``[0, dt]`` (a Picard-style a-priori enclosure,
   validated when ``cr + [0, dt] * f(E)`` lands back inside ``E``).
2. Move each face of the current box by the extreme normal derivative
   over a slab of ``E`` next to that face. Faces can move outward or
   inward; both moves are sound because the slab is deep enough that no
   trajectory can cross it within ``dt``.

The face bounds are monotone in time within a step, so the hull of the
box before and after the step covers every intermediate state.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

from .dynamics import ModelSpec
from .errors import InvalidInputError, ModelError, StepCollapseError
from .geometry import HyperRectangle, LinearConstraintSet, interval_hull, possibly_intersects

MIN_STEP = 1e-12
ENCLOSURE_ITERATIONS = 8


class BudgetMode(str, enum.Enum):
    DETERMINISTIC = "deterministic"
    WALLCLOCK = "wallclock"


@dataclass(frozen=True)
class RuntimeBudget:
    """Pass-count limit (deterministic) or milliseconds (wallclock)."""

    mode: BudgetMode = BudgetMode.DETERMINISTIC
    limit: float = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", BudgetMode(self.mode))
        if not self.limit > 0:
            raise InvalidInputError(f"budget limit must be positive, got {self.limit}")


class ReachSegment(NamedTuple):
    t_start: float  # offset from t_rs, s
    t_end: float
    box: HyperRectangle


@dataclass(frozen=True)
class ReachResult:
    hull: HyperRectangle
    intermediates: tuple[ReachSegment, ...]
    t_rs: float
    horizon: float
    local_safe: bool
    passes_completed: int
    final_step: float
    budget_overrun: bool = False
    elapsed_ms: float = field(default=0.0, compare=False)

    def box_at(self, offset: float) -> Optional[HyperRectangle]:
        """Intermediate box covering time ``offset`` after ``t_rs`` (None outside the horizon)."""
        segs = self.intermediates
        if not segs or offset < segs[0].t_start or offset > segs[-1].t_end:
            return None
        lo, hi = 0, len(segs) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if segs[mid].t_end < offset:
                lo = mid + 1
            else:
                hi = mid
        return segs[lo].box


def _enclosure(cr: HyperRectangle, dt: float, u: Sequence[float], model: ModelSpec):
    """Validated box holding all trajectories from ``cr`` over ``[0, dt]``, or None."""
    n = cr.dim
    clo, chi = cr.lo, cr.hi
    d = _bounds(model, cr, u)
    elo = tuple(clo[k] + dt * min(d.lo[k], 0.0) for k in range(n))
    ehi = tuple(chi[k] + dt * max(d.hi[k], 0.0) for k in range(n))
    for _ in range(ENCLOSURE_ITERATIONS):
        d = _bounds(model, HyperRectangle._raw(elo, ehi), u)
        nlo = tuple(clo[k] + dt * min(d.lo[k], 0.0) for k in range(n))
        nhi = tuple(chi[k] + dt * max(d.hi[k], 0.0) for k in range(n))
        if all(nlo[k] >= elo[k] and nhi[k] <= ehi[k] for k in range(n)):
            return HyperRectangle._raw(nlo, nhi)
        # Grow past the candidate by the amount it overshot.
        elo = tuple(
            nlo[k] - 2.0 * (elo[k] - nlo[k]) if nlo[k] < elo[k] else elo[k] for k in range(n)
        )
        ehi = tuple(
            nhi[k] + 2.0 * (nhi[k] - ehi[k]) if nhi[k] > ehi[k] else ehi[k] for k in range(n)
        )
    return None


def _bounds(model: ModelSpec, box: HyperRectangle, u: Sequence[float]) -> HyperRectangle:
    d = model.deriv_bounds(box, u)
    # inf and nan both survive summation, so one check covers every bound
    if not math.isfinite(sum(d.lo) - sum(d.hi)):
        raise ModelError(f"{model.name}: non-finite derivative bound over {box}")
    return d


def _lift_faces(cr, enc, dt, u, model) -> HyperRectangle:
    n = cr.dim
    clo, chi = cr.lo, cr.hi
    elo, ehi = enc.lo, enc.hi
    whole = _bounds(model, enc, u)
    raw = HyperRectangle._raw
    new_lo = list(elo)
    new_hi = list(ehi)
    for k in range(n):
        # Slab must be at least as deep as the farthest inward move.
        top = min(clo[k] + dt * max(whole.hi[k], 0.0), ehi[k])
        slab_hi = ehi[:k] + (top,) + ehi[k + 1 :]
        m = _bounds(model, raw(elo, slab_hi), u).lo[k]
        bottom = max(chi[k] - dt * max(-whole.lo[k], 0.0), elo[k])
        slab_lo = elo[:k] + (bottom,) + elo[k + 1 :]
        mx = _bounds(model, raw(slab_lo, ehi), u).hi[k]
        a = clo[k] + dt * m
        b = chi[k] + dt * mx
        if a > b:
            # Only reachable through rounding on a degenerate axis.
            a, b = b, a
        if a > new_lo[k]:
            new_lo[k] = a
        if b < new_hi[k]:
            new_hi[k] = b
    return raw(tuple(new_lo), tuple(new_hi))


def single_face_lift(
    cr: HyperRectangle,
    step: float,
    remaining: float,
    u: Sequence[float],
    model: ModelSpec,
) -> tuple[HyperRectangle, HyperRectangle, float]:
    """Advance ``cr`` by one admissible substep.

    Returns ``(advanced, step_hull, new_remaining)``.
    """
    if not (step > 0 and remaining > 0):
        raise InvalidInputError(f"step and remaining must be positive, got {step}, {remaining}")
    if cr.dim != model.state_dim:
        raise InvalidInputError(f"{model.name} expects dimension {model.state_dim}, box has {cr.dim}")
    dt = min(step, remaining)
    if remaining - dt < MIN_STEP:
        dt = remaining
    while True:
        if dt < MIN_STEP:
            raise StepCollapseError(f"{model.name}: substep fell below {MIN_STEP} s from {cr}")
        enc = _enclosure(cr, dt, u, model)
        if enc is not None:
            break
        dt *= 0.5
    advanced = _lift_faces(cr, enc, dt, u, model)
    step_hull = interval_hull([cr, advanced])
    new_remaining = remaining - dt
    if new_remaining < MIN_STEP:
        new_remaining = 0.0
    return advanced, step_hull, new_remaining


def _sweep(I, u, T, step, model, unsafe, deadline):
    cr = I
    remaining = T
    offset = 0.0
    safe = True
    segments = []
    while remaining > 0.0:
        if deadline is not None and time.perf_counter() > deadline:
            return None
        advanced, step_hull, new_remaining = single_face_lift(cr, step, remaining, u, model)
        end = T - new_remaining
        segments.append(ReachSegment(offset, end, step_hull))
        if safe and unsafe is not None and possibly_intersects(step_hull, unsafe):
            safe = False
        offset = end
        cr = advanced
        remaining = new_remaining
    return segments, safe


def reach_anytime(
    I: HyperRectangle,
    u: Sequence[float],
    t_rs: float,
    T: float,
    h0: float,
    budget: RuntimeBudget,
    unsafe_local: Optional[LinearConstraintSet],
    model: ModelSpec,
) -> ReachResult:
    """Sweep the horizon at step ``h0``, halving the step after each completed
    sweep while the budget allows, and keep the last completed sweep.

    The first sweep always runs to completion; if that alone exceeds a
    wallclock budget the result is flagged ``budget_overrun``.
    """
    if not (T > 0 and h0 > 0):
        raise InvalidInputError(f"T and h0 must be positive, got {T}, {h0}")
    if unsafe_local is not None and unsafe_local.dim != I.dim:
        raise InvalidInputError(f"local unsafe set has width {unsafe_local.dim}, state has {I.dim}")
    start = time.perf_counter()
    wallclock = budget.mode is BudgetMode.WALLCLOCK
    deadline = start + budget.limit / 1000.0 if wallclock else None

    segments, safe = _sweep(I, u, T, h0, model, unsafe_local, None)
    passes = 1
    step = h0
    overrun = wallclock and time.perf_counter() > deadline
    while True:
        if wallclock:
            if time.perf_counter() >= deadline:
                break
        elif passes >= budget.limit:
            break
        finer = _sweep(I, u, T, step / 2, model, unsafe_local, deadline)
        if finer is None:
            break
        segments, safe = finer
        step /= 2
        passes += 1

    return ReachResult(
        hull=interval_hull([s.box for s in segments]),
        intermediates=tuple(segments),
        t_rs=t_rs,
        horizon=T,
        local_safe=safe,
        passes_completed=passes,
        final_step=step,
        budget_overrun=overrun,
        elapsed_ms=(time.perf_counter() - start) * 1000.0,
    )


def refine_monotone_check(result_coarse: ReachResult, result_fine: ReachResult) -> bool:
    """True iff the finer result's hull is no wider than the coarser one on any axis."""
    if result_coarse.horizon != result_fine.horizon:
        raise InvalidInputError(
            f"horizons differ: {result_coarse.horizon} vs {result_fine.horizon}"
        )
    if result_coarse.hull.dim != result_fine.hull.dim:
        raise InvalidInputError("hull dimensions differ")
    return all(
        f <= c + 1e-9
        for c, f in zip(result_coarse.hull.widths(), result_fine.hull.widths())
    )
