"""Shared hypothesis strategies."""

from __future__ import annotations

from hypothesis import strategies as st

from swarmverify.geometry import HyperRectangle

coord = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
width = st.floats(min_value=0.0, max_value=50.0, allow_nan=False, allow_infinity=False)


@st.composite
def boxes(draw, dim: int | None = None, max_dim: int = 5) -> HyperRectangle:
    n = dim if dim is not None else draw(st.integers(1, max_dim))
    lo = [draw(coord) for _ in range(n)]
    hi = [a + draw(width) for a in lo]
    return HyperRectangle(lo, hi)


@st.composite
def point_in(draw, box: HyperRectangle) -> tuple[float, ...]:
    fr = st.floats(min_value=0.0, max_value=1.0)
    return tuple(min(b, a + draw(fr) * (b - a)) for a, b in zip(box.lo, box.hi))
