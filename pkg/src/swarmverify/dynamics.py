"""Agent motion models and the waypoint controller.

Every model exposes a point derivative and an interval derivative bound
over a box. With the input held fixed, the built-in models have
derivatives that are affine in the state, so their box bounds are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidInputError
from .geometry import HyperRectangle

G = 9.81

Vector = Sequence[float]
DerivFn = Callable[[Vector, Vector], tuple[float, ...]]
BoundsFn = Callable[[HyperRectangle, Vector], HyperRectangle]
# (k, n) states and (k, m) inputs -> (k, n) derivatives
BatchFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    state_dim: int
    input_dim: int
    deriv: DerivFn
    deriv_bounds: BoundsFn
    position_axes: tuple[int, ...] = (0,)
    deriv_batch: Optional[BatchFn] = None


class QuadState(NamedTuple):
    x: float
    v_x: float
    y: float
    v_y: float


class ControlInput(NamedTuple):
    theta: float  # pitch, rad
    phi: float  # roll, rad

    @classmethod
    def checked(cls, theta: float, phi: float) -> ControlInput:
        if not (abs(theta) < math.pi / 2 and abs(phi) < math.pi / 2):
            raise InvalidInputError(f"pitch/roll must lie in (-pi/2, pi/2), got ({theta}, {phi})")
        return cls(float(theta), float(phi))


def quad_deriv(s: Vector, u: Vector) -> tuple[float, float, float, float]:
    theta, phi = u[0], u[1]
    return (s[1], G * math.tan(theta), s[3], G * math.tan(phi) / math.cos(theta))


def quad_deriv_bounds(box: HyperRectangle, u: Vector) -> HyperRectangle:
    if box.dim != 4:
        raise InvalidInputError(f"quadcopter box must be 4-D, got {box.dim}")
    theta, phi = u[0], u[1]
    ax = G * math.tan(theta)
    ay = G * math.tan(phi) / math.cos(theta)
    lo, hi = box.lo, box.hi
    return HyperRectangle._raw((lo[1], ax, lo[3], ay), (hi[1], ax, hi[3], ay))


def quad_deriv_batch(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = np.empty_like(s)
    out[:, 0] = s[:, 1]
    out[:, 1] = G * np.tan(u[:, 0])
    out[:, 2] = s[:, 3]
    out[:, 3] = G * np.tan(u[:, 1]) / np.cos(u[:, 0])
    return out


def constant_deriv(s: Vector, u: Vector) -> tuple[float]:
    return (float(u[0]),)


def constant_deriv_bounds(box: HyperRectangle, u: Vector) -> HyperRectangle:
    if box.dim != 1:
        raise InvalidInputError(f"constant1d box must be 1-D, got {box.dim}")
    c = float(u[0])
    return HyperRectangle._raw((c,), (c,))


def constant_deriv_batch(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.broadcast_to(u[:, :1], s.shape).astype(float)


def harmonic_deriv(s: Vector, u: Vector) -> tuple[float, float]:
    return (s[1], -s[0])


def harmonic_deriv_bounds(box: HyperRectangle, u: Vector) -> HyperRectangle:
    if box.dim != 2:
        raise InvalidInputError(f"harmonic2d box must be 2-D, got {box.dim}")
    lo, hi = box.lo, box.hi
    return HyperRectangle._raw((lo[1], -hi[0]), (hi[1], -lo[0]))


def harmonic_deriv_batch(s: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.stack([s[:, 1], -s[:, 0]], axis=1)


QUADCOPTER = ModelSpec("quadcopter4d", 4, 2, quad_deriv, quad_deriv_bounds, (0, 2), quad_deriv_batch)
# constant1d reads its rate from the input vector: u = (c,)
CONSTANT = ModelSpec("constant1d", 1, 1, constant_deriv, constant_deriv_bounds, (0,), constant_deriv_batch)
HARMONIC = ModelSpec("harmonic2d", 2, 0, harmonic_deriv, harmonic_deriv_bounds, (0, 1), harmonic_deriv_batch)

MODELS: dict[str, ModelSpec] = {m.name: m for m in (QUADCOPTER, CONSTANT, HARMONIC)}


def get_model(name: str) -> ModelSpec:
    try:
        return MODELS[name]
    except KeyError:
        raise InvalidInputError(f"unknown model {name!r}; known: {sorted(MODELS)}") from None


def rk4_step(model: ModelSpec, state: Vector, u: Vector, dt: float) -> tuple[float, ...]:
    f = model.deriv
    h = 0.5 * dt
    k1 = f(state, u)
    k2 = f([s + h * k for s, k in zip(state, k1)], u)
    k3 = f([s + h * k for s, k in zip(state, k2)], u)
    k4 = f([s + dt * k for s, k in zip(state, k3)], u)
    w = dt / 6.0
    return tuple(
        s + w * (a + 2.0 * (b + c) + d)
        for s, a, b, c, d in zip(state, k1, k2, k3, k4)
    )


def rk4_batch(model: ModelSpec, states: np.ndarray, inputs: np.ndarray, dt: float, steps: int) -> np.ndarray:
    """Integrate many initial states at once; returns (steps + 1, k, n)."""
    f = model.deriv_batch
    if f is None:
        raise InvalidInputError(f"{model.name} has no batch derivative")
    x = np.asarray(states, dtype=float)
    out = np.empty((steps + 1,) + x.shape)
    out[0] = x
    for i in range(steps):
        k1 = f(x, inputs)
        k2 = f(x + 0.5 * dt * k1, inputs)
        k3 = f(x + 0.5 * dt * k2, inputs)
        k4 = f(x + dt * k3, inputs)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = x
    return out


@dataclass(frozen=True)
class PidGains:
    kp: tuple[float, float] = (0.3, 0.3)
    ki: tuple[float, float] = (0.0001, 0.0001)
    kd: tuple[float, float] = (0.5, 0.5)
    output_clamp: float = 0.35

    def __post_init__(self) -> None:
        if not 0.0 < self.output_clamp < math.pi / 2:
            raise InvalidInputError(f"output_clamp must lie in (0, pi/2), got {self.output_clamp}")


class PidMemory(NamedTuple):
    integral_x: float = 0.0
    integral_y: float = 0.0


def pid_step(
    s: Vector,
    waypoint: tuple[float, float],
    gains: PidGains,
    dt: float,
    memory: PidMemory = PidMemory(),
) -> tuple[ControlInput, PidMemory]:
    """One control update toward ``waypoint``.

    Pitch drives x and roll drives y. The derivative term acts on the
    measured velocity rather than on the differentiated error. The
    integral only accumulates while that axis is unsaturated
    (conditional-integration anti-windup).
    """
    if dt <= 0:
        raise InvalidInputError(f"dt must be positive, got {dt}")
    c = gains.output_clamp
    ex = waypoint[0] - s[0]
    ey = waypoint[1] - s[2]
    ix, iy = memory.integral_x, memory.integral_y
    theta = gains.kp[0] * ex + gains.ki[0] * (ix + ex * dt) - gains.kd[0] * s[1]
    phi = gains.kp[1] * ey + gains.ki[1] * (iy + ey * dt) - gains.kd[1] * s[3]
    if abs(theta) < c:
        ix += ex * dt
    if abs(phi) < c:
        iy += ey * dt
    theta = min(c, max(-c, theta))
    phi = min(c, max(-c, phi))
    return ControlInput(theta, phi), PidMemory(ix, iy)
