"""Cart-pole plant: equations of motion, Euler integration, reinforcement.

State is (x, x_dot, theta, theta_dot) in SI units with theta measured from
top center.  The angular acceleration has no x_ddot dependence, so it is
evaluated first and substituted into the cart equation.  Integration is
forward Euler at the servo step (dt = 1/servo_rate); failures are checked
at step boundaries only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

DISTANCE_COST = "DistanceCost"
FAILURE_DRIVEN = "FailureDriven"
REINFORCEMENT_MODES = (DISTANCE_COST, FAILURE_DRIVEN)

# Normalization scales for the velocity components (positions use the bounds).
X_DOT_SCALE = 1.0  # m/s
THETA_DOT_SCALE = 1.0  # rad/s


@dataclass(frozen=True)
class CartPoleState:
    x: float  # m
    x_dot: float  # m/s
    theta: float  # rad from vertical
    theta_dot: float  # rad/s

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.x_dot, self.theta, self.theta_dot])


@dataclass(frozen=True)
class PhysicsParams:
    m_c: float = 1.0  # kg, cart
    m_p: float = 0.1  # kg, pole
    pole_len: float = 1.0  # m
    gravity: float = 9.8  # m/s^2
    force_scale: float = 10.0  # N per unit action, also the clamp magnitude
    dt: float = 0.02  # s, 1/servo_rate

    def __post_init__(self):
        for name in ("m_c", "m_p", "pole_len", "gravity", "force_scale", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")


@dataclass(frozen=True)
class Bounds:
    x_r: float = 2.4  # m
    theta_r: float = math.radians(12.0)  # rad

    def __post_init__(self):
        if self.x_r <= 0 or self.theta_r <= 0:
            raise ConfigError("bounds must be positive")


def accelerations(state: CartPoleState, force: float, params: PhysicsParams) -> tuple[float, float]:
    """(x_ddot, theta_ddot) for a horizontal force on the cart, in N."""
    sin_t = math.sin(state.theta)
    cos_t = math.cos(state.theta)
    total_m = params.m_c + params.m_p
    # theta_ddot first: its equation does not involve x_ddot.
    centripetal = params.m_p * params.pole_len * state.theta_dot**2 * sin_t
    theta_ddot = (params.gravity * sin_t + cos_t * (-force - centripetal) / total_m) / (
        params.pole_len * (4.0 / 3.0 - params.m_p * cos_t**2 / total_m)
    )
    x_ddot = (force + params.m_p * params.pole_len * (state.theta_dot**2 * sin_t - theta_ddot * cos_t)) / total_m
    return x_ddot, theta_ddot


def step(state: CartPoleState, action: float, params: PhysicsParams) -> CartPoleState:
    """One Euler step under the (clamped) force force_scale * action."""
    force = min(max(params.force_scale * action, -params.force_scale), params.force_scale)
    x_ddot, theta_ddot = accelerations(state, force, params)
    dt = params.dt
    return CartPoleState(
        x=state.x + dt * state.x_dot,
        x_dot=state.x_dot + dt * x_ddot,
        theta=state.theta + dt * state.theta_dot,
        theta_dot=state.theta_dot + dt * theta_ddot,
    )


def is_failure(state: CartPoleState, bounds: Bounds) -> bool:
    return abs(state.x) > bounds.x_r or abs(state.theta) > bounds.theta_r


def failure_reason(state: CartPoleState, bounds: Bounds) -> str | None:
    """'failure-x' or 'failure-theta' for a failed state, else None."""
    if abs(state.x) > bounds.x_r:
        return "failure-x"
    if abs(state.theta) > bounds.theta_r:
        return "failure-theta"
    return None


def reinforcement(state: CartPoleState, bounds: Bounds, mode: str) -> float:
    """Raw reinforcement of a state (a cost in DistanceCost mode)."""
    if mode == DISTANCE_COST:
        return math.sqrt((state.theta / bounds.theta_r) ** 2 + (state.x / bounds.x_r) ** 2)
    if mode == FAILURE_DRIVEN:
        return -1.0 if is_failure(state, bounds) else 0.0
    raise ConfigError(f"unknown reinforcement mode {mode!r}")


def random_initial_state(rng: np.random.Generator, bounds: Bounds, init_fraction: float) -> CartPoleState:
    """Uniform start within +/- init_fraction of each bound (velocity scales 1 m/s, 1 rad/s)."""
    if not 0.0 <= init_fraction <= 1.0:
        raise ConfigError(f"init_fraction must be in [0, 1], got {init_fraction}")
    u = rng.uniform(-init_fraction, init_fraction, 4)
    return CartPoleState(
        x=u[0] * bounds.x_r,
        x_dot=u[1] * X_DOT_SCALE,
        theta=u[2] * bounds.theta_r,
        theta_dot=u[3] * THETA_DOT_SCALE,
    )


def normalize(state: CartPoleState, bounds: Bounds) -> np.ndarray:
    """State scaled to O(1) units: positions by their bounds, velocities by 1."""
    return np.array(
        [
            state.x / bounds.x_r,
            state.x_dot / X_DOT_SCALE,
            state.theta / bounds.theta_r,
            state.theta_dot / THETA_DOT_SCALE,
        ]
    )


def denormalize_delta(delta: np.ndarray, bounds: Bounds) -> np.ndarray:
    """Inverse scaling for a normalized state change (model outputs)."""
    return np.asarray(delta) * np.array([bounds.x_r, X_DOT_SCALE, bounds.theta_r, THETA_DOT_SCALE])
