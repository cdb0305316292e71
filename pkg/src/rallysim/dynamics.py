"""Discrete-time unicycle kinematics with saturated speed, acceleration and turn rate.

One simulation step integrates in a fixed order: velocity, then heading, then
position. Golden tests pin this order; changing it changes every trajectory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TAU = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.remainder(theta, TAU)
    if wrapped <= -math.pi:
        wrapped += TAU
    return wrapped


@dataclass(frozen=True, slots=True)
class MotionLimits:
    """Actuator saturation: accel/decel magnitudes (px/step^2), forward and
    reverse speed caps (px/step), and max heading change per step (rad)."""

    a: float = 0.1
    d: float = 0.5
    v_max: float = 2.0
    v_min: float = 2.0
    omega_max: float = math.radians(30.0)

    def __post_init__(self) -> None:
        for name in ("a", "d", "v_max", "v_min", "omega_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"motion limit {name} must be positive")
        if self.v_min > self.v_max:
            raise ValueError("reverse speed cap v_min must not exceed v_max")


@dataclass(frozen=True, slots=True)
class AgentKinematicState:
    """Pose and velocities of one agent.

    x, y in arena pixels; phi wrapped to (-pi, pi]; v signed (negative while
    reversing); omega is the heading change applied on the last step.
    """

    x: float
    y: float
    phi: float
    v: float = 0.0
    omega: float = 0.0


def integrate_step(
    s: AgentKinematicState, u1: float, u2: float, limits: MotionLimits
) -> AgentKinematicState:
    """Advance one step under acceleration command u1 and turn command u2.

    v' = clamp(v + u1, -v_min, v_max); phi' = wrap(phi + clamp(u2, +-omega_max));
    then the position moves by v' along phi'.
    """
    v = s.v + u1
    if v > limits.v_max:
        v = limits.v_max
    elif v < -limits.v_min:
        v = -limits.v_min
    turn = u2
    if turn > limits.omega_max:
        turn = limits.omega_max
    elif turn < -limits.omega_max:
        turn = -limits.omega_max
    phi = wrap_angle(s.phi + turn)
    return AgentKinematicState(
        x=s.x + v * math.cos(phi),
        y=s.y + v * math.sin(phi),
        phi=phi,
        v=v,
        omega=turn,
    )


def halt_command(v: float, d: float) -> float:
    """Acceleration command that brakes toward zero without overshooting the sign.

    Repeated application reaches v == 0 in exactly ceil(|v0| / d) steps.
    """
    if v > 0:
        return -min(d, v)
    if v < 0:
        return min(d, -v)
    return 0.0
