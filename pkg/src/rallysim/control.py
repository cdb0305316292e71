"""Consensus feedback law, the consensus-circle test, and the three per-agent
mode machines: memoryless halt, back-tracking, and history following.

Mode machine overview
---------------------

All three policies share a core: during warm-up (step <= step_min) the agent
broadcasts without moving; afterwards it Seeks - steering toward the mean of
its visible neighbours and accelerating until the (delayed) speed reading hits
v_max - and brakes to Done once the feedback norm drops inside the consensus
circle. They differ in what happens when the agent stops receiving data:

* memoryless: brake and wait (HaltLoss) until data returns.
* backtracking: brake, then reverse along the current heading in b1-step
  bursts until data returns, brake again, turn by phi_b (direction alternates
  across recovery events), commit to b2 forward steps, then re-aim.
* history: keep driving toward the last stored estimate of the neighbour mean;
  halt there if still cut off within the consensus radius of it (the false
  consensus stop); re-aim the moment data returns.

A consensus-halted agent whose feedback norm later drifts back outside the
circle re-enters Seek, so a stale Done never wedges the group.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .comms import StampedState
from .dynamics import AgentKinematicState, MotionLimits, halt_command, wrap_angle

MEMORYLESS = "memoryless"
BACKTRACKING = "backtracking"
HISTORY = "history"
ALGORITHMS = (MEMORYLESS, BACKTRACKING, HISTORY)


@dataclass(frozen=True, slots=True)
class FeedbackVector:
    """Mean relative displacement to visible neighbours plus the delayed own speed."""

    ux: float
    uy: float
    uv: float

    @property
    def norm(self) -> float:
        return math.hypot(self.ux, self.uy)


@dataclass(frozen=True, slots=True)
class ControlParams:
    ccr: float = 30.0
    step_min: int = 10
    step_max: int = 500
    b1: int = 5
    b2: int = 10
    phi_b: float = math.radians(45.0)
    algorithm: str = MEMORYLESS

    def __post_init__(self) -> None:
        if not (0 < self.step_min < self.step_max):
            raise ValueError("need 0 < step_min < step_max")
        if self.b1 < 1 or self.b2 < 1:
            raise ValueError("b1 and b2 must be at least 1")
        if self.ccr <= 0:
            raise ValueError("consensus circle radius must be positive")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}, expected one of {ALGORITHMS}")


class Mode(enum.Enum):
    WARMUP = "warmup"
    SEEK = "seek"
    HALT_LOSS = "halt_loss"
    BACKTRACK = "backtrack"
    REROUTE_PAUSE = "reroute_pause"
    REROUTE = "reroute"
    HISTORY_FOLLOW = "history_follow"
    HALT_CONSENSUS = "halt_consensus"
    DONE = "done"


@dataclass(frozen=True, slots=True)
class ControlPolicyState:
    mode: Mode = Mode.WARMUP
    steps_left: int = 0              # remaining steps of the current Backtrack/Reroute burst
    turn_remaining: float = 0.0      # reroute turn still to be emitted (rad)
    turn_parity: int = 1             # +1 turns left on the next recovery, -1 right
    backtrack_count: int = 0         # disjoint loss intervals seen (backtracking only)
    memory_point: tuple[float, float] | None = None
    in_loss: bool = False
    last_test: bool | None = None    # most recent consensus_test result


@dataclass(frozen=True, slots=True)
class ControlOutput:
    u1: float
    u2: float
    halted: bool = False


def compute_feedback(neighbor_states: list[StampedState], own: StampedState) -> FeedbackVector:
    """Mean displacement from the (delayed) own position to each visible
    neighbour's delayed position, plus the delayed own velocity."""
    if not neighbor_states:
        raise ValueError("feedback undefined with no visible neighbours")
    ux = 0.0
    uy = 0.0
    for s in neighbor_states:
        ux += s.x - own.x
        uy += s.y - own.y
    k = len(neighbor_states)
    return FeedbackVector(ux / k, uy / k, own.v)


def consensus_test(f: FeedbackVector, ccr: float) -> bool:
    """Strictly inside the consensus circle."""
    return f.norm < ccr


def desired_heading(f: FeedbackVector) -> float | None:
    """World-frame heading toward the neighbour mean; None for the zero vector
    (hold the current heading)."""
    if f.ux == 0.0 and f.uy == 0.0:
        return None
    return math.atan2(f.uy, f.ux)


def _clamp_turn(turn: float, limits: MotionLimits) -> float:
    if turn > limits.omega_max:
        return limits.omega_max
    if turn < -limits.omega_max:
        return -limits.omega_max
    return turn


def _steer_toward(target_heading: float | None, kin: AgentKinematicState,
                  limits: MotionLimits) -> float:
    if target_heading is None:
        return 0.0
    return _clamp_turn(wrap_angle(target_heading - kin.phi), limits)


def _policy_step(
    algorithm: str,
    ps: ControlPolicyState,
    f: FeedbackVector | None,
    own: StampedState,
    k: int,
    kin: AgentKinematicState,
    params: ControlParams,
    limits: MotionLimits,
) -> tuple[ControlOutput, ControlPolicyState]:
    if k <= params.step_min:
        return ControlOutput(0.0, 0.0, halted=True), replace(ps, mode=Mode.WARMUP)

    lost = f is None
    backtrack_count = ps.backtrack_count
    if lost and not ps.in_loss and algorithm == BACKTRACKING:
        backtrack_count += 1

    memory_point = ps.memory_point
    last_test = ps.last_test
    if not lost:
        last_test = consensus_test(f, params.ccr)
        if algorithm == HISTORY:
            memory_point = (own.x + f.ux, own.y + f.uy)

    mode = Mode.SEEK if ps.mode == Mode.WARMUP else ps.mode
    steps_left = ps.steps_left
    turn_remaining = ps.turn_remaining
    parity = ps.turn_parity

    out: ControlOutput
    while True:
        if mode == Mode.SEEK:
            if lost:
                if algorithm == HISTORY and memory_point is not None:
                    mode = Mode.HISTORY_FOLLOW
                    continue
                mode = Mode.HALT_LOSS
                continue
            if last_test:
                if kin.v == 0.0:
                    mode = Mode.DONE
                    continue
                mode = Mode.HALT_CONSENSUS
                out = ControlOutput(halt_command(kin.v, limits.d), 0.0, halted=True)
                break
            u1 = limits.a if own.v < limits.v_max else 0.0
            u2 = _steer_toward(desired_heading(f), kin, limits)
            out = ControlOutput(u1, u2)
            break

        if mode == Mode.HALT_LOSS:
            if not lost:
                mode = Mode.SEEK
                continue
            if kin.v != 0.0:
                out = ControlOutput(halt_command(kin.v, limits.d), 0.0, halted=True)
                break
            if algorithm == BACKTRACKING:
                mode = Mode.BACKTRACK
                steps_left = params.b1
                continue
            out = ControlOutput(0.0, 0.0, halted=True)
            break

        if mode == Mode.BACKTRACK:
            if steps_left == 0:
                mode = Mode.REROUTE_PAUSE
                continue
            steps_left -= 1
            out = ControlOutput(-limits.a, 0.0)
            break

        if mode == Mode.REROUTE_PAUSE:
            if kin.v != 0.0:
                out = ControlOutput(halt_command(kin.v, limits.d), 0.0, halted=True)
                break
            mode = Mode.REROUTE
            steps_left = params.b2
            turn_remaining = parity * params.phi_b
            parity = -parity
            continue

        if mode == Mode.REROUTE:
            if steps_left == 0:
                if lost:
                    # still cut off after a full leg: turn by phi_b again and
                    # probe the next direction (re-aiming at the mean needs
                    # data we do not have)
                    steps_left = params.b2
                    turn_remaining = parity * params.phi_b
                    parity = -parity
                else:
                    mode = Mode.SEEK
                    continue
            steps_left -= 1
            u2 = _clamp_turn(turn_remaining, limits)
            turn_remaining -= u2
            u1 = limits.a if own.v < limits.v_max else 0.0
            out = ControlOutput(u1, u2)
            break

        if mode == Mode.HISTORY_FOLLOW:
            if not lost:
                mode = Mode.SEEK
                continue
            if memory_point is None:
                mode = Mode.HALT_LOSS
                continue
            sx = memory_point[0] - own.x
            sy = memory_point[1] - own.y
            if math.hypot(sx, sy) < params.ccr:
                # false-consensus stop: within the circle of a stale estimate
                out = ControlOutput(halt_command(kin.v, limits.d), 0.0, halted=True)
                break
            u1 = limits.a if own.v < limits.v_max else 0.0
            u2 = _steer_toward(math.atan2(sy, sx), kin, limits)
            out = ControlOutput(u1, u2)
            break

        if mode == Mode.HALT_CONSENSUS:
            if kin.v != 0.0:
                out = ControlOutput(halt_command(kin.v, limits.d), 0.0, halted=True)
                break
            mode = Mode.DONE
            continue

        if mode == Mode.DONE:
            if lost:
                if algorithm == HISTORY and memory_point is not None:
                    mode = Mode.HISTORY_FOLLOW
                    continue
                mode = Mode.HALT_LOSS
                continue
            if not last_test:
                mode = Mode.SEEK
                continue
            out = ControlOutput(0.0, 0.0, halted=True)
            break

        raise AssertionError(f"unhandled mode {mode}")

    new_ps = ControlPolicyState(
        mode=mode,
        steps_left=steps_left,
        turn_remaining=turn_remaining,
        turn_parity=parity,
        backtrack_count=backtrack_count,
        memory_point=memory_point,
        in_loss=lost,
        last_test=last_test,
    )
    return out, new_ps


def policy_step_memoryless(ps, f, own, k, kin, params, limits):
    """One step of the halt-on-loss baseline policy."""
    return _policy_step(MEMORYLESS, ps, f, own, k, kin, params, limits)


def policy_step_backtrack(ps, f, own, k, kin, params, limits):
    """One step of the back-tracking recovery policy."""
    return _policy_step(BACKTRACKING, ps, f, own, k, kin, params, limits)


def policy_step_history(ps, f, own, k, kin, params, limits):
    """One step of the history-following (memory enabled) policy."""
    return _policy_step(HISTORY, ps, f, own, k, kin, params, limits)


_POLICY_FNS = {
    MEMORYLESS: policy_step_memoryless,
    BACKTRACKING: policy_step_backtrack,
    HISTORY: policy_step_history,
}


def policy_step(
    algorithm: str,
    ps: ControlPolicyState,
    f: FeedbackVector | None,
    own: StampedState,
    k: int,
    kin: AgentKinematicState,
    params: ControlParams,
    limits: MotionLimits,
) -> tuple[ControlOutput, ControlPolicyState]:
    """Dispatch one policy step by algorithm name."""
    return _POLICY_FNS[algorithm](ps, f, own, k, kin, params, limits)
