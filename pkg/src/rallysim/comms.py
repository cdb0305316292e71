"""Delayed broadcast bus.

Every agent's state is sampled into a per-agent ring buffer once per step.
A receiver sees each in-neighbour's sample aged by the per-link delay, and its
own sample aged by the processing delay. Lookups before enough history exists
clamp to the oldest recorded sample (start-up warm-up behaviour).
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

# Communication delay bound in seconds; per-link step delays are drawn so that
# delay * T never exceeds this.
LINK_DELAY_BOUND_S = 0.6


@dataclass(frozen=True, slots=True)
class StampedState:
    """One broadcast sample: who, where, how fast, and at which step."""

    agent_id: int
    x: float
    y: float
    v: float
    step: int


@dataclass(frozen=True)
class DelayModel:
    """Fixed delays for a whole run: g_self steps of processing delay applied to
    an agent's view of itself, and g_link[j, i] steps on the link from sender j
    to receiver i."""

    g_self: int
    g_link: np.ndarray

    def __post_init__(self) -> None:
        link = np.asarray(self.g_link, dtype=np.int64)
        if link.ndim != 2 or link.shape[0] != link.shape[1]:
            raise ValueError(f"link delay matrix must be square, got shape {link.shape}")
        if self.g_self < 0 or (link < 0).any():
            raise ValueError("delays must be non-negative")
        object.__setattr__(self, "g_link", link)

    @property
    def n(self) -> int:
        return self.g_link.shape[0]

    @property
    def max_delay(self) -> int:
        return max(self.g_self, int(self.g_link.max()) if self.g_link.size else 0)


def sample_link_delays(n: int, max_steps: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a fixed per-(sender, receiver) delay matrix, uniform on {0..max_steps}."""
    return rng.integers(0, max_steps + 1, size=(n, n), dtype=np.int64)


class DelayedStateBuffer:
    """Ring of contiguous-step samples for one agent."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("buffer capacity must be at least 1")
        self._samples: deque[StampedState] = deque(maxlen=capacity)

    def record(self, state: StampedState) -> None:
        if self._samples and state.step != self._samples[-1].step + 1:
            raise ValueError(
                f"non-monotonic record: step {state.step} after {self._samples[-1].step}"
            )
        self._samples.append(state)

    def lookup(self, step: int, delay: int) -> StampedState:
        """Sample from ``step - delay``, clamped to the oldest available."""
        if not self._samples:
            raise LookupError("lookup on empty buffer")
        newest = self._samples[-1].step
        if step > newest:
            raise LookupError(f"lookup at step {step} but newest recorded is {newest}")
        oldest = self._samples[0].step
        want = max(step - delay, oldest)
        return self._samples[want - oldest]

    def __len__(self) -> int:
        return len(self._samples)


class CommsBus:
    """All per-agent buffers plus the delay model, owned by one run."""

    def __init__(self, n: int, delays: DelayModel):
        if delays.n != n:
            raise ValueError(f"delay model is {delays.n}-agent, bus is {n}-agent")
        self.n = n
        self.delays = delays
        capacity = delays.max_delay + 1
        self.buffers = [DelayedStateBuffer(capacity) for _ in range(n)]

    def record(self, state: StampedState) -> None:
        self.buffers[state.agent_id].record(state)

    def visible_neighbor_states(
        self, i: int, step: int, a_eff: np.ndarray
    ) -> list[StampedState]:
        """Delayed samples of every agent currently sending to ``i``.

        Empty when agent i has no inbound links - the communication-loss signal.
        """
        out: list[StampedState] = []
        row = a_eff[i]
        for j in range(self.n):
            if row[j]:
                out.append(self.buffers[j].lookup(step, int(self.delays.g_link[j, i])))
        return out

    def self_state(self, i: int, step: int) -> StampedState:
        """Agent i's own sample, aged by the processing delay."""
        return self.buffers[i].lookup(step, self.delays.g_self)
