"""Deterministic simulation loop wiring topology, comms, control, dynamics and
the avoidance filter; global consensus detection; batch comparison runner.

Per-step pipeline (fixed order):
  sample states into buffers -> effective topology -> per-agent visible states
  -> policy step -> avoidance filter on the requested turn -> integrate -> record.

All agents are updated simultaneously: every computation within a step uses the
positions sampled at the top of the step. Given the same Scenario (seed
included) a run is bit-identical across executions.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .comms import LINK_DELAY_BOUND_S, CommsBus, DelayModel, StampedState, sample_link_delays
from .control import (
    BACKTRACKING,
    ControlParams,
    ControlPolicyState,
    Mode,
    compute_feedback,
    policy_step,
)
from .dynamics import AgentKinematicState, MotionLimits, halt_command, integrate_step
from .geometry import Rect
from .topology import effective_topology, is_strongly_connected, validate_adjacency
from .world import (
    HALT_RANGE_PX,
    Arena,
    DecisionKind,
    avoid_heading,
    braking_distance,
    escape_window,
    raycast_scan,
)


class ScenarioError(ValueError):
    """A scenario failed validation; message carries the offending location."""


class SimulationCollisionError(RuntimeError):
    """An agent touched solid geometry; the run is aborted."""

    def __init__(self, step: int, agent_id: int, x: float, y: float):
        super().__init__(f"agent {agent_id} collided at step {step}, position ({x:.2f}, {y:.2f})")
        self.step = step
        self.agent_id = agent_id


@dataclass(frozen=True)
class AgentStart:
    x: float
    y: float
    heading: float = 0.0


@dataclass(frozen=True)
class Scenario:
    """Full description of one experiment."""

    arena: Arena
    base_topology: np.ndarray
    agents: tuple[AgentStart, ...]
    limits: MotionLimits = MotionLimits()
    params: ControlParams = ControlParams()
    delays: DelayModel | None = None  # None: drawn from the scenario seed
    T: float = 0.1                    # seconds per step, for reporting only
    seed: int = 0
    name: str = "scenario"

    def __post_init__(self) -> None:
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "base_topology", validate_adjacency(self.base_topology))

    @property
    def n(self) -> int:
        return len(self.agents)


def validate_scenario(sc: Scenario) -> None:
    if sc.n == 0:
        raise ScenarioError("agents: scenario has no agents")
    if sc.base_topology.shape[0] != sc.n:
        raise ScenarioError(
            f"topology: adjacency is {sc.base_topology.shape[0]}x{sc.base_topology.shape[0]} "
            f"but there are {sc.n} agents"
        )
    if sc.T <= 0:
        raise ScenarioError("T_s: step duration must be positive")
    for i, a in enumerate(sc.agents):
        if not sc.arena.in_playable(a.x, a.y):
            raise ScenarioError(f"agents[{i}]: position ({a.x}, {a.y}) is outside the borders")
        if sc.arena.inside_obstacle(a.x, a.y):
            raise ScenarioError(f"agents[{i}]: position ({a.x}, {a.y}) is inside an obstacle")
    if sc.delays is not None:
        if sc.delays.n != sc.n:
            raise ScenarioError(
                f"delays: matrix is {sc.delays.n}x{sc.delays.n} but there are {sc.n} agents"
            )
        if sc.delays.g_link.max(initial=0) * sc.T > LINK_DELAY_BOUND_S + 1e-12:
            raise ScenarioError(
                f"delays: link delays exceed the {LINK_DELAY_BOUND_S} s bound at T={sc.T}"
            )


def resolve_delays(sc: Scenario) -> DelayModel:
    """Explicit delays if the scenario lists them, otherwise seed-derived: link
    delays uniform on {0..floor(0.6/T)} steps, processing delay one step."""
    if sc.delays is not None:
        return sc.delays
    max_steps = int(LINK_DELAY_BOUND_S / sc.T + 1e-9)
    rng = np.random.default_rng([sc.seed, 0x0D])
    return DelayModel(g_self=1, g_link=sample_link_delays(sc.n, max_steps, rng))


@dataclass
class AgentRun:
    """Step-indexed trace of one agent plus its per-run counters."""

    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    v: np.ndarray
    modes: list[str]
    events: list[str]
    backtrack_count: int
    loss_intervals: list[tuple[int, int]]

    @property
    def final_mode(self) -> str:
        return self.modes[-1]


@dataclass
class RunResult:
    scenario_name: str
    algorithm: str
    n: int
    T: float
    steps: int
    converged: bool
    consensus_step: int | None
    agents: list[AgentRun]
    final_consensus_point: tuple[float, float]
    min_clearance: float
    sc_fraction: float                 # fraction of steps with strongly connected effective topology
    topology_fingerprints: list[int] = field(default_factory=list)

    @property
    def consensus_time_s(self) -> float | None:
        return None if self.consensus_step is None else self.consensus_step * self.T

    @property
    def max_backtrack_count(self) -> int:
        return max(a.backtrack_count for a in self.agents)


def detect_global_consensus(
    policy_states: list[ControlPolicyState], kins: list[AgentKinematicState]
) -> bool:
    """True iff every agent is Done, standing still, with a passing last test."""
    return all(
        ps.mode is Mode.DONE and kin.v == 0.0 and bool(ps.last_test)
        for ps, kin in zip(policy_states, kins)
    )


def _topology_fingerprint(a_eff: np.ndarray) -> int:
    bits = 0
    for value in a_eff.ravel():
        bits = (bits << 1) | int(value)
    return bits


def run(scenario: Scenario) -> RunResult:
    """Execute steps 1..step_max, or fewer if global consensus is reached."""
    validate_scenario(scenario)
    n = scenario.n
    arena = scenario.arena
    limits = scenario.limits
    params = scenario.params
    algorithm = params.algorithm
    delays = resolve_delays(scenario)
    bus = CommsBus(n, delays)

    kins = [AgentKinematicState(a.x, a.y, a.heading) for a in scenario.agents]
    pols = [ControlPolicyState() for _ in range(n)]

    xs: list[list[float]] = [[] for _ in range(n)]
    ys: list[list[float]] = [[] for _ in range(n)]
    phis: list[list[float]] = [[] for _ in range(n)]
    vs: list[list[float]] = [[] for _ in range(n)]
    modes: list[list[str]] = [[] for _ in range(n)]
    events: list[list[str]] = [[] for _ in range(n)]
    loss_open: list[int | None] = [None] * n
    loss_intervals: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    fingerprints: list[int] = []
    sc_steps = 0
    min_clearance = math.inf
    converged = False
    consensus_step: int | None = None
    steps_run = 0

    for k in range(1, params.step_max + 1):
        steps_run = k
        for i, kin in enumerate(kins):
            bus.record(StampedState(i, kin.x, kin.y, kin.v, k))
        positions = [(kin.x, kin.y) for kin in kins]
        a_eff = effective_topology(scenario.base_topology, positions, arena.zones)
        fingerprints.append(_topology_fingerprint(a_eff))
        if is_strongly_connected(a_eff):
            sc_steps += 1

        commands: list[tuple[float, float]] = []
        for i in range(n):
            kin = kins[i]
            own = bus.self_state(i, k)
            neighbors = bus.visible_neighbor_states(i, k, a_eff)
            f = compute_feedback(neighbors, own) if neighbors else None
            prev_mode = pols[i].mode
            out, pols[i] = policy_step(algorithm, pols[i], f, own, k, kin, params, limits)

            u1, u2 = out.u1, out.u2
            step_events: list[str] = []
            if kin.v > 0.0 or (kin.v == 0.0 and u1 > 0.0):
                scan = raycast_scan(
                    kin.x, kin.y, kin.phi, arena,
                    [positions[j] for j in range(n) if j != i],
                )
                if scan.collided:
                    raise SimulationCollisionError(k, i, kin.x, kin.y)
                decision = avoid_heading(scan, u2)
                if decision.kind is DecisionKind.TURN:
                    u2 = decision.delta
                elif decision.kind is DecisionKind.HALT:
                    # at creep speed, slip out along a verified-clear sector
                    # instead of freezing against a parked neighbour
                    esc = escape_window(scan) if kin.v <= 4.0 * limits.a else None
                    if esc is not None:
                        u1 = limits.a
                        u2 = esc
                        step_events.append("avoid_creep")
                    else:
                        u1 = halt_command(kin.v, limits.d)
                        u2 = 0.0
                        step_events.append("avoid_halt")
                if decision.kind is not DecisionKind.HALT and kin.v > 0.0:
                    # speed-scaled guard: two agents closing head-on can punch
                    # through the fixed 5 px ring before either can stop, which
                    # would blind both scans; brake while braking still helps
                    guard = HALT_RANGE_PX + braking_distance(kin.v, limits.d) + kin.v
                    if scan.ranges[60:121].min() <= guard:
                        u1 = halt_command(kin.v, limits.d)
                        step_events.append("avoid_brake")

            if k > params.step_min:
                if f is None and loss_open[i] is None:
                    loss_open[i] = k
                    step_events.append("loss_start")
                elif f is not None and loss_open[i] is not None:
                    loss_intervals[i].append((loss_open[i], k - 1))
                    loss_open[i] = None
                    step_events.append("loss_end")
            if pols[i].mode is Mode.BACKTRACK and prev_mode is not Mode.BACKTRACK:
                step_events.append("backtrack_start")
            if pols[i].mode is Mode.DONE and prev_mode is not Mode.DONE:
                step_events.append("done")
            commands.append((u1, u2))
            events[i].append(";".join(step_events))

        for i in range(n):
            u1, u2 = commands[i]
            prev_v = kins[i].v
            kins[i] = integrate_step(kins[i], u1, u2, limits)
            kin = kins[i]
            clearance = arena.clearance(kin.x, kin.y)
            min_clearance = min(min_clearance, clearance)
            if clearance <= 0.0 or not arena.in_playable(kin.x, kin.y):
                raise SimulationCollisionError(k, i, kin.x, kin.y)
            if prev_v != 0.0 and kin.v == 0.0:
                events[i][-1] = ";".join(filter(None, [events[i][-1], "halted"]))
            xs[i].append(kin.x)
            ys[i].append(kin.y)
            phis[i].append(kin.phi)
            vs[i].append(kin.v)
            modes[i].append(pols[i].mode.value)

        if detect_global_consensus(pols, kins):
            converged = True
            consensus_step = k
            break

    for i in range(n):
        if loss_open[i] is not None:
            loss_intervals[i].append((loss_open[i], steps_run))

    agents = [
        AgentRun(
            x=np.array(xs[i]),
            y=np.array(ys[i]),
            phi=np.array(phis[i]),
            v=np.array(vs[i]),
            modes=modes[i],
            events=events[i],
            backtrack_count=pols[i].backtrack_count,
            loss_intervals=loss_intervals[i],
        )
        for i in range(n)
    ]
    fx = sum(kin.x for kin in kins) / n
    fy = sum(kin.y for kin in kins) / n
    return RunResult(
        scenario_name=scenario.name,
        algorithm=algorithm,
        n=n,
        T=scenario.T,
        steps=steps_run,
        converged=converged,
        consensus_step=consensus_step,
        agents=agents,
        final_consensus_point=(fx, fy),
        min_clearance=min_clearance,
        sc_fraction=sc_steps / steps_run if steps_run else 0.0,
        topology_fingerprints=fingerprints,
    )


# ---------------------------------------------------------------------------
# batch comparison


@dataclass
class BatchRun:
    seed: int
    converged: bool
    consensus_time_s: float | None
    max_backtrack_count: int
    error: str | None = None


@dataclass
class BatchCell:
    scenario_name: str
    algorithm: str
    runs: list[BatchRun] = field(default_factory=list)

    @property
    def n_converged(self) -> int:
        return sum(1 for r in self.runs if r.converged)

    @property
    def mean_time_s(self) -> float | None:
        times = [r.consensus_time_s for r in self.runs if r.converged]
        return sum(times) / len(times) if times else None


@dataclass
class Comparison:
    scenario_names: list[str]
    algorithms: list[str]
    cells: dict[tuple[str, str], BatchCell]

    def render_text(self) -> str:
        """Mean seconds to consensus per (algorithm, scenario) cell; a dash
        marks cells where no seed converged."""
        col_w = max(12, *(len(s) + 2 for s in self.scenario_names))
        head = "algorithm".ljust(14) + "".join(s.rjust(col_w) for s in self.scenario_names)
        lines = [head, "-" * len(head)]
        for alg in self.algorithms:
            row = alg.ljust(14)
            for name in self.scenario_names:
                cell = self.cells[(name, alg)]
                mean = cell.mean_time_s
                if mean is None:
                    text = f"- (0/{len(cell.runs)})"
                else:
                    text = f"{mean:.1f} ({cell.n_converged}/{len(cell.runs)})"
                row += text.rjust(col_w)
            lines.append(row)
        return "\n".join(lines)


def _batch_one(args: tuple[Scenario, str, int]) -> BatchRun:
    scenario, algorithm, seed = args
    sc = replace(
        scenario, seed=seed, params=replace(scenario.params, algorithm=algorithm), delays=None
    )
    try:
        result = run(sc)
    except (ScenarioError, SimulationCollisionError) as exc:
        return BatchRun(seed, False, None, 0, error=str(exc))
    return BatchRun(seed, result.converged, result.consensus_time_s, result.max_backtrack_count)


def batch_compare(
    scenarios: list[Scenario],
    algorithms: list[str],
    seeds: list[int],
    parallel: int = 0,
) -> Comparison:
    """Run every (scenario, algorithm, seed) cell; individual failures are
    recorded in their cell and the batch continues."""
    if not scenarios or not algorithms or not seeds:
        raise ValueError("batch_compare needs non-empty scenarios, algorithms and seeds")
    jobs = [
        (sc, alg, seed)
        for sc in scenarios
        for alg in algorithms
        for seed in seeds
    ]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(_batch_one, jobs))
    else:
        outcomes = [_batch_one(job) for job in jobs]
    cells: dict[tuple[str, str], BatchCell] = {}
    for (sc, alg, _seed), outcome in zip(jobs, outcomes):
        cell = cells.setdefault((sc.name, alg), BatchCell(sc.name, alg))
        cell.runs.append(outcome)
    return Comparison(
        scenario_names=[sc.name for sc in scenarios],
        algorithms=list(algorithms),
        cells=cells,
    )
