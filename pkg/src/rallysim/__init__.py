"""rallysim: deterministic simulator of unicycle agents rallying to positional
consensus over a delayed, position-dependent communication network."""

from .comms import CommsBus, DelayedStateBuffer, DelayModel, StampedState
from .control import (
    ALGORITHMS,
    BACKTRACKING,
    HISTORY,
    MEMORYLESS,
    ControlOutput,
    ControlParams,
    ControlPolicyState,
    FeedbackVector,
    Mode,
    compute_feedback,
    consensus_test,
    desired_heading,
    policy_step,
    policy_step_backtrack,
    policy_step_history,
    policy_step_memoryless,
)
from .dynamics import AgentKinematicState, MotionLimits, halt_command, integrate_step, wrap_angle
from .engine import (
    AgentStart,
    RunResult,
    Scenario,
    ScenarioError,
    SimulationCollisionError,
    batch_compare,
    detect_global_consensus,
    run,
)
from .geometry import Rect
from .outputs import emit_outputs, write_summary_json, write_trajectory_csv
from .scenario_io import (
    gen_scenario,
    list_bundled,
    load_bundled,
    load_scenario,
    resolve_scenario,
    save_scenario,
)
from .topology import effective_topology, is_strongly_connected, laplacian, zero_eigen_check
from .world import Arena, HeadingDecision, LaserScan, avoid_heading, raycast_scan

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "AgentKinematicState",
    "AgentStart",
    "Arena",
    "BACKTRACKING",
    "CommsBus",
    "ControlOutput",
    "ControlParams",
    "ControlPolicyState",
    "DelayModel",
    "DelayedStateBuffer",
    "FeedbackVector",
    "HISTORY",
    "HeadingDecision",
    "LaserScan",
    "MEMORYLESS",
    "Mode",
    "MotionLimits",
    "Rect",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SimulationCollisionError",
    "StampedState",
    "avoid_heading",
    "batch_compare",
    "compute_feedback",
    "consensus_test",
    "desired_heading",
    "detect_global_consensus",
    "effective_topology",
    "emit_outputs",
    "gen_scenario",
    "halt_command",
    "integrate_step",
    "is_strongly_connected",
    "laplacian",
    "list_bundled",
    "load_bundled",
    "load_scenario",
    "policy_step",
    "policy_step_backtrack",
    "policy_step_history",
    "policy_step_memoryless",
    "raycast_scan",
    "resolve_scenario",
    "run",
    "save_scenario",
    "wrap_angle",
    "write_summary_json",
    "write_trajectory_csv",
    "zero_eigen_check",
]
