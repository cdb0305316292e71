"""Run outputs: the trajectory log, a machine-readable summary, and two vector
plots rendered purely from the log (re-rendering from the same log gives
byte-identical files)."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .engine import RunResult, Scenario

TRAJECTORY_HEADER = ["step", "agent_id", "x", "y", "phi", "v", "mode", "event"]


def write_trajectory_csv(result: RunResult, path: str | Path) -> None:
    """One row per agent per step: step,agent_id,x,y,phi,v,mode,event."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for k in range(result.steps):
            for i, agent in enumerate(result.agents):
                writer.writerow(
                    [
                        k + 1,
                        i,
                        repr(float(agent.x[k])),
                        repr(float(agent.y[k])),
                        repr(float(agent.phi[k])),
                        repr(float(agent.v[k])),
                        agent.modes[k],
                        agent.events[k],
                    ]
                )


def read_trajectory_csv(path: str | Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRAJECTORY_HEADER:
            raise ValueError(f"{path}: unexpected trajectory header {reader.fieldnames}")
        return list(reader)


def summary_dict(result: RunResult) -> dict:
    return {
        "scenario": result.scenario_name,
        "algorithm": result.algorithm,
        "n_agents": result.n,
        "steps_run": result.steps,
        "converged": result.converged,
        "consensus_step": result.consensus_step,
        "consensus_time_s": result.consensus_time_s,
        "final_consensus_point": list(result.final_consensus_point),
        "min_obstacle_clearance_px": result.min_clearance,
        "strongly_connected_fraction": result.sc_fraction,
        "per_agent": [
            {
                "agent_id": i,
                "final_mode": a.final_mode,
                "final_position": [float(a.x[-1]), float(a.y[-1])],
                "backtrack_count": a.backtrack_count,
                "loss_intervals": [list(iv) for iv in a.loss_intervals],
            }
            for i, a in enumerate(result.agents)
        ],
    }


def write_summary_json(result: RunResult, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(summary_dict(result), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _setup_matplotlib():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed hash salt and no creation date keep SVG output reproducible
    plt.rcParams["svg.hashsalt"] = "rallysim"
    return plt


def _group_rows_by_agent(rows: list[dict]) -> dict[int, list[dict]]:
    by_agent: dict[int, list[dict]] = {}
    for row in rows:
        by_agent.setdefault(int(row["agent_id"]), []).append(row)
    return by_agent


def render_xy_plot(log_path: str | Path, scenario: Scenario, out_path: str | Path) -> None:
    """Paths in the arena with obstacle (dark) and blackout (light) rectangles."""
    plt = _setup_matplotlib()
    rows = read_trajectory_csv(log_path)
    by_agent = _group_rows_by_agent(rows)

    fig, ax = plt.subplots(figsize=(9, 9 * scenario.arena.height / scenario.arena.width))
    x_lo, y_lo, x_hi, y_hi = scenario.arena.playable_bounds
    ax.add_patch(
        plt.Rectangle((x_lo, y_lo), x_hi - x_lo, y_hi - y_lo, fill=False, edgecolor="black")
    )
    for r in scenario.arena.zones:
        ax.add_patch(plt.Rectangle((r.x, r.y), r.w, r.h, facecolor="0.85", edgecolor="0.6"))
    for r in scenario.arena.obstacles:
        ax.add_patch(plt.Rectangle((r.x, r.y), r.w, r.h, facecolor="0.45", edgecolor="0.2"))
    for agent_id in sorted(by_agent):
        xs = [float(row["x"]) for row in by_agent[agent_id]]
        ys = [float(row["y"]) for row in by_agent[agent_id]]
        (line,) = ax.plot(xs, ys, lw=1.2, label=f"agent {agent_id}")
        ax.plot(xs[0], ys[0], marker="o", ms=5, color=line.get_color())
        ax.plot(xs[-1], ys[-1], marker="s", ms=5, color=line.get_color())
    ax.set_xlim(0, scenario.arena.width)
    ax.set_ylim(0, scenario.arena.height)
    ax.set_aspect("equal")
    ax.set_xlabel("x [px]")
    ax.set_ylabel("y [px]")
    ax.set_title(f"{scenario.name}: trajectories ({scenario.params.algorithm})")
    ax.legend(loc="upper right", fontsize=8)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_distance_plot(log_path: str | Path, scenario: Scenario, out_path: str | Path) -> None:
    """Distance of every agent from the arena origin against time."""
    plt = _setup_matplotlib()
    rows = read_trajectory_csv(log_path)
    by_agent = _group_rows_by_agent(rows)

    fig, ax = plt.subplots(figsize=(9, 5))
    for agent_id in sorted(by_agent):
        t = [int(row["step"]) * scenario.T for row in by_agent[agent_id]]
        d = [
            (float(row["x"]) ** 2 + float(row["y"]) ** 2) ** 0.5
            for row in by_agent[agent_id]
        ]
        ax.plot(t, d, lw=1.2, label=f"agent {agent_id}")
    ax.set_xlabel("time [s]")
    ax.set_ylabel("distance from origin [px]")
    ax.set_title(f"{scenario.name}: distance from origin ({scenario.params.algorithm})")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def emit_outputs(result: RunResult, scenario: Scenario, out_dir: str | Path) -> dict[str, Path]:
    """Write trajectory.csv, summary.json and the two SVG plots into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectory": out / "trajectory.csv",
        "summary": out / "summary.json",
        "xy_plot": out / "trajectory_xy.svg",
        "distance_plot": out / "distance_vs_time.svg",
    }
    write_trajectory_csv(result, paths["trajectory"])
    write_summary_json(result, paths["summary"])
    render_xy_plot(paths["trajectory"], scenario, paths["xy_plot"])
    render_distance_plot(paths["trajectory"], scenario, paths["distance_plot"])
    return paths
