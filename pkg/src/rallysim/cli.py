"""Command-line entry point.

Subcommands:
  run <scenario> [--out DIR] [--seed N] [--algorithm NAME]   single run + outputs
  batch <manifest> [--parallel K] [--out DIR]                comparison grid
  validate <scenario>                                        schema/geometry check
  gen --agents N --loss-pct P --seed S [--out FILE]          random scenario
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .control import ALGORITHMS
from .engine import ScenarioError, SimulationCollisionError, batch_compare, run
from .outputs import emit_outputs
from .scenario_io import (
    gen_scenario,
    list_bundled,
    resolve_scenario,
    save_scenario,
    scenario_to_dict,
)


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed, delays=None)
    if args.algorithm is not None:
        scenario = replace(scenario, params=replace(scenario.params, algorithm=args.algorithm))
    result = run(scenario)
    out_dir = Path(args.out) if args.out else Path(f"out-{scenario.name}-seed{scenario.seed}")
    paths = emit_outputs(result, scenario, out_dir)
    status = (
        f"consensus at step {result.consensus_step} ({result.consensus_time_s:.1f} s)"
        if result.converged
        else f"no consensus within {result.steps} steps"
    )
    print(f"{scenario.name} [{scenario.params.algorithm}, seed {scenario.seed}]: {status}")
    print(f"outputs in {paths['trajectory'].parent}")
    return 0


def _cmd_batch(args: argparse.Namespace) -> int:
    manifest_path = Path(args.manifest)
    try:
        doc = json.loads(manifest_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read manifest {manifest_path}: {exc}", file=sys.stderr)
        return 1
    for key in ("scenarios", "algorithms", "seeds"):
        if key not in doc or not isinstance(doc[key], list) or not doc[key]:
            print(f"error: manifest needs a non-empty {key!r} list", file=sys.stderr)
            return 1
    scenarios = []
    for ref in doc["scenarios"]:
        candidate = manifest_path.parent / ref
        scenarios.append(resolve_scenario(candidate if candidate.is_file() else ref))
    comparison = batch_compare(scenarios, doc["algorithms"], doc["seeds"], parallel=args.parallel)
    text = comparison.render_text()
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.txt").write_text(text + "\n", encoding="utf-8")
        cells = {
            f"{name}|{alg}": {
                "converged": cell.n_converged,
                "runs": len(cell.runs),
                "mean_time_s": cell.mean_time_s,
                "per_seed": [
                    {
                        "seed": r.seed,
                        "converged": r.converged,
                        "consensus_time_s": r.consensus_time_s,
                        "max_backtrack_count": r.max_backtrack_count,
                        "error": r.error,
                    }
                    for r in cell.runs
                ],
            }
            for (name, alg), cell in sorted(comparison.cells.items())
        }
        (out / "comparison.json").write_text(
            json.dumps(cells, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        print(f"comparison written to {out}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args.scenario)
    print(f"ok: {scenario.name} ({scenario.n} agents, "
          f"{len(scenario.arena.zones)} zones, {len(scenario.arena.obstacles)} obstacles)")
    return 0


def _cmd_gen(args: argparse.Namespace) -> int:
    scenario = gen_scenario(args.agents, args.loss_pct, args.seed, algorithm=args.algorithm)
    if args.out:
        save_scenario(scenario, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(scenario_to_dict(scenario), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rallysim",
        description="Simulate mobile agents rallying to positional consensus under "
        "position-dependent communication blackouts.",
        epilog=f"bundled scenarios: {', '.join(list_bundled())}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write its outputs")
    p_run.add_argument("scenario", help="scenario file path or bundled scenario name")
    p_run.add_argument("--out", help="output directory (default: out-<name>-seed<seed>)")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument("--algorithm", choices=ALGORITHMS, help="override the control policy")
    p_run.set_defaults(fn=_cmd_run)

    p_batch = sub.add_parser("batch", help="run a manifest of scenarios x algorithms x seeds")
    p_batch.add_argument("manifest", help="JSON manifest with scenarios/algorithms/seeds lists")
    p_batch.add_argument("--parallel", type=int, default=0, help="worker processes (default: serial)")
    p_batch.add_argument("--out", help="directory for comparison.txt / comparison.json")
    p_batch.set_defaults(fn=_cmd_batch)

    p_val = sub.add_parser("validate", help="check a scenario file and exit")
    p_val.add_argument("scenario", help="scenario file path or bundled scenario name")
    p_val.set_defaults(fn=_cmd_validate)

    p_gen = sub.add_parser("gen", help="generate a seeded random scenario")
    p_gen.add_argument("--agents", type=int, default=6)
    p_gen.add_argument("--loss-pct", type=float, default=5.0)
    p_gen.add_argument("--seed", type=int, default=1)
    p_gen.add_argument("--algorithm", choices=ALGORITHMS, default="backtracking")
    p_gen.add_argument("--out", help="write the scenario file here instead of stdout")
    p_gen.set_defaults(fn=_cmd_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 1
    except SimulationCollisionError as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
