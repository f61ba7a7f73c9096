"""Command-line experiment runner."""

from __future__ import annotations

import argparse
import sys

from .harness import emit_outputs, run_experiment
from .scenarios import ALGORITHMS, Scenario, ScenarioError, load_scenario


def _parse_seeds(text: str) -> list[int]:
    if "," in text:
        return [int(s) for s in text.split(",") if s.strip()]
    return list(range(int(text)))


def _parse_checkpoints(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shareable-bandits",
        description="Multi-player shareable-arm bandit experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario and write CSV outputs")
    run_p.add_argument("--scenario", required=True, help="preset name or JSON file")
    run_p.add_argument(
        "--algo",
        default=None,
        help=f"algorithm(s), comma separated or 'all'; choices: {', '.join(ALGORITHMS)}",
    )
    run_p.add_argument("--horizon", type=int, default=None)
    run_p.add_argument("--seeds", default=None, help="count N or comma list")
    run_p.add_argument("--delta", type=float, default=None,
                       help="confidence level for capacity brackets (default 2/T)")
    run_p.add_argument("--feedback", choices=["sdi", "sda"], default=None)
    run_p.add_argument("--checkpoints", default=None, help="comma list of slots")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--jobs", type=int, default=1)

    sub.add_parser("list-scenarios", help="list built-in presets")

    val_p = sub.add_parser("validate", help="validate a scenario file")
    val_p.add_argument("--scenario", required=True)
    return parser


def _apply_overrides(scenario: Scenario, args: argparse.Namespace) -> Scenario:
    fields = {
        "name": scenario.name,
        "num_arms": scenario.num_arms,
        "num_players": scenario.num_players,
        "capacities": scenario.capacities,
        "means": scenario.means,
        "horizon": args.horizon or scenario.horizon,
        "feedback": args.feedback or scenario.feedback,
        "permute_means": scenario.permute_means,
        "algorithms": scenario.algorithms,
        "seeds": scenario.seeds,
        "checkpoints": [],
        "delta": args.delta if args.delta is not None else scenario.delta,
    }
    if args.algo:
        fields["algorithms"] = (
            list(ALGORITHMS) if args.algo == "all" else args.algo.split(",")
        )
    if args.seeds:
        fields["seeds"] = _parse_seeds(args.seeds)
    if args.checkpoints:
        fields["checkpoints"] = _parse_checkpoints(args.checkpoints)
    elif args.horizon is None:
        fields["checkpoints"] = scenario.checkpoints
    return Scenario(**fields)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        from .scenarios import preset_scenarios

        for name, sc in sorted(preset_scenarios().items()):
            print(
                f"{name}: K={sc.num_arms} M={sc.num_players} T={sc.horizon} "
                f"feedback={sc.feedback} algorithms={','.join(sc.algorithms)}"
            )
        return 0

    if args.command == "validate":
        try:
            scenario = load_scenario(args.scenario)
            scenario.validate()
        except ScenarioError as exc:
            print(f"invalid scenario: {exc}", file=sys.stderr)
            return 1
        print(f"scenario {scenario.name!r} is valid")
        return 0

    try:
        scenario = _apply_overrides(load_scenario(args.scenario), args)
    except ScenarioError as exc:
        print(f"invalid scenario: {exc}", file=sys.stderr)
        return 1
    agg, results = run_experiment(scenario, jobs=args.jobs, log=print)
    paths = emit_outputs(agg, results, scenario, args.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
