"""Command-line entry point.

    neutralwalk explore      one walk per model
    neutralwalk batch        many seeded walks per model, averaged
    neutralwalk sweep-size   batches over fleet sizes with fixed demand
    neutralwalk sweep-alpha  batches over neutrality thresholds
    neutralwalk oracle-check bundled small-instance self test

Without ``--seed`` every command uses a fixed default seed, so two identical
invocations write identical files.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path
from typing import List, Optional

from .config import MODEL_CHOICES, ExperimentConfig, config_from_mapping, default_config, parse_config
from .experiments import DEFAULT_MASTER_SEED, run_batch, sweep_alpha, sweep_fleet_size
from .explorer import evolvability, explore, nn_size, topology_metrics
from .genotypes import ConfigError, ModelKind
from .oracle import oracle_check
from .output import write_aggregate, write_exploration, write_sweep, write_sweep_csv

COMMANDS = ("explore", "batch", "sweep-size", "sweep-alpha", "oracle-check")


def _number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _csv_numbers(text: str) -> List:
    return [_number(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="TOML experiment file")
    shared.add_argument("--model", choices=MODEL_CHOICES, help="fleet design (default: both)")
    shared.add_argument("--seed", type=_u64, help=f"master seed (default {DEFAULT_MASTER_SEED})")
    shared.add_argument("--steps", type=int, help="walk steps per run (default 20000)")
    shared.add_argument("--runs", type=int, help="runs per batch (default 50)")
    shared.add_argument("--alpha", type=_number, help="neutrality threshold in percent (default 5)")
    shared.add_argument("--fleet-size", type=int, help="vehicles per fleet (default 32)")
    shared.add_argument("--mutation", choices=("replace", "delete"), help="mutation operator (default delete)")
    shared.add_argument("--out", type=Path, default=Path("neutralwalk-out"), help="output directory")

    parser = argparse.ArgumentParser(prog="neutralwalk", description="Neutral network exploration for fleet designs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("explore", parents=[shared], help="single walk per model")
    sub.add_parser("batch", parents=[shared], help="averaged runs per model")
    p = sub.add_parser("sweep-size", parents=[shared], help="fleet-size sweep")
    p.add_argument("--sizes", type=_csv_numbers, help="comma-separated fleet sizes (default 32,36,40,44,48)")
    p = sub.add_parser("sweep-alpha", parents=[shared], help="threshold sweep")
    p.add_argument("--alphas", type=_csv_numbers, help="comma-separated alphas (default 0,2,5,10)")
    sub.add_parser("oracle-check", help="run the bundled self test")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """File values first, then command-line flags on top."""
    base = parse_config(args.config) if args.config else default_config()
    data = {}
    fleet = base.fleet
    for name in fleet.__dataclass_fields__:
        value = getattr(fleet, name)
        if value is not None:
            data[name] = value.value if hasattr(value, "value") else value
    data["model"] = "both" if len(base.models) > 1 else base.models[0].value
    data.update(alpha=base.alpha, max_steps=base.max_steps, runs=base.runs, seed=base.seed,
                fleet_sizes=list(base.fleet_sizes), alphas=list(base.alphas))
    overrides = {
        "model": args.model,
        "seed": args.seed,
        "max_steps": args.steps,
        "runs": args.runs,
        "alpha": args.alpha,
        "fleet_size": args.fleet_size,
        "mutation_mode": args.mutation,
        "fleet_sizes": getattr(args, "sizes", None),
        "alphas": getattr(args, "alphas", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    return config_from_mapping(data)


def _model_dir(out: Path, model: ModelKind, several: bool) -> Path:
    return out / model.value if several else out


def cmd_explore(cfg: ExperimentConfig, out: Path) -> None:
    several = len(cfg.models) > 1
    for model in cfg.models:
        fleet = cfg.fleet.with_(model=model)
        result = explore(fleet, cfg.alpha, cfg.max_steps, cfg.seed)
        topo = topology_metrics(result, 1000, random.Random(cfg.seed))
        write_exploration(result, _model_dir(out, model, several), topo, cfg.max_steps)
        print(f"{model.value}: nn_size={nn_size(result)} evolvability={evolvability(result)} "
              f"steps={result.steps_executed}")


def cmd_batch(cfg: ExperimentConfig, out: Path) -> None:
    table = {}
    several = len(cfg.models) > 1
    for model in cfg.models:
        agg = run_batch(cfg.fleet.with_(model=model), cfg.alpha, cfg.max_steps, cfg.runs, cfg.seed, topology=True)
        table[(model, cfg.alpha)] = agg
        write_aggregate(agg, _model_dir(out, model, several))
        _report(model, f"alpha={cfg.alpha}", agg)
    write_sweep_csv(table, out, "alpha")


def cmd_sweep_size(cfg: ExperimentConfig, out: Path) -> None:
    table = sweep_fleet_size(cfg.fleet, cfg.fleet_sizes, cfg.alpha, cfg.max_steps, cfg.runs, cfg.seed, cfg.models)
    write_sweep(table, out, "fleet_size")
    for (model, v), agg in table.items():
        _report(model, f"fleet_size={v}", agg)


def cmd_sweep_alpha(cfg: ExperimentConfig, out: Path) -> None:
    table = sweep_alpha(cfg.fleet, cfg.alphas, cfg.max_steps, cfg.runs, cfg.seed, cfg.models)
    write_sweep(table, out, "alpha")
    for (model, a), agg in table.items():
        _report(model, f"alpha={a}", agg)


def _report(model, label, agg) -> None:
    nn, ev = agg.nn_size, agg.evolvability
    print(f"{ModelKind(model).value} {label}: nn_size {nn.mean:.1f} +- {nn.std:.1f}, "
          f"evolvability {ev.mean:.1f} +- {ev.std:.1f} over {agg.run_count} runs")


def cmd_oracle_check() -> int:
    def show(r):
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.name}" + (f" ({r.detail})" if r.detail else ""), flush=True)

    results = oracle_check(show)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failing fixtures:", file=sys.stderr)
        for r in failed:
            print(f"  {r.name}", file=sys.stderr)
        return 1
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "oracle-check":
        return cmd_oracle_check()
    try:
        cfg = resolve_config(args)
        handler = {
            "explore": cmd_explore,
            "batch": cmd_batch,
            "sweep-size": cmd_sweep_size,
            "sweep-alpha": cmd_sweep_alpha,
        }[args.command]
        handler(cfg, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
