"""Command-line entry point: configure, run, and sweep experiments.

Subcommands:
    run              one sweep point (density x fog fraction x infrastructure)
    sweep            full experiment sweep from the configuration
    validate-config  parse + validate, echo the effective configuration

Flags override file-config keys; the effective configuration is written next
to the outputs so every result can be reproduced from its own directory.
Exit codes: 0 success, 2 configuration/usage error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, paper_scale
from .engine import run_experiment, sweep_points


def _build_parser() -> argparse.ArgumentParser:
    defaults = ScenarioConfig()
    key_lines = "\n".join(
        f"  {f.name} = {getattr(defaults, f.name)!r}"
        for f in dataclasses.fields(ScenarioConfig)
    )
    parser = argparse.ArgumentParser(
        prog="fogfleet",
        description="Collaborative mmWave fleet simulator: jaywalk sensing "
                    "and fog compute offloading experiments.",
        epilog="config file keys (TOML, with defaults):\n" + key_lines,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (
        ("run", "run one sweep point and write per-round CSVs"),
        ("sweep", "run the full experiment sweep"),
        ("validate-config", "validate and echo the effective configuration"),
    ):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", type=Path, help="TOML configuration file")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--rounds", type=int, help="independent rounds per point")
        p.add_argument("--duration", type=float, help="round duration [s]")
        p.add_argument("--density", type=float, help="vehicles per 100 m of street")
        p.add_argument("--fog-fraction", type=float, help="fraction of vehicles in the fog")
        p.add_argument("--experiment", choices=["jaywalk", "compute"])
        p.add_argument("--no-proactive", action="store_true",
                       help="disable blockage-predictive link reselection")
        p.add_argument("--degree", type=int, help="multi-connectivity degree bound")
        p.add_argument("--infra", choices=["on", "off"],
                       help="base-station participation in compute offloading")
        p.add_argument("--paper-scale", action="store_true",
                       help="full scale: 100 rounds x 10 min")
        p.add_argument("--jaywalk-intensity", type=float,
                       help="jaywalk arrivals per minute")
        p.add_argument("--output", type=Path, default=Path("out"),
                       help="output directory (default: ./out)")
        p.add_argument("--jobs", type=int, help="parallel worker processes")
        p.add_argument("--traces", action="store_true",
                       help="also write per-event / per-job trace CSVs")
    return parser


def _effective_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file not found: {args.config}")
        cfg = ScenarioConfig.from_toml(args.config)
    else:
        cfg = ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.rounds is not None:
        overrides["rounds"] = args.rounds
    if args.duration is not None:
        overrides["round_duration_s"] = args.duration
    if args.experiment is not None:
        overrides["experiment"] = args.experiment
    if args.fog_fraction is not None:
        overrides["fog_fraction"] = args.fog_fraction
    if args.no_proactive:
        overrides["proactive_reselection"] = False
    if args.degree is not None:
        overrides["multiconnectivity_degree"] = args.degree
    if args.infra is not None:
        overrides["infrastructure_compute"] = args.infra == "on"
    if args.jaywalk_intensity is not None:
        overrides["jaywalk_intensity_per_min"] = args.jaywalk_intensity
    if args.jobs is not None:
        overrides["workers"] = args.jobs
    if overrides:
        cfg = cfg.replace(**overrides)
    if args.density is not None:
        cfg = cfg.replace(density_veh_per_100m=args.density,
                          compute_density_veh_per_100m=args.density)
    if args.paper_scale:
        cfg = paper_scale(cfg)
    cfg.validate()
    return cfg


def _print_summary(summary: list[dict]) -> None:
    cols = ["density_veh_per_100m", "fog_fraction", "infrastructure_compute",
            "mean_misses", "mean_verdicts", "mean_jobs_on_time",
            "mean_completion_s", "on_time_rate_pct"]
    header = f"{'density':>8} {'fog':>5} {'infra':>5} {'misses':>9} {'verdicts':>9} " \
             f"{'on-time':>9} {'compl[s]':>10} {'rate[%]':>9}"
    print(header)
    print("-" * len(header))
    for row in summary:
        cells = []
        for c in cols:
            v = row.get(c)
            if v is None or (isinstance(v, float) and v != v):
                cells.append("-")
            elif isinstance(v, float):
                cells.append(f"{v:.4g}")
            else:
                cells.append(str(v))
        print(f"{cells[0]:>8} {cells[1]:>5} {cells[2]:>5} {cells[3]:>9} "
              f"{cells[4]:>9} {cells[5]:>9} {cells[6]:>10} {cells[7]:>9}")


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _effective_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate-config":
        sys.stdout.write(cfg.to_toml())
        return 0

    try:
        if args.command == "run":
            density = (cfg.density_veh_per_100m if cfg.experiment == "jaywalk"
                       else cfg.compute_density_veh_per_100m)
            points = [(density, cfg.fog_fraction, cfg.infrastructure_compute)]
            summary = run_experiment(cfg, args.output, collect_traces=args.traces,
                                     points=points)
        else:
            summary = run_experiment(cfg, args.output, collect_traces=args.traces,
                                     points=sweep_points(cfg))
        _print_summary(summary)
        print(f"outputs written to {args.output}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
