#!/usr/bin/env python3
"""Regenerate the two result figures from simulator summary CSVs.

Reads only the frozen `summary_<experiment>.csv` schema the simulator
writes; the simulator package itself is not a dependency.

    python figures.py --input DIR --kind miss-vs-density --out miss.png
    python figures.py --input DIR --kind compute-gain   --out gain.png

`--input` is a directory holding `summary_jaywalk.csv` /
`summary_compute.csv` (a summary CSV path works too). Exit codes:
0 ok, 2 usage, 3 schema mismatch (with a column diff), 4 empty input.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# Frozen summary schema (the cross-package contract with the simulator).
SUMMARY_COLUMNS = [
    "experiment", "density_veh_per_100m", "fog_fraction", "infrastructure_compute",
    "rounds", "mean_events", "mean_verdicts", "mean_misses", "ci95_misses",
    "mean_detections", "mean_warnings", "mean_blocked_vehicle_ticks",
    "mean_jobs_issued", "mean_jobs_completed", "mean_jobs_on_time", "ci95_jobs_on_time",
    "mean_completion_s", "ci95_completion_s", "mean_dispatch_s", "mean_responders",
    "on_time_rate_pct",
]

KINDS = ("miss-vs-density", "compute-gain")

STYLE = {
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "grid.linestyle": ":",
    "font.size": 10,
    "svg.hashsalt": "fogfleet-figures",
}


class SchemaError(ValueError):
    def __init__(self, missing, unexpected):
        self.missing = sorted(missing)
        self.unexpected = sorted(unexpected)
        super().__init__(
            f"summary schema mismatch: missing={self.missing} unexpected={self.unexpected}")


class EmptyInputError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    input_csv: Path
    kind: str
    output: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")


def load_summary(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = set(SUMMARY_COLUMNS) - set(header)
        unexpected = set(header) - set(SUMMARY_COLUMNS)
        if missing or unexpected:
            raise SchemaError(missing, unexpected)
        rows = []
        for raw in reader:
            row = {}
            for key, value in raw.items():
                if key == "experiment":
                    row[key] = value
                elif value == "" or value is None:
                    row[key] = math.nan
                else:
                    row[key] = float(value)
            rows.append(row)
    if not rows:
        raise EmptyInputError(f"no data rows in {path}")
    return rows


def series(rows, key, x_key, where=()):
    """Sorted (x, value, ci) triples for rows matching the `where` items."""
    picked = [r for r in rows if all(r[k] == v for k, v in where)]
    picked.sort(key=lambda r: r[x_key])
    xs = [r[x_key] for r in picked]
    ys = [r[key] for r in picked]
    ci_key = {"mean_misses": "ci95_misses",
              "mean_completion_s": "ci95_completion_s"}.get(key)
    cis = [0.0 if ci_key is None or math.isnan(r[ci_key]) else r[ci_key] for r in picked]
    return xs, ys, cis


def plot_miss_vs_density(rows, output: Path) -> None:
    fog_fractions = sorted({r["fog_fraction"] for r in rows})
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for fog in fog_fractions:
        xs, ys, cis = series(rows, "mean_misses", "density_veh_per_100m",
                             where=(("fog_fraction", fog),))
        ax.errorbar(xs, ys, yerr=cis, marker="o", capsize=3,
                    label=f"fog {fog:.0%}")
    ax.set_xlabel("vehicle density [veh / 100 m of street]")
    ax.set_ylabel("missed threatened vehicles per round")
    ax.set_title("Jaywalk detection misses vs density")
    ax.legend()
    fig.tight_layout()
    fig.savefig(output)
    plt.close(fig)


def plot_compute_gain(rows, output: Path) -> None:
    fig, (ax_rate, ax_time) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    labels = {0.0: "vehicles only", 1.0: "with infrastructure"}
    for infra in (0.0, 1.0):
        xs, rate, _ = series(rows, "on_time_rate_pct", "fog_fraction",
                             where=(("infrastructure_compute", infra),))
        ax_rate.plot(xs, rate, marker="s", label=labels[infra])
        xs, compl, cis = series(rows, "mean_completion_s", "fog_fraction",
                                where=(("infrastructure_compute", infra),))
        ax_time.errorbar(xs, [c * 1000 for c in compl],
                         yerr=[c * 1000 for c in cis], marker="o", capsize=3,
                         label=labels[infra])
    ax_rate.axhline(100.0, color="gray", lw=0.8, ls="--")
    ax_rate.set_xlabel("fraction of vehicles in the fog")
    ax_rate.set_ylabel("on-time processing rate [% of standalone]")
    ax_rate.set_title("Collaborative processing rate")
    ax_rate.legend()
    ax_time.set_xlabel("fraction of vehicles in the fog")
    ax_time.set_ylabel("mean job completion [ms]")
    ax_time.set_title("1-TFLOP job completion time")
    ax_time.legend()
    fig.tight_layout()
    fig.savefig(output)
    plt.close(fig)


def resolve_input(input_path: Path, kind: str) -> Path:
    if input_path.is_dir():
        name = "summary_jaywalk.csv" if kind == "miss-vs-density" else "summary_compute.csv"
        return input_path / name
    return input_path


def plot(spec: FigureSpec) -> Path:
    """Render one figure; raises before touching the output on bad input."""
    rows = load_summary(spec.input_csv)
    plt.rcParams.update(STYLE)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    if spec.kind == "miss-vs-density":
        plot_miss_vs_density(rows, spec.output)
    else:
        plot_compute_gain(rows, spec.output)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--input", type=Path, required=True,
                        help="summary CSV or a directory containing it")
    parser.add_argument("--kind", choices=KINDS, required=True)
    parser.add_argument("--out", type=Path, required=True)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    csv_path = resolve_input(args.input, args.kind)
    if not csv_path.exists():
        print(f"error: input not found: {csv_path}", file=sys.stderr)
        return 2
    try:
        plot(FigureSpec(csv_path, args.kind, args.out))
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EmptyInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
