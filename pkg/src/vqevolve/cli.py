"""Command-line runner: ``vqevolve run <config>`` and ``vqevolve sweep <config>``.

Exit codes: 0 success, 1 configuration error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

from .config import ConfigError, load, swept_keys
from .experiments import run_experiment, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2

SOLUTION_HEADER = ["step", "time", "grid_index", "value"]
METRICS_HEADER = ["step", "cost", "n_function_evals", "n_iterations", "trace_error_vs_oracle"]


def _fmt(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return value


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def summary_line(experiment: str, summary: dict) -> str:
    parts = [f"experiment={experiment}"]
    for key, value in summary.items():
        parts.append(f"{key}={value:.6g}" if isinstance(value, float) else f"{key}={value}")
    return "summary " + " ".join(parts)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqevolve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (("run", "run one experiment"), ("sweep", "run a parameter sweep")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config", help="flat YAML config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--output-dir", help="override the config output directory")
        p.add_argument("--oracle-only", action="store_true", help="run the dense classical twin only")
        p.add_argument("--verify", action="store_true", help="compare against the dense twin (trace-error column)")
        p.add_argument("--figures", action="store_true", help="also render PNG figures next to the CSVs")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _overrides(args) -> dict:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.output_dir is not None:
        changes["output"] = args.output_dir
    if args.oracle_only:
        changes["mode"] = "oracle"
    if args.verify:
        changes["verify"] = True
    if args.figures:
        changes["figures"] = True
    return changes


def cmd_run(args) -> int:
    cfg = load(args.config, allow_lists=True)
    if swept_keys(cfg):
        raise ConfigError("config has list values; use the sweep command")
    cfg = cfg.replace(**_overrides(args))
    out_dir = Path(cfg["output"])
    out_dir.mkdir(parents=True, exist_ok=True)
    outcome = run_experiment(cfg)
    extra = ["component"] if outcome.components else []
    write_csv(out_dir / "solutions.csv", SOLUTION_HEADER + extra, outcome.solutions)
    write_csv(out_dir / "metrics.csv", METRICS_HEADER + extra, outcome.metrics)
    line = summary_line(cfg.experiment, outcome.summary)
    (out_dir / "summary.txt").write_text(line + "\n", encoding="utf-8")
    if outcome.summary.get("flagged_steps"):
        print(f"warning: {outcome.summary['flagged_steps']} solve(s) did not converge", file=sys.stderr)
    if cfg["figures"]:
        from . import plots

        plots.render(outcome, out_dir)
    print(line)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load(args.config, allow_lists=True)
    changes = _overrides(args)
    values = dict(cfg.values)
    values.update(changes)
    from .config import validate

    cfg = validate(values, allow_lists=True)
    out_dir = Path(cfg["output"] if not isinstance(cfg["output"], list) else cfg["output"][0])
    out_dir.mkdir(parents=True, exist_ok=True)
    run_rows, stats, fit = run_sweep(cfg)
    for name, rows in (("sweep_runs.csv", run_rows), ("sweep_stats.csv", stats)):
        header = list(rows[0].keys())
        write_csv(out_dir / name, header, [[r[h] for h in header] for r in rows])
    line = "fit " + " ".join(
        f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={str(v).lower()}" for k, v in fit.items()
    )
    (out_dir / "sweep_fit.txt").write_text(line + "\n", encoding="utf-8")
    figures = cfg["figures"] if not isinstance(cfg["figures"], list) else any(cfg["figures"])
    if figures:
        from . import plots

        plots.sweep_figure(stats, fit["nl_slope"], out_dir / "sweep.png")
    for entry in stats:
        print(summary_line(cfg.experiment, {k: v for k, v in entry.items() if k != "point"}))
    print(line)
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return cmd_run(args)
        return cmd_sweep(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the exit code is the contract
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
