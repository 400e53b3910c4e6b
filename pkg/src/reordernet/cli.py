"""Command-line experiment runner.

    reordernet run <config.json> [--seed N] [--out DIR] [--override k=v ...]
    reordernet run --preset NAME [--out DIR] [--workers N]
    reordernet compare <dirA> <dirB> ... --metric fct_mean --baseline <dirA>
    reordernet presets
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import apply_overrides
from .presets import PRESETS, preset_cells
from .runner import IncompatibleRuns, compare, comparison_csv, comparison_text, run_experiment
from .simulator import ConfigError, InvariantViolation


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="reordernet")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p_run = sub.add_parser("run", help="run an experiment config or preset")
    p_run.add_argument("config", nargs="?", help="path to a JSON config or manifest")
    p_run.add_argument("--preset", help="named preset instead of a config file")
    p_run.add_argument("--seed", type=int, help="run only this seed")
    p_run.add_argument("--out", default="runs", help="output directory")
    p_run.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE", help="config override (dotted path)")
    p_run.add_argument("--workers", type=int, default=1,
                       help="parallel seed workers")

    p_cmp = sub.add_parser("compare", help="compare runs on one metric")
    p_cmp.add_argument("dirs", nargs="+", help="run directories")
    p_cmp.add_argument("--metric", required=True)
    p_cmp.add_argument("--baseline", required=True)
    p_cmp.add_argument("--out", help="also write the comparison CSV here")

    sub.add_parser("presets", help="list available presets")

    args = parser.parse_args(argv)
    try:
        if args.cmd == "run":
            return _cmd_run(args)
        if args.cmd == "compare":
            return _cmd_compare(args)
        if args.cmd == "presets":
            for name, (desc, _) in sorted(PRESETS.items()):
                print(f"{name:24s} {desc}")
            return 0
    except (ConfigError, InvariantViolation, IncompatibleRuns, KeyError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_run(args) -> int:
    import os

    if args.preset:
        cells = preset_cells(args.preset)
    elif args.config:
        with open(args.config) as fh:
            cells = [(None, json.load(fh))]
    else:
        print("error: provide a config file or --preset", file=sys.stderr)
        return 1
    seeds = [args.seed] if args.seed is not None else None
    for cell_name, cfg in cells:
        cfg = apply_overrides(cfg, args.override)
        out_dir = os.path.join(args.out, cell_name) if cell_name else args.out
        manifest = run_experiment(cfg, out_dir, seeds=seeds, workers=args.workers)
        ran = ", ".join(manifest["summaries"])
        label = cell_name or args.config
        print(f"{label}: seeds [{ran}] -> {out_dir}")
    return 0


def _cmd_compare(args) -> int:
    result = compare(args.dirs, args.metric, args.baseline)
    text = comparison_text(result)
    print(text, end="")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(comparison_csv(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
