"""
Command-line scenario runner.

    somwork run CONFIG.toml [--out DIR]
    somwork preset NAME [--out DIR]
    somwork compare RUN_A RUN_B
    somwork list-presets

Exit codes: 0 success, 1 validation error, 2 tainted trajectory, 3 I/O error.
The default output directory is taken from ``SOMWORK_OUTPUT_DIR``.
"""
from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, CutoffError, TaintedTrajectoryError
from .scenarios import (
    OUTPUT_ENV,
    PRESETS,
    compare_report,
    default_output_dir,
    load_config,
    preset,
    run_scenario,
)

EXIT_OK, EXIT_INVALID, EXIT_TAINTED, EXIT_IO = 0, 1, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="somwork", description="Spin-oscillator work/heat scenario runner.")
    sub = p.add_subparsers(dest="verb", required=True)
    out_help = f"output directory (default: ${OUTPUT_ENV} or ./somwork-out)"
    r = sub.add_parser("run", help="run a scenario from a TOML configuration file")
    r.add_argument("config")
    r.add_argument("--out", help=out_help)
    pr = sub.add_parser("preset", help="run a named preset scenario")
    pr.add_argument("name")
    pr.add_argument("--out", help=out_help)
    c = sub.add_parser("compare", help="compare two runs (manifest files or run directories)")
    c.add_argument("run_a")
    c.add_argument("run_b")
    sub.add_parser("list-presets", help="list the available presets")
    return p


def _summary_line(manifest):
    name = manifest.config["scenario"]["name"]
    bits = [f"{name}: cutoff={manifest.cutoff}"]
    for key in ("R", "t_star", "rwa_max_rel_dev", "oracle_max_abs_diff", "max_balance_residual"):
        v = manifest.summary.get(key)
        if v is not None:
            bits.append(f"{key}={v:.6g}")
    return " ".join(bits)


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.verb == "list-presets":
            for name, parts in PRESETS.items():
                print(f"{name}: " + ", ".join(cfg.name for cfg in parts))
            return EXIT_OK
        if args.verb == "compare":
            sys.stdout.write(compare_report(args.run_a, args.run_b))
            return EXIT_OK
        configs = [load_config(args.config)] if args.verb == "run" else preset(args.name)
        out = args.out or default_output_dir()
        for cfg in configs:
            print(_summary_line(run_scenario(cfg, out)))
        return EXIT_OK
    except TaintedTrajectoryError as exc:
        print(f"error: {exc} (first tainted time {exc.first_tainted_time:g})", file=sys.stderr)
        return EXIT_TAINTED
    except (ConfigError, CutoffError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
