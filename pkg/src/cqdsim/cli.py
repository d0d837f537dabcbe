"""Command-line interface.

Exit codes: 0 success, 1 verification or assertion failure, 2 configuration
error.
"""
from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .experiment import SCAN_PARAMETERS, scan, scan_csv_text, simulate
from .segment import EXACT_SEQUENTIAL, TRUNCATED
from .verification import run_checks

_MODE_ALIASES = {"exact": EXACT_SEQUENTIAL, "truncated": TRUNCATED}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqdsim",
        description=(
            "Convert continuous-time query algorithms into discrete-query "
            "simulations and verify every bound numerically."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the invariant suites")
    p_verify.add_argument("--level", choices=("fast", "full"), default="fast")

    p_sim = sub.add_parser("simulate", help="run recovery trajectories from a config")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--trials", type=int, default=None)
    p_sim.add_argument("--mode", choices=tuple(_MODE_ALIASES), default=None)
    p_sim.add_argument("--out", default=None, help="directory for report.json and trials.csv")

    p_scan = sub.add_parser("scan", help="sweep one parameter and tabulate costs")
    p_scan.add_argument("--config", required=True)
    p_scan.add_argument("--param", required=True, choices=SCAN_PARAMETERS)
    p_scan.add_argument("--values", required=True, help="comma-separated list")
    p_scan.add_argument("--out", default=None, help="directory for scan.csv")
    return parser


def _cmd_verify(args) -> int:
    results = run_checks(level=args.level)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        note = f"  [{res.note}]" if res.note else ""
        print(f"{status}  {res.name}: measured={res.measured:.3e} bound={res.bound:.3e}{note}")
        failed += 0 if res.passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def _cmd_simulate(args) -> int:
    config = load_config(args.config)
    config = config.with_overrides(
        seed=args.seed,
        trials=args.trials,
        mode=_MODE_ALIASES[args.mode] if args.mode else None,
    )
    report = simulate(config, out_dir=args.out)
    agg = report.aggregate()
    print(
        f"mode={report.mode} trials={agg['trials']} successes={agg['successes']} "
        f"mean_fidelity={agg['mean_fidelity']:.6f} "
        f"mean_full_queries={agg['mean_full_queries']:.2f} "
        f"(r={report.params.r:.4g}, p={report.params.p}, theta={report.params.theta:.4g}, "
        f"m={report.params.m}, k={report.params.k}, segments={report.params.segments})"
    )
    if args.out:
        print(f"wrote {args.out}/report.json and {args.out}/trials.csv")
    return 0


def _cmd_scan(args) -> int:
    config = load_config(args.config)
    try:
        values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError as e:
        raise ConfigError(f"bad --values list: {e}") from e
    rows = scan(config, args.param, values, out_dir=args.out)
    print(scan_csv_text(rows), end="")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "scan":
            return _cmd_scan(args)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
