"""Command-line entry point.

Exit codes: 0 on success, 2 on configuration errors, 3 on runtime or
numerical errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import runner
from .config import ConfigError, ExperimentConfig, load_config

_COMMANDS = {
    "converge": runner.run_convergence,
    "sweep": runner.run_sparsity_sweep,
    "timevary": runner.run_time_varying,
    "dump-codebook": runner.run_dump_codebook,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None, help="JSON config file (defaults apply if omitted)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed (u64)")
    parser.add_argument("--out", type=str, default="out", help="output directory")
    parser.add_argument("--scheme", type=str, default=None,
                        help="override the configured scheme (FPA, PA_ONLY, PS_ONLY, HMET)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep points (other commands run single-threaded)")
    parser.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    parser.add_argument("--dump-users", action="store_true",
                        help="persist the generated user samples (converge only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="railbeam",
        description="Simulate and optimize base-station antenna arrays that ride "
                    "a circular rail and switch among discrete radiation patterns.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("converge", help="optimize one scheme and write the objective trace")
    sub.add_parser("sweep", help="optimize every configured scheme over the sparsity sweep")
    sub.add_parser("timevary", help="run the time-varying scenario snapshot by snapshot")
    sub.add_parser("dump-codebook", help="write the calibrated mode table")
    for name in _COMMANDS:
        _add_common(sub.choices[name])
    return parser


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config is not None else ExperimentConfig()
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        cfg = replace(cfg, seed=args.seed)
    if args.scheme is not None:
        from .baselines import SCHEME_KINDS

        if args.scheme not in SCHEME_KINDS:
            raise ConfigError(f"--scheme must be one of {SCHEME_KINDS}, got {args.scheme!r}")
        cfg = replace(cfg, scheme_kind=args.scheme)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    run = _COMMANDS[args.command]
    kwargs = {"plot": not args.no_plot, "threads": max(1, args.threads)}
    if args.command == "converge":
        kwargs["dump_users"] = args.dump_users
    try:
        result = run(cfg, args.out, **kwargs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime / numerical failure
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if args.command == "converge":
        print(f"final average sum rate: {result['final_objective_bps_hz']:.6f} bits/s/Hz")
        print(f"trace written to {result['trace_path']}")
    elif args.command == "sweep":
        for scheme, eta, final, _ in result["rows"]:
            print(f"{scheme:>12s}  eta={eta:<5g}  {final:.6f} bits/s/Hz")
        print(f"summary written to {result['sweep_path']}")
    elif args.command == "timevary":
        for scheme, mean in result["mean_rates"].items():
            print(f"{scheme:>12s}  mean rate {mean:.6f} bits/s/Hz")
        print(f"per-snapshot rates written to {result['rates_path']}")
    else:
        print(f"{result['mode_count']} modes written to {result['table_path']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
