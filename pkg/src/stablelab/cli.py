"""Command-line front end: ``stablelab <experiment> --config cfg.json [--seed N]``.

Exit codes: 0 when every criterion passes, 2 when a statistical criterion
fails, 1 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

from .limit_lab import ConfigError, ExperimentConfig, run_experiment

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

SUBCOMMANDS = {
    "marginal": "normalized ergodic sums against the stable limit",
    "fdd": "finite-dimensional marginals, increments and their independence",
    "tightness": "exceedance tables of the three tightness moduli",
    "maxineq": "empirical check of the maximal inequalities",
    "weighted_tail": "tail ratios of the geometrically weighted sums",
    "arcsine": "occupation-time fractions of the Z-extension against the arcsine law",
    "excursions": "Hill exponents and side ratios of intermittent excursion times",
    "independence": "independence of the two excursion processes",
    "j1probe": "J1-continuous functionals against stable Levy motion",
    "selftest": "pathwise-exact invariant suite",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; 2 is reserved for failed criteria here."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="stablelab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    for name, help_ in SUBCOMMANDS.items():
        s = sub.add_parser(name, help=help_, description=help_)
        if name != "selftest":
            s.add_argument("--config", help="experiment config (JSON)")
            s.add_argument("--workers", type=int, default=1,
                           help="worker threads; affects wall-clock only, never results")
        else:
            s.add_argument("--quick", action="store_true", help="smaller sample sizes")
        s.add_argument("--seed", type=int, help="master seed (falls back to $LAB_SEED, then the config)")
        s.add_argument("--out", default="reports", help="report directory (default: reports)")
        s.add_argument("-v", "--verbose", action="count", default=0, help="more logging (repeatable)")
    return p


def _seed(args, default: int | None) -> int | None:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("LAB_SEED")
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"LAB_SEED must be an integer, got {env!r}") from None
    return default


def _run_selftest(args) -> int:
    from .selftest import run_selftest

    seed = _seed(args, 0)
    print(json.dumps({"command": "selftest", "seed": seed, "quick": args.quick}, sort_keys=True))
    crits, timings = run_selftest(seed, quick=args.quick)
    for c in crits:
        print(c.line())
    logging.getLogger(__name__).info("selftest timings: %s", timings)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, f"selftest-{seed}.json"), "w") as fh:
        json.dump({"seed": seed, "criteria": [asdict(c) for c in crits]}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if all(c.passed for c in crits) else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            return _run_selftest(args)
        if not args.config:
            raise ConfigError("--config is required")
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw.setdefault("experiment", args.command)
        if raw["experiment"] != args.command:
            raise ConfigError(f"config is for {raw['experiment']!r}, not {args.command!r}")
        seed = _seed(args, raw.get("seed"))
        if seed is not None:
            raw["seed"] = seed
        cfg = ExperimentConfig.from_dict(raw)
        cfg.out_dir = args.out
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"usage: stablelab {args.command} --config CONFIG [--seed SEED] [--out OUT] "
              "[--workers N] [-v]", file=sys.stderr)
        print(f"stablelab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    try:
        report = run_experiment(cfg, workers=args.workers)
    except ConfigError as exc:
        print(f"stablelab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    paths = report.write(cfg.out_dir)
    for line in report.lines():
        print(line)
    logging.getLogger(__name__).info("wrote %s (%.1fs)", ", ".join(paths.values()), report.wall_clock)
    return EXIT_OK if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
