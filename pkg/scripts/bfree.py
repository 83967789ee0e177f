#!/usr/bin/env python3
"""
scripts/bfree.py — bfree-lab
=============================
Command-line front end over core/. Every subcommand builds a RunConfig
(config file merged with flags, flags win), runs it through
core.report_builder.run_subcommand and prints the report.

Usage:
    python scripts/bfree.py sieve --family primes --lo 0 --hi 60
    python scripts/bfree.py density --family prime-squares --horizon 1000000
    python scripts/bfree.py mef --family two-three --depth 6
    python scripts/bfree.py classify --family primes --depth 6 --format json
    python scripts/bfree.py crt --residues 4:1,6:5 --elements 4,6
    python scripts/bfree.py phi --family odd-primes --residues 3:0,5:1,7:0,11:0 --lo 0 --hi 8
    python scripts/bfree.py reproduce sec2.5-block
    python scripts/bfree.py reproduce all
    python scripts/bfree.py families
    python scripts/bfree.py --config run.json filtration --depth 10

Exit codes:
    0  success
    2  configuration error (bad config, unknown family, unresolved coordinate)
    3  budget exceeded (sieve memory, exact density caps, Toeplitz sieve, factorization)
    4  reproduce experiment FAIL

Config file schema: docs/CONFIG.md. BFREE_HORIZON sets the default horizon.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Optional

# Resolve repo root so this script works from any working directory
_SCRIPT_DIR = os.path.dirname(os.path.abspath(__file__))
_REPO_ROOT = os.path.dirname(_SCRIPT_DIR)
sys.path.insert(0, _REPO_ROOT)

from core.arithmetic import FactorizationCapError  # noqa: E402
from core.bset_families import UnknownFamilyError, family_catalog  # noqa: E402
from core.crt_coding import DEFAULT_RULES, UnresolvedCoordinateError  # noqa: E402
from core.density_lab import DensityCapError  # noqa: E402
from core.filtration_engine import MODES  # noqa: E402
from core.interval_sieve import SieveBudgetError  # noqa: E402
from core.report_builder import (  # noqa: E402
    FORMATS,
    SUBCOMMANDS,
    ConfigError,
    RunConfig,
    parse_residues,
    run_subcommand,
)
from core.reproduce_catalog import reproduce_catalog  # noqa: E402
from core.window_classifier import ToeplitzBudgetError  # noqa: E402

logger = logging.getLogger("bfree")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_FAIL = 4

CONFIG_ERRORS = (ConfigError, UnknownFamilyError, UnresolvedCoordinateError)
BUDGET_ERRORS = (SieveBudgetError, DensityCapError, ToeplitzBudgetError, FactorizationCapError)

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _residues(text: str) -> dict[int, int]:
    try:
        return parse_residues(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _json_object(text: str) -> dict[str, Any]:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"--params must be a JSON object: {exc}") from exc
    if not isinstance(value, dict):
        raise argparse.ArgumentTypeError("--params must be a JSON object")
    return value


def _add_common(p: argparse.ArgumentParser) -> None:
    """Flags shared by every run subcommand. Defaults are None so the config file shows through."""
    p.add_argument("--format", dest="output_format", choices=FORMATS, default=argparse.SUPPRESS,
                   help="output format (also accepted before the subcommand)")
    g = p.add_argument_group("set B")
    g.add_argument("--family", help="family name (see `bfree.py families`)")
    g.add_argument("--params", type=_json_object, help='family parameters as JSON, e.g. \'{"count": 8}\'')
    g.add_argument("--elements", type=_int_list, help="explicit finite B, comma-separated")

    g = p.add_argument_group("run")
    g.add_argument("--horizon", type=int, help="horizon N (default: BFREE_HORIZON or 10^7)")
    g.add_argument("--depth", type=int, help="filtration depth")
    g.add_argument("--mode", choices=MODES, help="filtration mode")
    g.add_argument("--lookahead", type=int, help="stages past k used for d_k")
    g.add_argument("--confirm", type=int, help="agreeing trace values needed for a stable d_k")
    g.add_argument("--chain-threshold", type=int, help="coprime chain length counted as proximality evidence")
    g.add_argument("--boundary-threshold", type=float, help="final boundary value for a Toeplitz verdict")
    g.add_argument("--regularity-ratio", type=float, help="Haar scan ratio")
    g.add_argument("--lo", type=int, help="window start")
    g.add_argument("--hi", type=int, help="window end")
    g.add_argument("--cutoffs", type=_int_list, help="density trace cutoffs")
    g.add_argument("--stage", type=int, help="stage k for `window` position labels")
    g.add_argument("--periods", type=int, help="periods sieved for `window` position labels")
    g.add_argument("--residues", type=_residues, help="b:r,b:r for `crt` and `phi`")
    g.add_argument("--default-rule", choices=DEFAULT_RULES, help="unassigned coordinates for `phi`")
    g.add_argument("--n0", type=int, help="shift for the delta default rule")
    g.add_argument("--needle", help="0/1 block searched for by `phi`")
    g.add_argument("--search-radius", type=int, help="η window [-R, R] for dominance searches")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bfree.py",
        description="B-free systems: sieves, densities, filtrations, classification, CRT coding",
    )
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--format", dest="output_format", choices=FORMATS, help="output format (default: table)")
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging")
    parser.add_argument("--log-file", help="also write logs to this file")
    parser.add_argument("--timing", action="store_true", help="include timing in JSON output")

    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        if name == "reproduce":
            continue
        _add_common(sub.add_parser(name, help=f"run `{name}`"))
    rep = sub.add_parser("reproduce", help="run a named experiment (or `all`)")
    rep.add_argument("experiment", help="experiment id, or `all`")
    rep.add_argument("--format", dest="output_format", choices=FORMATS, default=argparse.SUPPRESS)
    sub.add_parser("families", help="list B families and their parameters")
    sub.add_parser("experiments", help="list reproduce experiments")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Flag values as RunConfig keys; None means not given."""
    skip = {"command", "config", "verbose", "log_file", "timing", "family", "params", "elements"}
    out = {k: v for k, v in vars(args).items() if k not in skip}
    if getattr(args, "elements", None) is not None:
        out["bset"] = {"elements": args.elements}
    elif getattr(args, "family", None) is not None:
        out["bset"] = {"family": args.family, "params": args.params or {}}
    elif getattr(args, "params", None) is not None:
        raise ConfigError("--params needs --family")
    return out


def setup_logging(verbose: bool, log_file: Optional[str]) -> None:
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format=LOG_FORMAT, handlers=handlers, force=True)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _print_catalog(command: str) -> None:
    if command == "families":
        for fam in family_catalog():
            kind = "infinite" if fam.infinite else "finite"
            oracle = "exact gcd oracle" if fam.exact_oracle else "horizon-limited"
            print(f"{fam.name:18s} {kind:8s} {oracle:17s} {fam.summary}")
            for pname, desc in fam.params.items():
                print(f"{'':20s}{pname}: {desc}")
        return
    for exp in reproduce_catalog():
        print(f"{exp.id:26s} {exp.claim}")


def _run(name: str, cfg: RunConfig, timing: bool) -> int:
    report = run_subcommand(name, cfg)
    fmt = cfg.output_format
    text = report.to_json(include_timing=timing) + "\n" if fmt == "json" else report.render(fmt)
    sys.stdout.write(text)
    if report.status == "FAIL":
        logger.error("%s: expectation FAIL", cfg.experiment)
        return EXIT_FAIL
    return EXIT_OK


def run_cli(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose, args.log_file)

    if args.command in ("families", "experiments"):
        _print_catalog(args.command)
        return EXIT_OK
    try:
        overrides = overrides_from_args(args)
        if args.command == "reproduce":
            ids = [e.id for e in reproduce_catalog()] if args.experiment == "all" else [args.experiment]
            code = EXIT_OK
            for exp_id in ids:
                cfg = RunConfig.load(args.config, {**overrides, "experiment": exp_id})
                code = max(code, _run("reproduce", cfg, args.timing))
            return code
        cfg = RunConfig.load(args.config, overrides)
        return _run(args.command, cfg, args.timing)
    except CONFIG_ERRORS as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except BUDGET_ERRORS as exc:
        logger.error("budget exceeded: %s", exc)
        return EXIT_BUDGET
    except ValueError as exc:
        logger.error("invalid input: %s", exc)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
