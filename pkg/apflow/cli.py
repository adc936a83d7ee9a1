"""
Command line front end.

    python main.py run configs/spp.cfg
    python main.py converge configs/spp.cfg --n 250,500 --ref 1000
    python main.py validate
"""

import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence

from .config import load_config
from .errors import ApflowError, ConfigError
from .harness import cmd_converge, cmd_run
from .settings import EXIT_CODES, configure_logging
from .validation import cmd_validate

logger = logging.getLogger(__name__)


def _int_list(text: str) -> List[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("expected at least one resolution")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apflow",
        description="Asymptotic-preserving IMEX finite volume solver for low Mach barotropic flow",
    )
    parser.add_argument("--log-level", default=None, help="logging level (default: APFLOW_LOG_LEVEL or INFO)")
    commands = parser.add_subparsers(dest="command", required=True)

    run_parser = commands.add_parser("run", help="run one configuration")
    run_parser.add_argument("config", help="path to a key = value config file")
    run_parser.add_argument("--output", default=None, help="output directory")

    converge_parser = commands.add_parser("converge", help="convergence study against a fine reference")
    converge_parser.add_argument("config", help="path to a key = value config file")
    converge_parser.add_argument("--n", type=_int_list, required=True, help="coarse resolutions, e.g. 20,50,100")
    converge_parser.add_argument("--ref", type=int, required=True, help="reference resolution")
    converge_parser.add_argument("--workers", type=int, default=None, help="parallel runs (default: APFLOW_WORKERS)")
    converge_parser.add_argument("--output", default=None, help="output directory")

    commands.add_parser("validate", help="run the self-check suite")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        if args.command == "run":
            cmd_run(load_config(args.config), Path(args.output) if args.output else None)
        elif args.command == "converge":
            cmd_converge(
                load_config(args.config),
                args.n,
                args.ref,
                workers=args.workers,
                output_dir=Path(args.output) if args.output else None,
            )
        else:
            return EXIT_CODES["success"] if cmd_validate() else EXIT_CODES["runtime_failure"]
    except ConfigError as exc:
        logger.error(f"❌ {exc}")
        return EXIT_CODES["config_error"]
    except ApflowError as exc:
        logger.error(f"❌ {exc}")
        return EXIT_CODES["runtime_failure"]
    return EXIT_CODES["success"]
