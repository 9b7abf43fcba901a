"""
Hermitian Dirichlet Lab CLI
===========================

Batch driver for the laboratory. Every subcommand reads one run config,
writes its CSV/JSON artifacts under an output directory and finishes with a
``manifest.json`` recording the config hash, seed, tolerance set, library
versions and wall time.

Exit codes:
    0  success
    2  the config could not be parsed or validated
    3  a solver or verification step failed (artifacts and manifest still written)
"""

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import List, Optional

import numpy as np
import pydantic
import scipy

try:
    from colorama import Fore, Style, just_fix_windows_console
    just_fix_windows_console()
except (ImportError, AttributeError):
    from colorama import Fore, Style, init
    init()

from dotenv import load_dotenv

from src import __version__
from src.commands import CommandRegistry, RunContext, create_lab_commands, tolerance_set
from src.errors import ConfigError, LabError
from src.reports import RunManifest, write_model_json
from src.run_config import RunConfig

logger = logging.getLogger("hermitian_lab")

OUTPUT_DIR_ENV = "HERMITIAN_LAB_OUTPUT_DIR"
MANIFEST_NAME = "manifest.json"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILURE = 3

COLORS = {
    "success": Fore.GREEN,
    "warning": Fore.YELLOW,
    "error": Fore.RED,
    "dim": Style.DIM,
    "reset": Style.RESET_ALL,
}


def status(kind: str, message: str) -> None:
    print(f"{COLORS[kind]}{message}{COLORS['reset']}")


def versions() -> dict:
    return {
        "hermitian-dirichlet-lab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def resolve_output_dir(flag: Optional[str], subcommand: str) -> Path:
    """--output-dir, then $HERMITIAN_LAB_OUTPUT_DIR, then ./runs/<subcommand>."""
    if flag:
        return Path(flag)
    env = os.getenv(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path("runs") / subcommand


def build_parser(registry: CommandRegistry) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hermitian-dirichlet-lab",
        description="Numerical laboratory for fully nonlinear elliptic Dirichlet problems on Hermitian products",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=f"""
Subcommands:
{registry.help_text()}

Examples:
  hermitian-dirichlet-lab verify-arrow configs/arrow.cfg
  hermitian-dirichlet-lab solve configs/manufactured.cfg --output-dir runs/ma
  hermitian-dirichlet-lab compare configs/manufactured.cfg a/solution.csv b/solution.csv
        """,
    )
    parser.add_argument("subcommand", choices=registry.list_command_names(), help="What to run")
    parser.add_argument("config", help="Path to the run config")
    parser.add_argument("files", nargs="*", help="Solution files (compare only)")
    parser.add_argument("--seed", type=int, default=None, help="Override [run] seed")
    parser.add_argument("--output-dir", default=None,
                        help=f"Output directory (default: ${OUTPUT_DIR_ENV} or runs/<subcommand>)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    load_dotenv()
    registry = create_lab_commands()
    args = build_parser(registry).parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(levelname)s - %(message)s",
    )

    try:
        config = RunConfig.load(args.config)
    except ConfigError as e:
        status("error", f"❌ Config error in {args.config}: {e}")
        return EXIT_CONFIG
    if args.seed is not None:
        config = config.with_seed(args.seed)

    output_dir = resolve_output_dir(args.output_dir, args.subcommand)
    output_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        subcommand=args.subcommand,
        config_hash=config.config_hash(),
        seed=config.run.seed,
        versions=versions(),
        tolerances=tolerance_set(config),
    )
    config.save(output_dir / "config.cfg")

    context = RunContext(config=config, output_dir=output_dir, seed=config.run.seed, files=list(args.files))
    start = time.perf_counter()
    try:
        registry.execute(args.subcommand, context)
    except LabError as e:
        manifest.exit_code = EXIT_FAILURE
        manifest.error = f"{type(e).__name__}: {e}"
        logger.error(f"COMMAND_FAILED: {args.subcommand}: {manifest.error}")
        status("error", f"❌ {args.subcommand} failed: {e}")
    else:
        status("success", f"✅ {args.subcommand} finished")
    finally:
        manifest.wall_ms = 1000.0 * (time.perf_counter() - start)
        manifest.outputs = sorted(p.name for p in output_dir.iterdir() if p.is_file() and p.name != MANIFEST_NAME)
        write_model_json(output_dir / MANIFEST_NAME, manifest)

    status("dim", f"   artifacts in {output_dir}")
    return manifest.exit_code


if __name__ == "__main__":
    sys.exit(main())
