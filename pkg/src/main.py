"""
KdV Lab — Command-Line Entry Point.

    python -m src.main run experiments/airy-conservation.yml
    python -m src.main sweep experiments/ --threads 4
    python -m src.main list-presets

Exit status: 0 success, 2 invalid input, 3 numerical abort, 4 failed verdict.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Optional

from src import __version__
from src.coefficients.presets import list_presets, preset_registry
from src.config import settings
from src.errors import KdvLabError
from src.runner.config import load_experiment
from src.runner.experiments import run_experiment
from src.runner.reports import write_error, write_outputs

logger = logging.getLogger("kdvlab")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ABORT = 3
EXIT_VERDICT = 4


def configure_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or settings.log_level).upper()),
        format="%(asctime)s | %(levelname)-8s | %(name)s | %(message)s",
        force=True,
    )


def run_config(
    config_path: str | Path,
    output: Optional[str | Path] = None,
    directory: Optional[Path] = None,
) -> int:
    """Run one experiment file and write its artifacts; returns the exit status."""
    config_path = Path(config_path)
    base = Path(output or settings.output_dir)
    try:
        config = load_experiment(config_path)
    except KdvLabError as exc:
        logger.error("❌ %s", exc)
        write_error(config_path, exc.to_dict(), directory or base / config_path.stem, exc.exit_code)
        return exc.exit_code

    if directory is None:
        if config.output.directory and output is None:
            directory = Path(config.output.directory)
        else:
            directory = base / config.name
    try:
        outcome = run_experiment(config)
    except KdvLabError as exc:
        logger.error("❌ %s failed: %s", config.name, exc)
        write_error(config_path, exc.to_dict(), directory, exc.exit_code)
        return exc.exit_code

    status = outcome.exit_code
    write_outputs(config, outcome, directory, status)
    if status == EXIT_OK:
        logger.info("✅ %s finished", config.name)
    elif status == EXIT_ABORT:
        logger.warning("⚠️  %s aborted numerically", config.name)
    else:
        for failure in outcome.failures:
            logger.warning("⚠️  %s: %s", config.name, failure)
    return status


async def run_sweep(
    directory: str | Path,
    output: Optional[str | Path] = None,
    threads: Optional[int] = None,
) -> int:
    """Run every experiment file of a directory concurrently; returns the worst status."""
    directory = Path(directory)
    paths = sorted(directory.glob("*.yml")) + sorted(directory.glob("*.yaml"))
    if not paths:
        logger.error("No experiment files in %s", directory)
        return EXIT_INVALID
    base = Path(output or settings.output_dir)
    sem = asyncio.Semaphore(threads or settings.threads)

    async def run_one(path: Path) -> int:
        async with sem:
            return await asyncio.to_thread(run_config, path, base, base / path.stem)

    statuses = await asyncio.gather(*(run_one(p) for p in paths))
    for path, status in zip(paths, statuses):
        logger.info("%-40s exit %d", path.name, status)
    return max(statuses)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdvlab", description=f"{settings.app_name} {__version__}")
    parser.add_argument("--output", default=None, help="Output directory (default: settings.output_dir)")
    parser.add_argument("--threads", type=int, default=None, help="Concurrent experiments in a sweep")
    parser.add_argument("--log-level", default=None, choices=["debug", "info", "warning", "error", "critical"])
    parser.add_argument("--presets-dir", default=None, help="Extra YAML presets directory")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="Run one experiment file")
    run.add_argument("config")
    sweep = sub.add_parser("sweep", help="Run every experiment file in a directory")
    sweep.add_argument("directory", nargs="?", default=None,
                       help="Experiment directory (default: settings.experiments_dir)")
    sub.add_parser("list-presets", help="List coefficient presets")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    if args.threads is not None and args.threads < 1:
        logger.error("--threads must be at least 1")
        return EXIT_INVALID
    preset_registry.load_from_directory(args.presets_dir)

    if args.command == "list-presets":
        print(list_presets())
        return EXIT_OK
    if args.command == "run":
        return run_config(args.config, args.output)
    return asyncio.run(run_sweep(args.directory or settings.experiments_dir, args.output, args.threads))


if __name__ == "__main__":
    sys.exit(main())
