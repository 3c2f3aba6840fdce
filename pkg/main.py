"""
main.py

Command-line entry point of the EOM synthetic aperture lidar simulator. Runs experiments
from a configuration file or a named preset, prints the discrepancy ledger and the
sampling-rate reduction report.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from app.config import (
    available_presets,
    load_app_settings,
    load_config,
    load_preset,
    override_config,
    scale_config,
)
from app.errors import ConfigError, SimulationError
from app.modules.dechirp_imager import data_reduction_report
from app.simulator import run_experiment
from evaluator import DiscrepancyLedger

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_STAGE = 2


def build_parser() -> argparse.ArgumentParser:
    settings = load_app_settings()
    defaults = settings.get("defaults", {})

    parser = argparse.ArgumentParser(description="EOM chirp synthetic aperture lidar simulator")
    parser.add_argument("--log-level", type=str, default=defaults.get("log_level", "INFO"),
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Run one experiment and write its artifacts")
    source = simulate.add_mutually_exclusive_group(required=True)
    source.add_argument("--config", type=str, help="Path to an experiment YAML file")
    source.add_argument("--preset", type=str, help=f"Named preset ({', '.join(available_presets())})")
    simulate.add_argument("--scale", type=int, default=1, help="Divide the frequency plan by N for fast runs")
    simulate.add_argument("--seed", type=int, help="Override the base seed")
    simulate.add_argument("--out", type=str, help="Output root directory")

    ledger = sub.add_parser("ledger", help="Print the discrepancy ledger")
    ledger.add_argument("--preset", type=str, default=defaults.get("preset", "table1"),
                        help="Reference preset for the computed values")
    ledger.add_argument("--csv", type=str, help="Also write the ledger table to this CSV file")

    reduction = sub.add_parser("report-reduction", help="Print the sampling-rate reduction for a swath")
    reduction.add_argument("--scene-extent", type=float, required=True, help="Swath depth a (m)")
    reduction.add_argument("--preset", type=str, default=defaults.get("preset", "table1"),
                           help="Preset providing the chirp parameters")
    return parser


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config) if args.config else load_preset(args.preset)
    if args.seed is not None:
        cfg = override_config(cfg, {"seed": args.seed})
    cfg = scale_config(cfg, args.scale)
    manifest = run_experiment(cfg, output_root=Path(args.out) if args.out else None)
    print(f"run directory: {manifest.run_dir}")
    print(f"config hash:   {manifest.config_hash}")
    print(f"artifacts:     {len(manifest.artifacts)}")
    return EXIT_OK


def cmd_ledger(args: argparse.Namespace) -> int:
    ledger = DiscrepancyLedger(load_preset(args.preset))
    print(ledger.render())
    if args.csv:
        ledger.to_frame().to_csv(args.csv, index=False)
        logger.info(f"Ledger table written to {args.csv}")
    return EXIT_OK


def cmd_report_reduction(args: argparse.Namespace) -> int:
    cfg = load_preset(args.preset)
    if args.scene_extent <= 0:
        raise ConfigError(f"--scene-extent must be positive, got {args.scene_extent}")
    report = data_reduction_report(args.scene_extent, cfg.dechirp_config(), cfg.drive_params())
    print(report.to_text(), end="")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "ledger": cmd_ledger,
    "report-reduction": cmd_report_reduction,
}


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point.

    Returns:
        0 on success, 1 for a configuration error, 2 when a stage fails
    """
    load_dotenv()

    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        force=True,
    )

    try:
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG
    except SimulationError as e:
        logger.error(f"Simulation failed: {e}")
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
