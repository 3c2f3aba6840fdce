"""
run_evaluation.py

Acceptance pipeline for the simulator. Runs every check listed in config/eval_config.yaml,
records measured values against their limits, and writes a JSON result file plus a
summary CSV into a timestamped run directory.
"""

import argparse
import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import yaml
from dotenv import load_dotenv

from app.config import load_preset, scale_config
from app.modules.dechirp_imager import (
    DechirpConfig,
    SalImage,
    assemble_beat,
    data_reduction_report,
    measure_resolution,
    range_compress,
    rvp_correct,
    separation_dip,
)
from app.modules.eom_chain import (
    awg_drive_phase,
    chirp_linearity,
    compare_sideband_powers,
    cyclic_drive,
    filter_feasibility,
    phase_modulate,
)
from app.modules.jones_bench import BenchParams, JonesField, Receiver, balanced_detect, propagate
from app.modules.laser_model import PhaseTrack
from app.modules.scene_echo import PointTarget, SceneGeometry, synthesize_echo, synthesize_reference
from app.modules.signal_core import ComplexEnvelope, TimeGrid, make_grid
from app.simulator import SalSimulator
from utils.helpers import dumps_json, timestamped_dir

# Set up logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

CheckResult = Tuple[bool, Dict[str, Any]]


def load_config(config_path: str) -> dict:
    """
    Load the acceptance configuration from a YAML file.

    Parameters
    ----------
    config_path : str
        Path to the YAML configuration file

    Returns
    -------
    dict
        Evaluation settings and the list of checks
    """
    with open(config_path, 'r') as f:
        return yaml.safe_load(f)


def check_sideband_oracle(params: Dict[str, Any], scale: int) -> CheckResult:
    """
    FFT band powers of a phase-modulated chirp against the Bessel series.

    Each modulation index runs on a grid holding an integer number of offset cycles. The
    analytic series is synthesized on the same grid and measured through the same cells,
    and the worst relative cell error must stay below the tolerance.

    Parameters
    ----------
    params : dict
        modulation_indices, num_samples, max_order, tolerance
    scale : int
        Unused; the oracle runs at its own frequency plan

    Returns
    -------
    tuple
        (passed, details) with the worst relative error and the leakage gap to J_n(m)^2
    """
    n = int(params["num_samples"])
    max_order = int(params["max_order"])
    details: Dict[str, Any] = {}
    worst = 0.0

    started = time.perf_counter()
    for m in params["modulation_indices"]:
        p, grid = cyclic_drive(float(m), n)
        drive = awg_drive_phase(p, grid)
        env = phase_modulate(drive, PhaseTrack(grid, np.zeros(n)), float(m))
        frame = compare_sideband_powers(env, drive, p, max_order)
        details[f"m={m}.max_relative_error"] = float(frame["relative_error"].max())
        details[f"m={m}.max_bessel_gap"] = float(frame["bessel_gap"].max())
        worst = max(worst, float(frame["relative_error"].max()))
    details["runtime_s"] = time.perf_counter() - started
    details["max_relative_error"] = worst
    return worst < float(params["tolerance"]), details


def check_chirp_linearity(params: Dict[str, Any], scale: int) -> CheckResult:
    """
    Instantaneous-frequency linearity of the filtered order.

    Parameters
    ----------
    params : dict
        preset, central_fraction, max_relative_rms
    scale : int
        Frequency-plan scale factor

    Returns
    -------
    tuple
        (passed, details)
    """
    cfg = scale_config(load_preset(params["preset"]), scale)
    simulator = SalSimulator(cfg)
    result = chirp_linearity(simulator.transmit(0), simulator.drive, float(params["central_fraction"]))
    return result.relative_rms < float(params["max_relative_rms"]), result.as_dict()


def check_filter_feasibility(params: Dict[str, Any], scale: int) -> CheckResult:
    """Filter spacing within rel_tol of the hand value and the modulator verdicts."""
    drive = load_preset("table1").drive_params()
    modulator = float(params["modulator_bandwidth_hz"])
    report = filter_feasibility(0.2e-9, 1550e-9, 1550e-9, drive, modulator)
    narrow = filter_feasibility(0.2e-9, 1550e-9, 1550e-9, drive, modulator / 2)
    expected = float(params["expected_spacing_hz"])
    rel_error = abs(report.delta_f0 - expected) / expected
    passed = rel_error < float(params["rel_tol"]) and report.feasible and not narrow.feasible
    return passed, {
        "delta_f0_hz": report.delta_f0,
        "relative_error": rel_error,
        "feasible": report.feasible,
        "feasible_at_half_bandwidth": narrow.feasible,
    }


def check_receiver_quadrature(params: Dict[str, Any], scale: int) -> CheckResult:
    """
    I/Q phase offset, image rejection of I + jQ and four-path energy conservation.

    Parameters
    ----------
    params : dict
        num_samples, beat_cycles, max_phase_error_rad, min_image_rejection_db, energy_tolerance
    scale : int
        Unused

    Returns
    -------
    tuple
        (passed, details)
    """
    n = int(params["num_samples"])
    k = int(params["beat_cycles"])
    grid = TimeGrid(sample_rate=1.0, num_samples=n)
    s = np.full(n, 0.8 * np.exp(0.3j))
    w = np.exp(2j * np.pi * k * np.arange(n) / n)
    signal_field = JonesField.linear45(s, grid)
    reference = JonesField.horizontal_only(w, grid)

    paths = propagate(signal_field, reference, BenchParams())
    iq = balanced_detect(*paths)
    i_bin = np.fft.fft(iq.i_samples)[k]
    q_bin = np.fft.fft(iq.q_samples)[k]
    offset = float(np.angle(i_bin / q_bin))
    phase_error = abs(offset - np.pi / 2)

    beat = np.fft.fft(iq.i_samples + 1j * iq.q_samples)
    image = max(abs(beat[-k]), 1e-300)
    rejection_db = float(20 * np.log10(abs(beat[k]) / image))

    energy_in = signal_field.energy + reference.energy
    energy_out = sum(path.energy for path in paths)
    energy_error = abs(energy_out - energy_in) / energy_in

    passed = (phase_error < float(params["max_phase_error_rad"])
              and rejection_db > float(params["min_image_rejection_db"])
              and energy_error < float(params["energy_tolerance"]))
    return passed, {
        "phase_offset_rad": offset,
        "image_rejection_db": rejection_db,
        "energy_error": energy_error,
    }


def check_beat_frequency(params: Dict[str, Any], scale: int) -> CheckResult:
    """
    Beat frequency of a target displaced from the reference range.

    A baseband chirp of rate gamma is echoed by a stationary scene through the full
    receiver and dechirp chain.
    """
    gamma = float(params["gamma_hz_per_s"])
    r_delta = float(params["range_delta_m"])
    tp = 10e-6
    fs = 4 * gamma * tp
    grid = make_grid(fs, tp)
    tx = ComplexEnvelope(grid, np.exp(1j * np.pi * gamma * grid.times ** 2))

    geometry = SceneGeometry(platform_speed=0.0, splitter=None)
    target = PointTarget(azimuth_position=0.0, range_offset=r_delta)
    echo = synthesize_echo(tx, geometry, target, 0.0)
    iq = Receiver(BenchParams()).detect(echo, synthesize_reference(tx, geometry))

    cfg = DechirpConfig(gamma=gamma, f_center=geometry.carrier_frequency, decimation=400, range_oversample=8)
    beat = rvp_correct(assemble_beat(iq, cfg), cfg)
    mat = range_compress([beat], cfg)
    peak = float(mat.beat_frequencies[np.argmax(np.abs(mat.data[0]))])
    half_bin = 0.5 / tp
    expected = float(params["expected_hz"])
    return abs(peak - expected) <= half_bin, {"beat_hz": peak, "expected_hz": expected, "half_bin_hz": half_bin}


def _local_peak(image: SalImage, azimuth_m: float, range_m: float, radius_az: float,
                radius_rg: float) -> Tuple[float, float]:
    # strongest sample within a window around a nominal position
    rows = np.flatnonzero(np.abs(image.azimuth_axis - azimuth_m) <= radius_az)
    cols = np.flatnonzero(np.abs(image.range_axis - range_m) <= radius_rg)
    window = image.magnitude[np.ix_(rows, cols)]
    r, c = np.unravel_index(np.argmax(window), window.shape)
    return float(image.azimuth_axis[rows[r]]), float(image.range_axis[cols[c]])


def check_three_point_image(params: Dict[str, Any], scale: int) -> CheckResult:
    """
    Three-point scene: both pairs resolved and mainlobe widths near theory.

    Parameters
    ----------
    params : dict
        preset, min_dip_db, max_range_width_m, azimuth_width_rel_tol
    scale : int
        Frequency-plan scale factor; range limits grow by the same factor

    Returns
    -------
    tuple
        (passed, details)
    """
    cfg = scale_config(load_preset(params["preset"]), scale)
    simulator = SalSimulator(cfg)
    _, image = simulator.form_image()
    theory = simulator.theoretical_resolution()

    radius_az = theory["azimuth_m"]
    radius_rg = theory["range_m"]
    peaks = [_local_peak(image, t.azimuth_position, t.range_offset, radius_az, radius_rg)
             for t in simulator.targets]
    center, range_pair, azimuth_pair = peaks[0], peaks[1], peaks[2]
    range_dip = separation_dip(image, center, range_pair)
    azimuth_dip = separation_dip(image, center, azimuth_pair)

    center_index = image.index_of(*center)
    range_width = measure_resolution(image, "range", center_index)
    azimuth_width = measure_resolution(image, "azimuth", center_index)
    azimuth_misfit = abs(azimuth_width - theory["azimuth_m"]) / theory["azimuth_m"]

    min_dip = float(params["min_dip_db"])
    passed = (range_dip >= min_dip and azimuth_dip >= min_dip
              and range_width <= float(params["max_range_width_m"]) * cfg.scale
              and azimuth_misfit <= float(params["azimuth_width_rel_tol"]))
    return passed, {
        "range_dip_db": range_dip,
        "azimuth_dip_db": azimuth_dip,
        "range_width_m": range_width,
        "range_width_unscaled_m": range_width / cfg.scale,
        "azimuth_width_m": azimuth_width,
        "azimuth_theory_m": theory["azimuth_m"],
    }


def check_data_reduction(params: Dict[str, Any], scale: int) -> CheckResult:
    cfg = load_preset(params["preset"])
    report = data_reduction_report(float(params["scene_extent_m"]), cfg.dechirp_config(), cfg.drive_params())
    return report.orders_of_magnitude_saved >= float(params["min_orders"]), report.as_dict()


CHECKS: Dict[str, Callable[[Dict[str, Any], int], CheckResult]] = {
    "sideband_oracle": check_sideband_oracle,
    "chirp_linearity": check_chirp_linearity,
    "filter_feasibility": check_filter_feasibility,
    "receiver_quadrature": check_receiver_quadrature,
    "beat_frequency": check_beat_frequency,
    "three_point_image": check_three_point_image,
    "data_reduction": check_data_reduction,
}


def run_checks(config: dict, scale: int, only: Optional[List[str]] = None) -> Dict[str, Dict[str, Any]]:
    """
    Execute the configured checks.

    Parameters
    ----------
    config : dict
        Parsed eval_config.yaml
    scale : int
        Frequency-plan scale factor for the preset-based checks
    only : list of str, optional
        Restrict the run to these check ids

    Returns
    -------
    dict
        Per check id: name, passed flag, runtime and measured details

    Notes
    -----
    A check that raises is recorded as failed with the error message; the run continues.
    """
    results = {}
    for check in config.get("checks", []):
        check_id = check["id"]
        if only and check_id not in only:
            continue
        fn = CHECKS.get(check_id)
        if fn is None:
            logger.warning(f"No implementation for check '{check_id}', skipping")
            continue
        logger.info(f"Running check {check_id}")
        started = time.perf_counter()
        try:
            passed, details = fn(check.get("params", {}), scale)
        except Exception as e:
            logger.error(f"Check {check_id} raised: {str(e)}")
            passed, details = False, {"error": str(e)}
        results[check_id] = {
            "name": check.get("name", check_id),
            "passed": bool(passed),
            "runtime_s": time.perf_counter() - started,
            "details": details,
        }
        logger.info(f"Check {check_id}: {'PASS' if passed else 'FAIL'}")
    return results


def summary_frame(results: Dict[str, Dict[str, Any]]) -> pd.DataFrame:
    """One row per check with its verdict, runtime and flattened details."""
    rows = []
    for check_id, result in results.items():
        row = {"check": check_id, "passed": result["passed"], "runtime_s": result["runtime_s"]}
        row.update({f"detail.{k}": v for k, v in result["details"].items()})
        rows.append(row)
    return pd.DataFrame(rows)


def main():
    """
    Main entry point for the acceptance pipeline.

    This function:
    1. Loads environment variables
    2. Parses command line arguments
    3. Creates a run directory for output
    4. Runs the configured checks
    5. Writes the results JSON and the summary CSV

    Command-line Arguments
    ---------------------
    --config : str
        Path to the acceptance configuration (default: 'config/eval_config.yaml')
    --scale : int, optional
        Overrides evaluation.scale
    --only : str, repeatable
        Run only the named checks
    --output-dir : str, optional
        Base directory for evaluation outputs
    """
    load_dotenv()

    parser = argparse.ArgumentParser(description='Simulator acceptance pipeline')
    parser.add_argument('--config', type=str, default='config/eval_config.yaml', help='Path to config file')
    parser.add_argument('--scale', type=int, help='Frequency-plan scale factor')
    parser.add_argument('--only', action='append', help='Run only this check (repeatable)')
    parser.add_argument('--output-dir', type=str, help='Base directory for evaluation outputs')
    args = parser.parse_args()

    config = load_config(args.config)
    settings = config.get("evaluation", {})
    scale = args.scale or int(settings.get("scale", 1))

    run_dir = timestamped_dir(args.output_dir or settings.get("output_dir", "evaluation_runs"), "run")
    run_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Created run directory: {run_dir}")

    results = run_checks(config, scale, args.only)

    results_file = Path(run_dir) / settings.get("output_file", "acceptance_results.json")
    results_file.write_text(dumps_json({"scale": scale, "results": results}))
    summary_df = summary_frame(results)
    summary_df.to_csv(Path(run_dir) / "summary.csv", index=False)

    logger.info("\n" + "-" * 50)
    logger.info("ACCEPTANCE SUMMARY")
    logger.info("-" * 50)
    if not summary_df.empty:
        pd.set_option('display.max_columns', None)
        pd.set_option('display.width', 120)
        logger.info("\n" + str(summary_df[["check", "passed", "runtime_s"]]))
    failed = [c for c, r in results.items() if not r["passed"]]
    logger.info(f"{len(results) - len(failed)} of {len(results)} checks passed")
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
