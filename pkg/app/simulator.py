"""
app/simulator.py

Simulator orchestrator: builds every stage from an experiment configuration, runs the
sideband, filtering or imaging experiment and emits its artifacts and run manifest.
"""

import logging
import time
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, TypeVar

import numpy as np
import pandas as pd
from scipy import constants

from api.artifacts import ArtifactWriter
from api.manifest import RunManifest, record_artifacts, write_manifest
from app.config import ExperimentConfig, config_hash, load_app_settings, output_directory, serialize_config
from app.errors import SimulationError, StageError
from app.modules.dechirp_imager import (
    DechirpImager,
    RangeDopplerMatrix,
    SalImage,
    data_reduction_report,
    find_peaks,
    measure_resolution,
)
from app.modules.eom_chain import (
    TransmitChain,
    chirp_linearity,
    filter_feasibility,
    measure_sideband_powers,
    sideband_table,
)
from app.modules.jones_bench import Receiver
from app.modules.scene_echo import PointTarget, Pulse, PulseSet
from app.modules.signal_core import ComplexEnvelope, band_energy, make_grid, spectrum
from utils.helpers import timestamped_dir

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

T = TypeVar("T")

# Largest sideband order tabulated by the sideband experiment
MAX_ORDER = 5


def run_stage(name: str, fn: Callable[..., T], *args, **kwargs) -> T:
    """Run one pipeline stage, re-raising any failure as a StageError naming it."""
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        logger.error(f"Stage '{name}' failed: {exc}", exc_info=True)
        raise StageError(name, exc) from exc


class SalSimulator:
    """
    End-to-end synthetic aperture lidar simulator.

    Integrates the transmit chain, the scene, the polarization receiver and the image
    former, and runs the experiment the configuration selects.

    Attributes:
        config (ExperimentConfig): Validated configuration
        grid (TimeGrid): Fast-time grid of one pulse
        chain (TransmitChain): Laser, modulator, filter and EDFA
        receiver (Receiver): Polarization I/Q receiver
        imager (DechirpImager): Beat assembly and image formation
    """

    def __init__(self, config: ExperimentConfig):
        """
        Initialize all stages from a configuration.

        Args:
            config: Validated experiment configuration
        """
        logger.info("Initializing SalSimulator")
        self.config = config
        sim = config.simulation
        self.drive = config.drive_params()
        self.geometry = config.scene_geometry()
        self.targets = config.point_targets()
        self.grid = make_grid(sim.sample_rate, config.chirp.pulse_width, centered=sim.centered)

        self.chain = TransmitChain(
            drive=self.drive,
            laser=config.laser_params(),
            guard_fraction=config.chirp.guard_fraction,
            rolloff=config.chirp.edge_rolloff,
            edfa_gain=config.chirp.edfa_gain,
        )
        self.receiver = Receiver(config.bench_params(), chunk_size=sim.chunk_size)
        self.dechirp = config.dechirp_config()
        self.imager = DechirpImager(self.dechirp, self.geometry, workers=sim.workers)

    def transmit(self, pulse_index: int) -> ComplexEnvelope:
        return self.chain.transmit(self.grid, pulse_index)

    def pulse_beat(self, pulse: Pulse) -> ComplexEnvelope:
        """Receiver and dechirp for one pulse."""
        return self.imager.beat(self.receiver.detect(pulse.echo, pulse.reference))

    def form_image(self, targets: Optional[Sequence[PointTarget]] = None,
                   count: Optional[int] = None) -> Tuple[RangeDopplerMatrix, SalImage]:
        """
        Simulate every pulse for a set of targets and focus the image.

        Args:
            targets: Scatterers; defaults to the configured targets
            count: Pulse count override; defaults to round(T_a * prf)

        Returns:
            (range-compressed matrix, focused image)
        """
        pulses = PulseSet(self.transmit, self.geometry, self.targets if targets is None else targets, count)
        sim = self.config.simulation
        beats = pulses.map(self.pulse_beat, workers=sim.workers, progress=sim.progress)
        return self.imager.form_image(beats, pulses.slow_time)

    def theoretical_resolution(self) -> Dict[str, float]:
        """Rect-window mainlobe widths and the half-aperture azimuth figure (m)."""
        g = self.geometry
        k_a = g.azimuth_rate()
        return {
            "range_m": 0.886 * constants.c / (2 * self.drive.optical_bandwidth),
            "azimuth_m": 0.886 * g.platform_speed / (k_a * g.aperture_time),
            "azimuth_half_aperture_m": g.wavelength * g.standoff_range / (2 * g.footprint),
        }

    def run_sidebands(self, writer: ArtifactWriter) -> Dict[str, Any]:
        """Modulated spectrum and the analytic sideband table against FFT band powers."""
        # 1. Modulate one pulse
        env = run_stage("modulate", self.chain.modulate, self.grid, 0)
        logger.info("Modulated one pulse")

        # 2. Tabulate sidebands and measure them
        table = run_stage("sideband_table", sideband_table, self.drive.m, self.drive, MAX_ORDER)
        measured = run_stage("measure_sidebands", measure_sideband_powers, env, self.drive, MAX_ORDER)
        frame = table.to_frame()
        frame["measured_fraction"] = [measured[int(n)] for n in table.orders]
        logger.info(f"Sideband core share {{0,+-2}} = {table.core_share:.4f}")

        # 3. Emit
        if self.config.outputs.spectra:
            writer.write_spectrum("sideband_spectrum", spectrum(env), self.grid.sample_rate, self.grid.t_start)
        writer.write_table("sideband_table", frame)
        errors = np.abs(frame["measured_fraction"] - frame["power_fraction"])
        return {"core_share": table.core_share, "max_abs_error": float(errors.max())}

    def run_filtering(self, writer: ArtifactWriter) -> Dict[str, Any]:
        """Selected order, its chirp linearity and the filter feasibility arithmetic."""
        # 1. Transmit one pulse
        env = run_stage("transmit", self.transmit, 0)
        spec = spectrum(env)
        lo, hi = self.drive.passband(self.config.chirp.guard_fraction)
        in_band = band_energy(spec, lo, hi) / spec.energy if spec.energy > 0 else 0.0
        logger.info(f"Filtered order {self.drive.q}: {in_band:.6f} of the energy inside the passband")

        # 2. Linearity of the selected chirp
        linearity = run_stage("chirp_linearity", chirp_linearity, env, self.drive)
        logger.info(f"Chirp linearity: relative RMS deviation {linearity.relative_rms:.3e}")

        # 3. Feasibility of the optical filter
        f = self.config.filter
        report = run_stage("filter_feasibility", filter_feasibility, f.delta_lambda, f.lambda1, f.lambda2,
                           self.drive, f.modulator_bandwidth, self.config.chirp.guard_fraction)

        # 4. Emit
        if self.config.outputs.spectra:
            writer.write_spectrum("filtered_spectrum", spec, self.grid.sample_rate, self.grid.t_start)
        writer.write_table("chirp_linearity", _one_row(linearity.as_dict()))
        writer.write_table("filter_feasibility", _one_row(report.as_dict()))
        writer.write_text("filter_feasibility.txt", report.to_text())
        return {
            "in_band_share": in_band,
            "relative_rms": linearity.relative_rms,
            "feasible": report.feasible,
            "separation_ok": report.separation_ok,
        }

    def run_imaging(self, writer: ArtifactWriter) -> Dict[str, Any]:
        """Full chain: pulses, receiver, dechirp, image, peaks and reduction report."""
        outputs = self.config.outputs

        # 1. Optionally keep the detector output of the center pulse
        if outputs.iq:
            pulses = PulseSet(self.transmit, self.geometry, self.targets)
            center = pulses.pulse(len(pulses) // 2)
            iq = run_stage("receiver", self.receiver.detect, center.echo, center.reference)
            writer.write_table("iq_center_pulse", iq.to_frame())

        # 2. Simulate the aperture and focus
        mat, image = run_stage("image_formation", self.form_image)
        logger.info(f"Formed {image.data.shape[0]} x {image.data.shape[1]} image")

        # 3. Peaks and resolution
        peaks = run_stage("peaks", find_peaks, image)
        widths = {
            "range_m": run_stage("range_resolution", measure_resolution, image, "range"),
            "azimuth_m": run_stage("azimuth_resolution", measure_resolution, image, "azimuth"),
        }
        logger.info(f"Measured -3 dB widths: range {widths['range_m'] * 100:.3f} cm, "
                    f"azimuth {widths['azimuth_m'] * 100:.3f} cm")

        # 4. Sampling-rate reduction
        report = data_reduction_report(self.config.dechirp.scene_extent, self.dechirp, self.drive)

        # 5. Emit
        if outputs.image:
            writer.write_image("image", image)
        writer.write_table("peaks", peaks)
        writer.write_table("data_reduction", report.to_frame())
        writer.write_text("data_reduction.txt", report.to_text())
        return {
            "peak_count": int(len(peaks)),
            "measured": widths,
            "theoretical": self.theoretical_resolution(),
            "orders_of_magnitude_saved": report.orders_of_magnitude_saved,
            "range_bin_m": mat.range_bin,
        }

    def run(self, writer: ArtifactWriter) -> Dict[str, Any]:
        experiment = self.config.experiment
        logger.info(f"Running experiment '{experiment}'")
        if experiment == "sidebands":
            return self.run_sidebands(writer)
        if experiment == "filtering":
            return self.run_filtering(writer)
        return self.run_imaging(writer)


def _one_row(values: Dict[str, Any]) -> pd.DataFrame:
    # list-valued fields become ";"-joined cells
    return pd.DataFrame([{k: (";".join(map(str, v)) if isinstance(v, list) else v) for k, v in values.items()}])


def run_experiment(cfg: ExperimentConfig, run_dir: Optional[Path] = None,
                   output_root: Optional[Path] = None) -> RunManifest:
    """
    Run one experiment and publish its artifacts.

    Args:
        cfg: Validated configuration
        run_dir: Target directory; defaults to a timestamped directory under the output root
        output_root: Output root; defaults to SAL_OUTPUT_DIR, then outputs.directory

    Returns:
        RunManifest of the published run

    Raises:
        StageError: If a stage fails; partial artifacts are removed
    """
    started = time.perf_counter()
    digest = config_hash(cfg)
    settings = load_app_settings()
    if run_dir is None:
        run_dir = timestamped_dir(output_root or output_directory(cfg), f"{cfg.preset or 'run'}_{digest[:8]}")

    writer = ArtifactWriter(run_dir, cfg.outputs.format, digest)
    try:
        writer.write_text("config.yaml", serialize_config(cfg))
        simulator = run_stage("setup", SalSimulator, cfg)
        summary = simulator.run(writer)
        manifest = RunManifest(
            config_hash=digest,
            seed=cfg.seed,
            preset=cfg.preset,
            experiment=cfg.experiment,
            artifacts=record_artifacts(writer.staging_dir, writer.written),
            wall_clock_s=time.perf_counter() - started,
            version=str(settings.get("app", {}).get("version", "0.0.0")),
            summary=summary,
            run_dir=str(run_dir),
        )
        write_manifest(writer.staging_dir, manifest)
    except SimulationError as exc:
        writer.abort(exc)
        raise
    except Exception as exc:
        writer.abort(exc)
        raise StageError("emit", exc) from exc
    writer.commit()
    logger.info(f"Run finished in {manifest.wall_clock_s:.2f} s")
    return manifest
