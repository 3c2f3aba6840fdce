"""
app/config.py

Experiment configuration: pydantic schema for the YAML files, preset lookup, physical
cross-checks, scaling for fast runs, canonical serialization and hashing, plus the
conversions from configuration blocks to the simulator's parameter types.
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from scipy import constants

from app.errors import ConfigParseError, ConfigSchemaError, PhysicalValueError
from app.modules.dechirp_imager import DechirpConfig
from app.modules.eom_chain import ChirpDriveParams
from app.modules.jones_bench import BenchParams
from app.modules.laser_model import LaserParams
from app.modules.scene_echo import PointTarget, SceneGeometry, slant_range

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
PRESET_DIR = CONFIG_DIR / "presets"
OUTPUT_DIR_ENV = "SAL_OUTPUT_DIR"


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SimulationSettings(_Block):
    sample_rate: float = Field(default=120e9, gt=0)
    centered: bool = True
    workers: int = Field(default=1, ge=1)
    chunk_size: int = Field(default=1 << 20, ge=1)
    progress: bool = False


class LaserSettings(_Block):
    A_F: float = Field(default=0.0, ge=0)
    f_a: float = Field(default=0.0, ge=0)
    sigma_fb: float = Field(default=0.0, ge=0)
    sigma_phic: float = Field(default=0.0, ge=0)


class ChirpSettings(_Block):
    modulation_index: float = Field(default=1.0, gt=0)
    bandwidth: float = Field(default=5e9, gt=0)
    pulse_width: float = Field(default=50e-6, gt=0)
    offset_frequency: float = Field(default=15e9, ge=0)
    prf: float = Field(default=20e3, gt=0)
    order: int = 2
    guard_fraction: float = Field(default=0.2, ge=0)
    edge_rolloff: float = Field(default=0.0, ge=0)
    edfa_gain: float = Field(default=1.0, gt=0)


class FilterSettings(_Block):
    delta_lambda: float = Field(default=0.2e-9, gt=0)
    lambda1: float = Field(default=1550e-9, gt=0)
    lambda2: float = Field(default=1550e-9, gt=0)
    modulator_bandwidth: float = Field(default=40e9, gt=0)


class BenchSettings(_Block):
    sigma: float = Field(default=0.0, ge=0, lt=1)
    phi_t: float = float(np.pi)
    phi_r: float = float(np.pi)
    eta: float = float(np.pi / 4)
    theta1: float = float(np.pi / 8)
    theta2: float = float(np.pi / 8)
    normalized: bool = True


class GeometrySettings(_Block):
    wavelength: float = Field(default=1550e-9, gt=0)
    divergence: float = Field(default=0.1e-3, gt=0)
    standoff_range: float = Field(default=10e3, gt=0)
    platform_speed: float = Field(default=50.0, ge=0)
    reference_range: Optional[float] = Field(default=None, ge=0)
    beam: Literal["uniform", "gaussian"] = "uniform"
    splitter: Optional[float] = Field(default=0.99, gt=0, lt=1)


class TargetSettings(_Block):
    azimuth_m: float = 0.0
    range_offset_m: float = 0.0
    reflectivity_re: float = 1.0
    reflectivity_im: float = 0.0


class DechirpSettings(_Block):
    decimation: int = Field(default=1, ge=1)
    rvp_correction: bool = True
    rcmc: bool = True
    window: Literal["rect", "hann", "taylor"] = "rect"
    range_oversample: int = Field(default=8, ge=1)
    azimuth_oversample: int = Field(default=8, ge=1)
    scene_extent: float = Field(default=1.0, gt=0)
    alias_tolerance: float = Field(default=0.05, gt=0, le=1)


class OutputSettings(_Block):
    directory: str = "outputs"
    format: Literal["csv", "binary"] = "csv"
    spectra: bool = True
    iq: bool = False
    image: bool = True


class ExperimentConfig(_Block):
    """
    Complete description of one simulator run.

    Attributes:
        preset: Name of the preset the file was derived from, if any
        seed: Base seed; pulse k draws its laser noise from seed + k
        scale: Fast-run scale factor already applied to the frequency plan
        experiment: What to run: sideband spectra, filtering, or the full imaging chain
    """

    preset: Optional[str] = None
    seed: int = Field(default=0, ge=0)
    scale: int = Field(default=1, ge=1)
    experiment: Literal["sidebands", "filtering", "imaging"] = "imaging"
    simulation: SimulationSettings = Field(default_factory=SimulationSettings)
    laser: LaserSettings = Field(default_factory=LaserSettings)
    chirp: ChirpSettings = Field(default_factory=ChirpSettings)
    filter: FilterSettings = Field(default_factory=FilterSettings)
    bench: BenchSettings = Field(default_factory=BenchSettings)
    geometry: GeometrySettings = Field(default_factory=GeometrySettings)
    targets: List[TargetSettings] = Field(default_factory=lambda: [TargetSettings()])
    dechirp: DechirpSettings = Field(default_factory=DechirpSettings)
    outputs: OutputSettings = Field(default_factory=OutputSettings)

    @property
    def carrier_frequency(self) -> float:
        return constants.c / self.geometry.wavelength

    def drive_params(self) -> ChirpDriveParams:
        c = self.chirp
        return ChirpDriveParams.from_bandwidth(
            m=c.modulation_index, bandwidth=c.bandwidth, f0=c.offset_frequency,
            Tp=c.pulse_width, prf=c.prf, q=c.order,
        )

    def laser_params(self) -> LaserParams:
        s = self.laser
        return LaserParams(f_c=self.carrier_frequency, A_F=s.A_F, f_a=s.f_a,
                           sigma_fb=s.sigma_fb, sigma_phic=s.sigma_phic, seed=self.seed)

    def bench_params(self) -> BenchParams:
        b = self.bench
        return BenchParams(sigma=b.sigma, phi_t=b.phi_t, phi_r=b.phi_r, eta=b.eta,
                           theta1=b.theta1, theta2=b.theta2, normalized=b.normalized)

    def scene_geometry(self) -> SceneGeometry:
        g = self.geometry
        return SceneGeometry(
            wavelength=g.wavelength, divergence=g.divergence, standoff_range=g.standoff_range,
            platform_speed=g.platform_speed, prf=self.chirp.prf, reference_range=g.reference_range,
            beam=g.beam, splitter=g.splitter,
        )

    def point_targets(self) -> List[PointTarget]:
        return [
            PointTarget(t.azimuth_m, t.range_offset_m, complex(t.reflectivity_re, t.reflectivity_im))
            for t in self.targets
        ]

    def dechirp_config(self) -> DechirpConfig:
        d = self.dechirp
        return DechirpConfig.from_drive(
            self.drive_params(), self.carrier_frequency,
            decimation=d.decimation, rvp_correction=d.rvp_correction, rcmc=d.rcmc, window=d.window,
            range_oversample=d.range_oversample, azimuth_oversample=d.azimuth_oversample,
            alias_tolerance=d.alias_tolerance,
        )


def _schema_error(exc: ValidationError) -> ConfigSchemaError:
    first = exc.errors()[0]
    key = ".".join(str(part) for part in first["loc"])
    return ConfigSchemaError(f"invalid configuration key '{key}': {first['msg']}", key=key)


def validate_physics(cfg: ExperimentConfig) -> ExperimentConfig:
    """
    Cross-field checks the schema cannot express.

    Raises:
        PhysicalValueError: If the configuration describes an unrealizable simulation
    """
    c = cfg.chirp
    fs = cfg.simulation.sample_rate
    if c.order == 0:
        raise PhysicalValueError("chirp.order must select a non-zero sideband")
    if fs * c.pulse_width < 2:
        raise PhysicalValueError("simulation.sample_rate gives fewer than two samples per pulse")
    if c.prf * c.pulse_width > 1 + 1e-12:
        raise PhysicalValueError("chirp.pulse_width exceeds the pulse repetition interval")

    drive = cfg.drive_params()
    lo, hi = drive.passband(c.guard_fraction)
    if lo < -fs / 2 or hi > fs / 2:
        raise PhysicalValueError(
            f"order {c.order} passband [{lo / 1e9:.3f}, {hi / 1e9:.3f}] GHz does not fit "
            f"simulation.sample_rate {fs / 1e9:.3f} GHz"
        )
    cycles = c.offset_frequency * c.pulse_width
    if not np.isclose(cycles, round(cycles), rtol=0, atol=1e-6):
        logger.warning("offset_frequency * pulse_width is not an integer; sideband bins will leak")

    if cfg.experiment != "imaging":
        return cfg

    geometry = cfg.scene_geometry()
    if geometry.platform_speed == 0:
        raise PhysicalValueError("imaging needs a moving platform (geometry.platform_speed > 0)")
    if cfg.dechirp.decimation > fs * c.pulse_width / 2:
        raise PhysicalValueError("dechirp.decimation leaves fewer than two beat samples per pulse")
    beat_nyquist = fs / (2 * cfg.dechirp.decimation)
    edge = geometry.aperture_time / 2
    for index, tgt in enumerate(cfg.point_targets()):
        offsets = slant_range(geometry, tgt, np.array([-edge, 0.0, edge])) - geometry.reference_range
        r_delta = float(np.max(np.abs(offsets)))
        if 2 * r_delta / constants.c >= c.pulse_width:
            raise PhysicalValueError(f"targets.{index} lies outside the receive window")
        beat = abs(2 * drive.optical_rate * r_delta / constants.c)
        if beat >= beat_nyquist:
            raise PhysicalValueError(
                f"targets.{index} beats at {beat / 1e6:.3f} MHz, above the decimated Nyquist "
                f"{beat_nyquist / 1e6:.3f} MHz"
            )
    return cfg


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a parsed mapping into an ExperimentConfig."""
    if not isinstance(raw, dict):
        raise ConfigParseError("a configuration must be a YAML mapping")
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        raise _schema_error(exc) from exc
    return validate_physics(cfg)


def loads_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"configuration is not valid YAML: {exc}") from exc
    return config_from_dict(raw)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Load configuration from a YAML file.

    Args:
        path: Path to the YAML file

    Returns:
        Validated ExperimentConfig

    Raises:
        ConfigParseError: If the file is missing or not valid YAML
        ConfigSchemaError: If a key is unknown or a value is out of range
        PhysicalValueError: If the values are inconsistent with each other
    """
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as exc:
        raise ConfigParseError(f"cannot read configuration {path}: {exc}") from exc
    cfg = loads_config(text)
    logger.info(f"Loaded configuration {path} (preset={cfg.preset}, experiment={cfg.experiment})")
    return cfg


def available_presets() -> List[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def load_preset(name: str) -> ExperimentConfig:
    """Load a named preset from config/presets."""
    path = PRESET_DIR / f"{name}.yaml"
    if not path.is_file():
        raise ConfigParseError(f"unknown preset '{name}'; available: {', '.join(available_presets())}")
    return load_config(path)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical YAML text of a configuration."""
    return yaml.safe_dump(cfg.model_dump(mode="json"), sort_keys=False, default_flow_style=False)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON form."""
    canonical = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def scale_config(cfg: ExperimentConfig, n: int) -> ExperimentConfig:
    """
    Shrink the frequency plan by n for fast runs.

    Offset frequency, bandwidth, edge rolloff, sample rate and the dechirp decimation are
    divided by n; target range offsets and the scene extent are multiplied by n, so the
    image keeps the same number of range resolution cells.

    Raises:
        PhysicalValueError: If n < 1 or the decimation is not divisible by n
    """
    if n < 1:
        raise PhysicalValueError(f"scale must be >= 1, got {n}")
    if n == 1:
        return cfg
    if cfg.dechirp.decimation % n:
        raise PhysicalValueError(f"dechirp.decimation {cfg.dechirp.decimation} is not divisible by scale {n}")

    raw = cfg.model_dump(mode="json")
    raw["scale"] = cfg.scale * n
    raw["simulation"]["sample_rate"] /= n
    for key in ("offset_frequency", "bandwidth", "edge_rolloff"):
        raw["chirp"][key] /= n
    raw["dechirp"]["decimation"] //= n
    raw["dechirp"]["scene_extent"] *= n
    for target in raw["targets"]:
        target["range_offset_m"] *= n
    logger.info(f"Scaled configuration by {n}")
    return config_from_dict(raw)


def output_directory(cfg: ExperimentConfig) -> Path:
    """Output root, overridden by the SAL_OUTPUT_DIR environment variable."""
    return Path(os.getenv(OUTPUT_DIR_ENV) or cfg.outputs.directory)


def load_app_settings(path: Union[str, Path] = CONFIG_DIR / "config.yaml") -> Dict[str, Any]:
    """Tool settings (name, version, defaults) as a plain dictionary."""
    with open(path, "r") as f:
        return yaml.safe_load(f) or {}


def override_config(cfg: ExperimentConfig, updates: Dict[str, Any]) -> ExperimentConfig:
    """
    Copy of cfg with dotted keys replaced, e.g. {"seed": 3, "outputs.format": "binary"}.

    The result goes through the same validation as a loaded file.
    """
    raw = cfg.model_dump(mode="json")
    for dotted, value in updates.items():
        *parents, leaf = dotted.split(".")
        node = raw
        for part in parents:
            node = node[int(part)] if isinstance(node, list) else node[part]
        node[leaf] = value
    return config_from_dict(raw)
