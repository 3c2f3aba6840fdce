"""
app/modules/laser_model.py

Laser phase-noise model: sinusoidal frequency jitter, a random-walk frequency term and
white phase noise, synthesized as a reproducible phase track for one pulse.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import constants

from app.modules.signal_core import ComplexEnvelope, TimeGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LaserParams:
    """
    Laser description.

    f_b is drawn i.i.d. per sample and integrated by cumulative sum, and phi_c is drawn
    i.i.d. per sample, so both noise terms depend on the simulation sample rate.

    Attributes:
        f_c: Optical center frequency (Hz); informational in the baseband representation
        A_F: Sinusoidal frequency-jitter amplitude (Hz)
        f_a: Jitter frequency (Hz)
        sigma_fb: Standard deviation of the random frequency term (Hz)
        sigma_phic: Standard deviation of the random phase term (rad)
        seed: Seed of the generator owned by each synthesis call
    """

    f_c: float = constants.c / 1550e-9
    A_F: float = 0.0
    f_a: float = 0.0
    sigma_fb: float = 0.0
    sigma_phic: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("A_F", "f_a", "sigma_fb", "sigma_phic"):
            if getattr(self, name) < 0:
                raise ValueError(f"laser parameter {name} must be non-negative")

    @property
    def is_ideal(self) -> bool:
        return self.A_F == 0 and self.sigma_fb == 0 and self.sigma_phic == 0

    def for_pulse(self, index: int) -> "LaserParams":
        """Parameters for pulse `index`; each pulse draws from its own seed."""
        return LaserParams(self.f_c, self.A_F, self.f_a, self.sigma_fb, self.sigma_phic, self.seed + index)


@dataclass(frozen=True, eq=False)
class PhaseTrack:
    """
    Phase samples (rad) on a grid.

    Attributes:
        grid: Sampling grid
        phase: Phase per sample (rad)
    """

    grid: TimeGrid
    phase: np.ndarray

    def __post_init__(self) -> None:
        phase = np.asarray(self.phase, dtype=np.float64)
        if phase.shape != (self.grid.num_samples,):
            raise ValueError(f"phase track has {phase.shape} samples for a grid of {self.grid.num_samples}")
        if not np.all(np.isfinite(phase)):
            raise ValueError("phase track must be finite")
        object.__setattr__(self, "phase", phase)


def jitter_phase(A_F: float, f_a: float, t: np.ndarray) -> np.ndarray:
    """Closed-form 2*pi*A_F * integral_0^t sin(2*pi*f_a*tau) dtau."""
    if A_F == 0 or f_a == 0:
        return np.zeros_like(t, dtype=float)
    return (A_F / f_a) * (1.0 - np.cos(2 * np.pi * f_a * t))


def synthesize_phase(params: LaserParams, grid: TimeGrid) -> PhaseTrack:
    """
    Synthesize the laser phase track for one pulse.

    Args:
        params: Laser parameters; the seed fixes both random components
        grid: Pulse grid

    Returns:
        PhaseTrack holding jitter + random-walk frequency phase + white phase
    """
    phase = jitter_phase(params.A_F, params.f_a, grid.times)
    if params.sigma_fb > 0 or params.sigma_phic > 0:
        rng = np.random.default_rng(params.seed)
        f_b = rng.normal(0.0, params.sigma_fb, grid.num_samples) if params.sigma_fb > 0 else 0.0
        phi_c = rng.normal(0.0, params.sigma_phic, grid.num_samples) if params.sigma_phic > 0 else 0.0
        phase = phase + 2 * np.pi * np.cumsum(f_b * np.ones(grid.num_samples)) * grid.dt + phi_c
    return PhaseTrack(grid, phase)


def apply_phase(env: ComplexEnvelope, track: PhaseTrack) -> ComplexEnvelope:
    """
    Multiply an envelope by exp(j * phase).

    Raises:
        ValueError: If the envelope and track grids differ
    """
    if env.grid != track.grid:
        raise ValueError("envelope and phase track are on different grids")
    return env.with_samples(env.samples * np.exp(1j * track.phase))
