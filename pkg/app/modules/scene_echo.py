"""
app/modules/scene_echo.py

Strip-map scene: side-looking geometry, point-target slant-range histories and the
delayed echo and reference fields for every pulse of the synthetic aperture.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, TypeVar

import numpy as np
from scipy import constants
from tqdm import tqdm

from app.modules.jones_bench import JonesField
from app.modules.signal_core import ComplexEnvelope, delay

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

BEAM_SHAPES = ("uniform", "gaussian")

T = TypeVar("T")


@dataclass(frozen=True)
class SceneGeometry:
    """
    Side-looking strip-map geometry.

    Attributes:
        wavelength: Optical wavelength (m)
        divergence: Full beam divergence (rad)
        standoff_range: Closest-approach range to the scene center (m)
        platform_speed: Along-track speed (m/s); zero only for stationary tests
        prf: Pulse repetition frequency (Hz)
        reference_range: Range the reference channel is delayed to (m); defaults to standoff_range
        beam: Footprint weighting, "uniform" or "gaussian"
        splitter: Power share sent to the transmitter by the 99:1 splitter; None disables it
    """

    wavelength: float = 1550e-9
    divergence: float = 0.1e-3
    standoff_range: float = 10e3
    platform_speed: float = 50.0
    prf: float = 20e3
    reference_range: Optional[float] = None
    beam: str = "uniform"
    splitter: Optional[float] = 0.99

    def __post_init__(self) -> None:
        for name in ("wavelength", "divergence", "standoff_range", "prf"):
            if not getattr(self, name) > 0:
                raise ValueError(f"geometry {name} must be positive, got {getattr(self, name)}")
        if self.platform_speed < 0:
            raise ValueError(f"platform_speed must be non-negative, got {self.platform_speed}")
        if self.beam not in BEAM_SHAPES:
            raise ValueError(f"beam must be one of {BEAM_SHAPES}, got {self.beam!r}")
        if self.splitter is not None and not 0 < self.splitter < 1:
            raise ValueError(f"splitter share must lie in (0, 1), got {self.splitter}")
        if self.reference_range is None:
            object.__setattr__(self, "reference_range", self.standoff_range)
        elif self.reference_range < 0:
            raise ValueError(f"reference_range must be non-negative, got {self.reference_range}")

    @property
    def carrier_frequency(self) -> float:
        return constants.c / self.wavelength

    @property
    def footprint(self) -> float:
        """Along-track beam footprint divergence * R (m)."""
        return self.divergence * self.standoff_range

    @property
    def aperture_time(self) -> float:
        """Synthetic-aperture time T_a = footprint / v (s)."""
        if self.platform_speed == 0:
            raise ValueError("a stationary platform has no synthetic aperture")
        return self.footprint / self.platform_speed

    @property
    def pulse_count(self) -> int:
        return int(round(self.aperture_time * self.prf))

    @property
    def t_ref(self) -> float:
        """Reference-channel delay 2 R_ref / c (s)."""
        return 2 * self.reference_range / constants.c

    @property
    def echo_amplitude(self) -> float:
        return 1.0 if self.splitter is None else float(np.sqrt(self.splitter))

    @property
    def reference_amplitude(self) -> float:
        return 1.0 if self.splitter is None else float(np.sqrt(1 - self.splitter))

    def azimuth_rate(self, range_m: Optional[float] = None) -> float:
        """Doppler rate K_a = 2 v^2 / (lambda R) at range_m (default: standoff range)."""
        r0 = self.standoff_range if range_m is None else range_m
        return 2 * self.platform_speed ** 2 / (self.wavelength * r0)

    def slow_times(self, count: Optional[int] = None) -> np.ndarray:
        """Pulse times (k - M//2) / prf, so the middle pulse sits at t_m = 0."""
        m = self.pulse_count if count is None else count
        return (np.arange(m) - m // 2) / self.prf


@dataclass(frozen=True)
class PointTarget:
    """
    Ideal point scatterer.

    Attributes:
        azimuth_position: Along-track position (m)
        range_offset: Cross-track offset from the scene center range (m)
        reflectivity: Complex amplitude reflectivity
    """

    azimuth_position: float = 0.0
    range_offset: float = 0.0
    reflectivity: complex = 1.0 + 0.0j


def slant_range(g: SceneGeometry, tgt: PointTarget, t_m):
    """R_i(t_m) = sqrt((R + range_offset)^2 + (v t_m - azimuth_position)^2)."""
    return np.hypot(g.standoff_range + tgt.range_offset, g.platform_speed * np.asarray(t_m) - tgt.azimuth_position)


def beam_weight(g: SceneGeometry, tgt: PointTarget, t_m: float) -> float:
    """
    Two-way amplitude weight of the footprint at the target for the pulse at t_m.

    The uniform beam is a rect of the footprint width; the gaussian beam has a power
    FWHM equal to the footprint.
    """
    offset = tgt.azimuth_position - g.platform_speed * t_m
    half = g.footprint / 2
    if g.beam == "uniform":
        return 1.0 if abs(offset) <= half else 0.0
    return float(np.exp(-2 * np.log(2) * (offset / g.footprint) ** 2))


def _carrier_rotation(g: SceneGeometry, range_m: float) -> complex:
    # exp(-j 2 pi f_c * 2R/c) with f_c * 2R/c written as 2R/lambda and reduced to one cycle
    cycles = np.mod(2 * range_m / g.wavelength, 1.0)
    return complex(np.exp(-2j * np.pi * cycles))


def _delay_and_gate(tx: ComplexEnvelope, tau: float) -> np.ndarray:
    grid = tx.grid
    if abs(tau) >= grid.duration:
        raise ValueError(f"relative delay {tau:.3e} s does not fit the {grid.duration:.3e} s pulse grid")
    shifted = delay(tx, tau).samples.copy()
    emitted = grid.times - tau
    shifted[(emitted < grid.t_start) | (emitted >= grid.t_end)] = 0.0
    return shifted


def echo_samples(tx: ComplexEnvelope, g: SceneGeometry, tgt: PointTarget, t_m: float) -> np.ndarray:
    """
    Total echo amplitude s(t) of one target on the receive window.

    The receive window is opened t_ref after emission, so the envelope is delayed by
    t_o - t_ref only; the carrier term exp(-j 2 pi f_c t_o) is applied analytically.
    The optical offset of the filtered chirp travels with the envelope and is rotated
    by the delay itself.
    """
    r_i = float(slant_range(g, tgt, t_m))
    tau = 2 * r_i / constants.c - g.t_ref
    weight = beam_weight(g, tgt, t_m)
    if weight == 0 or tgt.reflectivity == 0:
        return np.zeros(tx.grid.num_samples, dtype=np.complex128)
    amplitude = tgt.reflectivity * g.echo_amplitude * weight * _carrier_rotation(g, r_i)
    return amplitude * _delay_and_gate(tx, tau)


def synthesize_echo(tx: ComplexEnvelope, g: SceneGeometry, tgt: PointTarget, t_m: float) -> JonesField:
    """
    45-degree linear echo field of one point target.

    Args:
        tx: Transmit envelope on the pulse grid
        g: Scene geometry
        tgt: Point target
        t_m: Slow time of the pulse (s)

    Returns:
        JonesField [s, s]/sqrt(2)

    Raises:
        ValueError: If the delay relative to the reference does not fit the grid
    """
    return JonesField.linear45(echo_samples(tx, g, tgt, t_m), tx.grid)


def synthesize_scene_echo(tx: ComplexEnvelope, g: SceneGeometry, targets: Sequence[PointTarget],
                          t_m: float) -> JonesField:
    """Coherent superposition of the echoes of several targets."""
    total = np.zeros(tx.grid.num_samples, dtype=np.complex128)
    for tgt in targets:
        total += echo_samples(tx, g, tgt, t_m)
    return JonesField.linear45(total, tx.grid)


def synthesize_reference(tx: ComplexEnvelope, g: SceneGeometry) -> JonesField:
    """
    Horizontal reference field [w, 0].

    The reference defines the receive window, so its envelope is not shifted; only the
    carrier rotation exp(-j 2 pi f_c t_ref) and the splitter share apply.
    """
    w = tx.samples * (g.reference_amplitude * _carrier_rotation(g, g.reference_range))
    return JonesField.horizontal_only(w, tx.grid)


@dataclass(frozen=True)
class Pulse:
    """One pulse of the aperture: its index, slow time and the two receiver inputs."""

    index: int
    t_m: float
    echo: JonesField
    reference: JonesField


class PulseSet:
    """
    Lazily evaluated pulses over the synthetic aperture.

    Only pulses that are being processed hold their fields in memory; the transmit
    envelope comes from a callable so noisy lasers can give every pulse its own draw.

    Attributes:
        geometry (SceneGeometry): Scene geometry
        targets (List[PointTarget]): Scatterers
        slow_time (np.ndarray): Pulse times t_m (s)
    """

    def __init__(self, transmit: Callable[[int], ComplexEnvelope], geometry: SceneGeometry,
                 targets: Sequence[PointTarget], count: Optional[int] = None):
        self._transmit = transmit
        self.geometry = geometry
        self.targets = list(targets)
        self.slow_time = geometry.slow_times(count)
        logger.info(f"Initialized PulseSet ({len(self.slow_time)} pulses, {len(self.targets)} targets)")

    def __len__(self) -> int:
        return len(self.slow_time)

    def pulse(self, index: int) -> Pulse:
        tx = self._transmit(index)
        t_m = float(self.slow_time[index])
        return Pulse(
            index=index,
            t_m=t_m,
            echo=synthesize_scene_echo(tx, self.geometry, self.targets, t_m),
            reference=synthesize_reference(tx, self.geometry),
        )

    def __iter__(self) -> Iterator[Pulse]:
        for index in range(len(self)):
            yield self.pulse(index)

    def map(self, fn: Callable[[Pulse], T], workers: int = 1, progress: bool = False) -> List[T]:
        """
        Apply fn to every pulse, in pulse order.

        Args:
            fn: Per-pulse processing; must not share mutable state between calls
            workers: Thread count; 1 runs inline
            progress: Show a tqdm progress bar

        Returns:
            One result per pulse
        """
        def run(index: int) -> T:
            return fn(self.pulse(index))

        indices = range(len(self))
        if workers <= 1:
            return [run(k) for k in tqdm(indices, desc="pulses", disable=not progress)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(run, indices), total=len(self), desc="pulses", disable=not progress))
