"""
app/modules/signal_core.py

Sampled-signal substrate for the simulator: time grids, complex baseband envelopes,
Parseval-scaled spectra, frequency-domain masks, fractional delays and decimation.
Every optical field is a complex envelope relative to the laser carrier.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy import fft as sp_fft

from app.errors import BandwidthError

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Share of energy a decimation may drop before a warning is logged
DISCARD_WARN_FRACTION = 1e-3


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform fast-time sampling grid.

    Attributes:
        sample_rate: Samples per second (Hz)
        num_samples: Number of samples
        t_start: Time of the first sample (s); pulse-local, centered grids start at -duration/2
    """

    sample_rate: float
    num_samples: int
    t_start: float = 0.0

    def __post_init__(self) -> None:
        if not self.sample_rate > 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not self.num_samples > 0:
            raise ValueError(f"num_samples must be positive, got {self.num_samples}")

    @property
    def dt(self) -> float:
        """Sample spacing (s)."""
        return 1.0 / self.sample_rate

    @property
    def duration(self) -> float:
        """Grid length (s)."""
        return self.num_samples / self.sample_rate

    @property
    def t_end(self) -> float:
        """End of the grid support (exclusive)."""
        return self.t_start + self.duration

    @property
    def times(self) -> np.ndarray:
        """Sample times (s)."""
        return self.t_start + np.arange(self.num_samples) * self.dt

    def frequencies(self, n: Optional[int] = None) -> np.ndarray:
        """Unshifted DFT bin frequencies (Hz) for a transform of length n."""
        return sp_fft.fftfreq(n or self.num_samples, d=self.dt)


@dataclass(frozen=True, eq=False)
class ComplexEnvelope:
    """
    Complex baseband field sampled on a TimeGrid; power is |samples|^2.

    Attributes:
        grid: Sampling grid
        samples: Complex samples, one per grid point
    """

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != 1 or samples.shape[0] != self.grid.num_samples:
            raise ValueError(
                f"envelope has {samples.shape} samples for a grid of {self.grid.num_samples}"
            )
        if not np.all(np.isfinite(samples)):
            raise ValueError("envelope samples must be finite")
        object.__setattr__(self, "samples", samples)

    @property
    def energy(self) -> float:
        """Time-domain energy sum(|s|^2) * dt."""
        return float(np.sum(np.abs(self.samples) ** 2) * self.grid.dt)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.samples) ** 2

    @cached_property
    def transform(self) -> np.ndarray:
        """Unshifted, unscaled DFT of the samples, computed once per envelope."""
        return sp_fft.fft(self.samples)

    def with_samples(self, samples: np.ndarray) -> "ComplexEnvelope":
        """New envelope on the same grid."""
        return ComplexEnvelope(self.grid, samples)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """
    Parseval-scaled spectrum of an envelope, phase-referenced to t = 0.

    Attributes:
        freqs: Baseband frequency offsets (Hz), strictly increasing over [-Fs/2, Fs/2)
        values: Spectral amplitudes, dt * DFT, so sum(|values|^2) * df equals the envelope energy
        resolution_bw: Bin spacing df (Hz)
    """

    freqs: np.ndarray
    values: np.ndarray
    resolution_bw: float

    @property
    def energy(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.resolution_bw)

    @property
    def power_density(self) -> np.ndarray:
        return np.abs(self.values) ** 2


def make_grid(sample_rate: float, duration: float, centered: bool = True) -> TimeGrid:
    """
    Build a sampling grid covering one pulse.

    Args:
        sample_rate: Sample rate (Hz)
        duration: Grid length (s)
        centered: Start at -duration/2 so the grid matches rect(t/Tp); otherwise start at 0

    Returns:
        TimeGrid with round(sample_rate * duration) samples

    Raises:
        ValueError: If either argument is not positive
    """
    if sample_rate <= 0 or duration <= 0:
        raise ValueError(f"sample_rate and duration must be positive, got {sample_rate}, {duration}")
    num_samples = int(round(sample_rate * duration))
    t_start = -duration / 2 if centered else 0.0
    return TimeGrid(sample_rate=sample_rate, num_samples=num_samples, t_start=t_start)


def _phase_reference(grid: TimeGrid, freqs: np.ndarray) -> np.ndarray:
    # exp(-j 2 pi f t_start), reduced modulo one cycle before scaling by 2 pi
    cycles = np.mod(freqs * grid.t_start, 1.0)
    return np.exp(-2j * np.pi * cycles)


def spectrum(env: ComplexEnvelope) -> Spectrum:
    """
    Parseval-scaled spectrum of an envelope.

    Args:
        env: Non-empty envelope

    Returns:
        Spectrum with fftshifted frequencies spanning [-Fs/2, Fs/2)
    """
    grid = env.grid
    freqs = grid.frequencies()
    values = env.transform * grid.dt * _phase_reference(grid, freqs)
    return Spectrum(
        freqs=sp_fft.fftshift(freqs),
        values=sp_fft.fftshift(values),
        resolution_bw=grid.sample_rate / grid.num_samples,
    )


def inverse_spectrum(spec: Spectrum, grid: TimeGrid) -> ComplexEnvelope:
    """
    Invert spectrum() back onto the grid the spectrum was taken on.

    Raises:
        ValueError: If the spectrum length does not match the grid
    """
    if spec.values.shape[0] != grid.num_samples:
        raise ValueError("spectrum length does not match the grid")
    freqs = grid.frequencies()
    values = sp_fft.ifftshift(spec.values) / _phase_reference(grid, freqs)
    return ComplexEnvelope(grid, sp_fft.ifft(values) / grid.dt)


def band_energy(spec: Spectrum, f_lo: float, f_hi: float) -> float:
    """Energy of the spectrum inside [f_lo, f_hi)."""
    inside = (spec.freqs >= f_lo) & (spec.freqs < f_hi)
    return float(np.sum(spec.power_density[inside]) * spec.resolution_bw)


def _band_mask(freqs: np.ndarray, f_lo: float, f_hi: float, rolloff: float) -> np.ndarray:
    if rolloff <= 0:
        return ((freqs >= f_lo) & (freqs <= f_hi)).astype(float)
    half = rolloff / 2
    mask = np.zeros_like(freqs, dtype=float)
    mask[(freqs >= f_lo + half) & (freqs <= f_hi - half)] = 1.0
    rising = (freqs > f_lo - half) & (freqs < f_lo + half)
    mask[rising] = 0.5 * (1 - np.cos(np.pi * (freqs[rising] - (f_lo - half)) / rolloff))
    falling = (freqs > f_hi - half) & (freqs < f_hi + half)
    mask[falling] = 0.5 * (1 + np.cos(np.pi * (freqs[falling] - (f_hi - half)) / rolloff))
    return mask


def bandpass(env: ComplexEnvelope, f_lo: float, f_hi: float, rolloff: float = 0.0) -> ComplexEnvelope:
    """
    Keep only the spectral content between f_lo and f_hi.

    The mask is ideal (brick-wall) by default; a positive rolloff gives raised-cosine
    edges of that width centered on each band edge.

    Args:
        env: Input envelope
        f_lo: Lower band edge (Hz)
        f_hi: Upper band edge (Hz)
        rolloff: Raised-cosine transition width (Hz)

    Returns:
        Filtered envelope on the same grid

    Raises:
        ValueError: If the band is empty or outside [-Fs/2, Fs/2]
    """
    nyquist = env.grid.sample_rate / 2
    if not f_lo < f_hi:
        raise ValueError(f"empty band [{f_lo}, {f_hi}]")
    if f_lo < -nyquist or f_hi > nyquist:
        raise ValueError(f"band [{f_lo:.6g}, {f_hi:.6g}] Hz outside the representable +/-{nyquist:.6g} Hz")
    mask = _band_mask(env.grid.frequencies(), f_lo, f_hi, rolloff)
    return env.with_samples(sp_fft.ifft(env.transform * mask))


def delay(env: ComplexEnvelope, tau: float) -> ComplexEnvelope:
    """
    Circular fractional delay by a frequency-domain phase ramp exp(-j 2 pi f tau).

    Integer-sample delays reduce to exact sample shifts; delays compose additively.
    """
    if tau == 0:
        return env
    freqs = env.grid.frequencies()
    ramp = np.exp(-2j * np.pi * np.mod(freqs * tau, 1.0))
    return env.with_samples(sp_fft.ifft(env.transform * ramp))


def decimate(env: ComplexEnvelope, factor: int, max_discarded: Optional[float] = None) -> ComplexEnvelope:
    """
    Ideal anti-alias lowpass at Fs/(2*factor), then keep every factor-th sample.

    When the grid length is a multiple of the factor the two steps collapse into
    keeping the central DFT bins and transforming back at the lower rate.

    Args:
        env: Input envelope whose bandwidth is below Fs/(2*factor)
        factor: Integer decimation factor
        max_discarded: Largest share of energy the lowpass may remove; None disables the check

    Returns:
        Envelope on a grid with sample_rate / factor and the same t_start

    Raises:
        ValueError: If factor < 1
        BandwidthError: If more than max_discarded of the energy lies outside the new band
    """
    if factor < 1:
        raise ValueError(f"decimation factor must be >= 1, got {factor}")
    if factor == 1:
        return env

    grid = env.grid
    n = grid.num_samples
    transform = env.transform
    total = float(np.sum(np.abs(transform) ** 2))

    if n % factor == 0:
        m = n // factor
        kept = np.round(sp_fft.fftfreq(m) * m).astype(int) % n
        reduced = transform[kept]
        discarded = total - float(np.sum(np.abs(reduced) ** 2))
        samples = sp_fft.ifft(reduced) / factor
    else:
        m = -(-n // factor)
        mask = np.abs(grid.frequencies()) < grid.sample_rate / (2 * factor)
        discarded = total - float(np.sum(np.abs(transform[mask]) ** 2))
        samples = sp_fft.ifft(transform * mask)[::factor]

    share = discarded / total if total > 0 else 0.0
    if max_discarded is not None and share > max_discarded:
        raise BandwidthError(
            f"decimation by {factor} would discard {share:.3e} of the energy (limit {max_discarded:.3e})"
        )
    if share > DISCARD_WARN_FRACTION:
        logger.warning(f"Decimation by {factor} discards {share:.3e} of the signal energy")

    new_grid = TimeGrid(sample_rate=grid.sample_rate / factor, num_samples=m, t_start=grid.t_start)
    return ComplexEnvelope(new_grid, samples)


def instantaneous_frequency(env: ComplexEnvelope) -> np.ndarray:
    """
    Instantaneous frequency (Hz) from the unwrapped phase, central differences.

    Valid while the per-sample phase step stays below pi.
    """
    phase = np.unwrap(np.angle(env.samples))
    return np.gradient(phase) * env.grid.sample_rate / (2 * np.pi)
