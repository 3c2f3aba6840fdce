"""
app/modules/eom_chain.py

Transmit chain: chirped AWG drive, electro-optic phase modulation, the exact sideband
decomposition with its FFT cross-check, optical selection of one sideband order, the
filter feasibility arithmetic and an ideal EDFA.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy import constants, special

from app.modules.laser_model import LaserParams, PhaseTrack, apply_phase, synthesize_phase
from app.modules.signal_core import (
    ComplexEnvelope,
    TimeGrid,
    band_energy,
    bandpass,
    instantaneous_frequency,
    spectrum,
)

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

# Orders carrying less power than this are ignored by the overlap search
NEGLIGIBLE_ORDER_POWER = 1e-9


@dataclass(frozen=True)
class ChirpDriveParams:
    """
    AWG drive and sideband selection.

    The drive phase is phi1(t) = 2*pi*f0*t + pi*K*t^2, so the drive sweeps exactly
    B = K*Tp Hz over a pulse and sideband order n sweeps |n|*B around n*f0.

    Attributes:
        m: Modulation index (rad)
        K: Drive chirp rate (Hz/s)
        f0: Fixed drive offset (Hz)
        Tp: Chirp period (s)
        prf: Pulse repetition frequency (Hz)
        q: Sideband order passed by the optical filter
    """

    m: float
    K: float
    f0: float
    Tp: float
    prf: float = 20e3
    q: int = 2

    def __post_init__(self) -> None:
        if self.m <= 0 or self.K <= 0 or self.Tp <= 0:
            raise ValueError("m, K and Tp must be positive")
        if self.f0 < 0:
            raise ValueError("f0 must be non-negative")
        if self.q == 0:
            raise ValueError("the selected sideband order must be non-zero")

    @classmethod
    def from_bandwidth(cls, m: float, bandwidth: float, f0: float, Tp: float,
                       prf: float = 20e3, q: int = 2) -> "ChirpDriveParams":
        """Build from the drive bandwidth B instead of the chirp rate."""
        return cls(m=m, K=bandwidth / Tp, f0=f0, Tp=Tp, prf=prf, q=q)

    @property
    def bandwidth(self) -> float:
        """Drive bandwidth B = K*Tp (Hz)."""
        return self.K * self.Tp

    @property
    def optical_rate(self) -> float:
        """Chirp rate gamma = q*K of the selected order (Hz/s)."""
        return self.q * self.K

    @property
    def optical_bandwidth(self) -> float:
        return abs(self.q) * self.bandwidth

    @property
    def optical_offset(self) -> float:
        """Center offset q*f0 of the selected order (Hz)."""
        return self.q * self.f0

    def order_band(self, n: int) -> Tuple[float, float]:
        """Frequency span of sideband order n (Hz)."""
        half = abs(n) * self.bandwidth / 2
        return n * self.f0 - half, n * self.f0 + half

    def passband(self, guard_fraction: float = 0.2) -> Tuple[float, float]:
        """Order-q band widened by guard_fraction * B on each side."""
        lo, hi = self.order_band(self.q)
        guard = guard_fraction * self.bandwidth
        return lo - guard, hi + guard


@dataclass(frozen=True, eq=False)
class SidebandTable:
    """
    Jacobi-Anger decomposition exp(j m cos psi) = sum_n j^n J_n(m) exp(j n psi).

    Attributes:
        m: Modulation index the table was built for
        orders: Orders -N..N
        coefficients: j^n J_n(m) per order
        offsets: Center offsets n*f0 (Hz)
        chirp_rates: n*K (Hz/s)
        power_fractions: J_n(m)^2 per order
    """

    m: float
    orders: np.ndarray
    coefficients: np.ndarray
    offsets: np.ndarray
    chirp_rates: np.ndarray
    power_fractions: np.ndarray

    @property
    def total_power(self) -> float:
        return float(np.sum(self.power_fractions))

    def share(self, orders: List[int]) -> float:
        """Power share held by the listed orders."""
        return float(np.sum(self.power_fractions[np.isin(self.orders, orders)]))

    @property
    def core_share(self) -> float:
        """Share of orders {0, +2, -2}, the even-order approximation."""
        return self.share([0, 2, -2])

    @property
    def odd_share(self) -> float:
        return float(np.sum(self.power_fractions[self.orders % 2 == 1]))

    def cumulative_share(self, max_order: int) -> float:
        return float(np.sum(self.power_fractions[np.abs(self.orders) <= max_order]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "order": self.orders,
            "coefficient_re": self.coefficients.real,
            "coefficient_im": self.coefficients.imag,
            "offset_hz": self.offsets,
            "chirp_rate_hz_per_s": self.chirp_rates,
            "power_fraction": self.power_fractions,
        })


@dataclass(frozen=True)
class FilterFeasibilityReport:
    """
    Optical filter feasibility.

    Attributes:
        delta_f0: Minimum filter spacing c*dlambda/(lambda1*lambda2) (Hz)
        required_interval: delta_f0 + K*Tp (Hz)
        modulator_bandwidth: Available modulator bandwidth (Hz)
        feasible: modulator_bandwidth >= required_interval
        separation_limit: 2*f0 + K*Tp, the spacing the filter interval has to stay below (Hz)
        separation_ok: delta_f0 < separation_limit
        overlapping_orders: Orders whose band intersects the order-q passband
    """

    delta_f0: float
    required_interval: float
    modulator_bandwidth: float
    feasible: bool
    separation_limit: float
    separation_ok: bool
    overlapping_orders: Tuple[int, ...] = field(default_factory=tuple)

    def as_dict(self) -> Dict[str, object]:
        return {
            "delta_f0_hz": self.delta_f0,
            "required_interval_hz": self.required_interval,
            "modulator_bandwidth_hz": self.modulator_bandwidth,
            "feasible": self.feasible,
            "separation_limit_hz": self.separation_limit,
            "separation_ok": self.separation_ok,
            "overlapping_orders": list(self.overlapping_orders),
        }

    def to_text(self) -> str:
        lines = [
            f"filter spacing       c*dlambda/(l1*l2) = {self.delta_f0 / 1e9:.4f} GHz",
            f"required interval    delta_f0 + K*Tp   = {self.required_interval / 1e9:.4f} GHz",
            f"modulator bandwidth                    = {self.modulator_bandwidth / 1e9:.4f} GHz",
            f"feasible                               = {'yes' if self.feasible else 'no'}",
            f"separation limit     2*f0 + K*Tp       = {self.separation_limit / 1e9:.4f} GHz",
            f"separation satisfied                   = {'yes' if self.separation_ok else 'no'}",
            f"orders inside passband                 = {list(self.overlapping_orders) or 'none'}",
        ]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ChirpLinearity:
    """Instantaneous-frequency fit of a selected order over the central part of the pulse."""

    slope: float
    intercept: float
    rms_deviation: float
    relative_rms: float
    phase_residual_std: float
    mean_amplitude: float

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


def awg_drive_phase(p: ChirpDriveParams, grid: TimeGrid) -> PhaseTrack:
    """Drive phase phi1(t) = 2*pi*f0*t + pi*K*t^2 on the pulse grid."""
    t = grid.times
    return PhaseTrack(grid, 2 * np.pi * p.f0 * t + np.pi * p.K * t ** 2)


def phase_modulate(drive: PhaseTrack, laser: PhaseTrack, m: float) -> ComplexEnvelope:
    """
    Electro-optic phase modulation of the laser field.

    Args:
        drive: AWG drive phase phi1(t)
        laser: Laser phase-noise track phi2(t)
        m: Modulation index (rad)

    Returns:
        Unit-magnitude field exp(j*(m*cos(phi1) + phi2))

    Raises:
        ValueError: If the two tracks are on different grids
    """
    if drive.grid != laser.grid:
        raise ValueError("drive and laser tracks are on different grids")
    carrier = ComplexEnvelope(drive.grid, np.exp(1j * m * np.cos(drive.phase)))
    return apply_phase(carrier, laser)


def sideband_table(m: float, p: ChirpDriveParams, max_order: int = 5) -> SidebandTable:
    """
    Exact sideband table for orders -max_order..max_order.

    Raises:
        ValueError: If max_order < 2
    """
    if max_order < 2:
        raise ValueError("max_order must be at least 2")
    orders = np.arange(-max_order, max_order + 1)
    bessel = special.jv(orders, m)
    return SidebandTable(
        m=m,
        orders=orders,
        coefficients=np.array([1, 1j, -1, -1j])[orders % 4] * bessel,
        offsets=orders * p.f0,
        chirp_rates=orders * p.K,
        power_fractions=bessel ** 2,
    )


def measure_sideband_powers(env: ComplexEnvelope, p: ChirpDriveParams, max_order: int = 5) -> Dict[int, float]:
    """
    FFT band-integrated power share per order.

    Each order owns the cell [n*f0 - f0/2, n*f0 + f0/2); shares are normalized by the
    envelope energy. Only meaningful when the order bands do not overlap.
    """
    if p.f0 <= 0:
        raise ValueError("sideband cells need a positive drive offset")
    spec = spectrum(env)
    total = spec.energy
    return {
        n: band_energy(spec, n * p.f0 - p.f0 / 2, n * p.f0 + p.f0 / 2) / total
        for n in range(-max_order, max_order + 1)
    }


def cyclic_drive(m: float, num_samples: int, sample_rate: float = 16e9) -> Tuple[ChirpDriveParams, TimeGrid]:
    """
    Drive and centered grid for the sideband power cross-check.

    f0 = fs/16 and B = fs/800 give an integer number of offset cycles per window, so the
    periodic transform sees no phase jump at the wrap.
    """
    tp = num_samples / sample_rate
    p = ChirpDriveParams.from_bandwidth(m=m, bandwidth=sample_rate / 800, f0=sample_rate / 16, Tp=tp)
    return p, TimeGrid(sample_rate=sample_rate, num_samples=num_samples, t_start=-tp / 2)


def synthesize_sidebands(table: SidebandTable, drive: PhaseTrack) -> ComplexEnvelope:
    """Truncated series sum_n j^n J_n(m) exp(j*n*phi1) on the drive grid."""
    values = np.zeros(drive.grid.num_samples, dtype=complex)
    for n, coefficient in zip(table.orders, table.coefficients):
        values += coefficient * np.exp(1j * n * drive.phase)
    return ComplexEnvelope(drive.grid, values)


def compare_sideband_powers(env: ComplexEnvelope, drive: PhaseTrack, p: ChirpDriveParams,
                            max_order: int = 5, series_order: int = 20) -> pd.DataFrame:
    """
    Per-order FFT cell powers of a modulated field against the analytic series.

    The series is synthesized on the same grid and measured through the same cells, so
    cell leakage is common to both and `relative_error` isolates the modulator itself.
    `bessel_gap` is the remaining relative gap between a cell and J_n(m)^2.

    Args:
        env: Output of phase_modulate with an ideal laser
        drive: Drive phase used to build env
        p: Drive parameters
        max_order: Orders reported, -max_order..max_order
        series_order: Truncation of the reference series

    Returns:
        DataFrame with order, bessel_power, measured_fraction, series_fraction,
        relative_error and bessel_gap
    """
    table = sideband_table(p.m, p, max_order)
    series = synthesize_sidebands(sideband_table(p.m, p, max(series_order, max_order)), drive)
    measured = measure_sideband_powers(env, p, max_order)
    reference = measure_sideband_powers(series, p, max_order)

    frame = pd.DataFrame({
        "order": table.orders,
        "bessel_power": table.power_fractions,
        "measured_fraction": [measured[int(n)] for n in table.orders],
        "series_fraction": [reference[int(n)] for n in table.orders],
    })
    frame["relative_error"] = (frame["measured_fraction"] - frame["series_fraction"]).abs() / frame["series_fraction"]
    frame["bessel_gap"] = (frame["measured_fraction"] - frame["bessel_power"]).abs() / frame["bessel_power"]
    return frame


def overlapping_orders(p: ChirpDriveParams, guard_fraction: float = 0.2,
                       sample_rate: Optional[float] = None, max_order: int = 12) -> List[int]:
    """
    Orders other than q whose band intersects the order-q passband.

    With a sample_rate the bands are folded modulo the sample rate, which catches
    orders that alias into the passband of a sampled simulation.
    """
    lo, hi = p.passband(guard_fraction)
    hits = []
    for n in range(-max_order, max_order + 1):
        if n == p.q or special.jv(n, p.m) ** 2 < NEGLIGIBLE_ORDER_POWER:
            continue
        band_lo, band_hi = p.order_band(n)
        shifts = [0.0]
        if sample_rate:
            k_max = int(np.ceil(max(abs(band_lo), abs(band_hi)) / sample_rate)) + 1
            shifts = [k * sample_rate for k in range(-k_max, k_max + 1)]
        if any(band_lo + s < hi and band_hi + s > lo for s in shifts):
            hits.append(n)
    return hits


def select_order(env: ComplexEnvelope, p: ChirpDriveParams, guard_fraction: float = 0.2,
                 rolloff: float = 0.0) -> ComplexEnvelope:
    """
    Optical filter around sideband order q.

    Args:
        env: Modulated field
        p: Drive parameters; q picks the order
        guard_fraction: Guard band on each side, as a fraction of B
        rolloff: Raised-cosine edge width (Hz); 0 gives an ideal filter

    Returns:
        The order-q chirp, approximately j^q J_q(m) exp(j*q*phi1(t)) exp(j*phi2(t))

    Raises:
        ValueError: If the passband is not representable at the grid's sample rate
    """
    lo, hi = p.passband(guard_fraction)
    nyquist = env.grid.sample_rate / 2
    if lo < -nyquist or hi > nyquist:
        raise ValueError(
            f"order {p.q} passband [{lo / 1e9:.3f}, {hi / 1e9:.3f}] GHz needs a sample rate above {2 * max(abs(lo), abs(hi)) / 1e9:.3f} GHz"
        )
    overlaps = overlapping_orders(p, guard_fraction, env.grid.sample_rate)
    if overlaps:
        logger.warning(f"Orders {overlaps} fall inside the order-{p.q} passband; the filtered chirp is contaminated")
    return bandpass(env, lo, hi, rolloff)


def filter_feasibility(delta_lambda: float, lambda1: float, lambda2: float, p: ChirpDriveParams,
                       modulator_bw: float, guard_fraction: float = 0.2) -> FilterFeasibilityReport:
    """
    Check whether the optical filter and the modulator can isolate order q.

    Args:
        delta_lambda: Filter bandwidth interval (m)
        lambda1: First wavelength (m)
        lambda2: Second wavelength (m)
        p: Drive parameters
        modulator_bw: Modulator bandwidth (Hz)
        guard_fraction: Guard band used for the overlap search

    Returns:
        FilterFeasibilityReport
    """
    if min(delta_lambda, lambda1, lambda2, modulator_bw) <= 0:
        raise ValueError("filter feasibility inputs must be positive")
    delta_f0 = constants.c * delta_lambda / (lambda1 * lambda2)
    required = delta_f0 + p.bandwidth
    separation_limit = 2 * p.f0 + p.bandwidth
    return FilterFeasibilityReport(
        delta_f0=delta_f0,
        required_interval=required,
        modulator_bandwidth=modulator_bw,
        feasible=modulator_bw >= required,
        separation_limit=separation_limit,
        separation_ok=delta_f0 < separation_limit,
        overlapping_orders=tuple(overlapping_orders(p, guard_fraction)),
    )


def edfa_amplify(env: ComplexEnvelope, gain: float) -> ComplexEnvelope:
    """
    Ideal amplifier: scale the field amplitude by `gain`, no added noise.

    Raises:
        ValueError: If gain is not positive
    """
    if gain <= 0:
        raise ValueError(f"EDFA amplitude gain must be positive, got {gain}")
    if gain == 1:
        return env
    return env.with_samples(env.samples * gain)


def chirp_linearity(env: ComplexEnvelope, p: ChirpDriveParams, central_fraction: float = 0.9) -> ChirpLinearity:
    """
    Fit a line to the instantaneous frequency of a selected order.

    Args:
        env: Output of select_order
        p: Drive parameters used to build it
        central_fraction: Share of the pulse, centered, used for the fit

    Returns:
        ChirpLinearity with the fitted slope and intercept, the RMS deviation (absolute and
        relative to |q|*B) and the std of unwrapped phase minus q*phi1(t)
    """
    n = env.grid.num_samples
    margin = int(round(n * (1 - central_fraction) / 2))
    central = slice(margin, n - margin)
    t = env.grid.times[central]

    inst = instantaneous_frequency(ComplexEnvelope(
        TimeGrid(env.grid.sample_rate, t.size, t[0]), env.samples[central]
    ))
    slope, intercept = np.polyfit(t, inst, 1)
    rms = float(np.sqrt(np.mean((inst - (slope * t + intercept)) ** 2)))

    drive = 2 * np.pi * p.f0 * t + np.pi * p.K * t ** 2
    residual = np.unwrap(np.angle(env.samples[central])) - p.q * drive
    return ChirpLinearity(
        slope=float(slope),
        intercept=float(intercept),
        rms_deviation=rms,
        relative_rms=rms / p.optical_bandwidth,
        phase_residual_std=float(np.std(residual)),
        mean_amplitude=float(np.mean(np.abs(env.samples[central]))),
    )


class TransmitChain:
    """
    Laser -> AWG drive -> phase modulator -> optical filter -> EDFA.

    Attributes:
        drive (ChirpDriveParams): Drive and order selection
        laser (LaserParams): Laser noise model
        guard_fraction (float): Filter guard band as a fraction of B
        rolloff (float): Filter edge width (Hz)
        edfa_gain (float): EDFA amplitude gain
    """

    def __init__(self, drive: ChirpDriveParams, laser: LaserParams, guard_fraction: float = 0.2,
                 rolloff: float = 0.0, edfa_gain: float = 1.0):
        self.drive = drive
        self.laser = laser
        self.guard_fraction = guard_fraction
        self.rolloff = rolloff
        self.edfa_gain = edfa_gain
        self._template: Dict[TimeGrid, ComplexEnvelope] = {}
        logger.info(f"Initialized TransmitChain (m={drive.m}, B={drive.bandwidth / 1e9:.3f} GHz, q={drive.q})")

    def modulate(self, grid: TimeGrid, pulse_index: int = 0) -> ComplexEnvelope:
        """Phase-modulated field before filtering."""
        laser_track = synthesize_phase(self.laser.for_pulse(pulse_index), grid)
        return phase_modulate(awg_drive_phase(self.drive, grid), laser_track, self.drive.m)

    def transmit(self, grid: TimeGrid, pulse_index: int = 0) -> ComplexEnvelope:
        """
        Filtered, amplified transmit envelope for one pulse.

        With an ideal laser every pulse is identical and the first result is reused.
        """
        if self.laser.is_ideal and grid in self._template:
            return self._template[grid]
        field_out = select_order(self.modulate(grid, pulse_index), self.drive, self.guard_fraction, self.rolloff)
        field_out = edfa_amplify(field_out, self.edfa_gain)
        if self.laser.is_ideal:
            self._template[grid] = field_out
        return field_out
