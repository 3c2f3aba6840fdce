"""
app/modules/jones_bench.py

Free-space polarization I/Q receiver in Jones calculus: PBS transmit/reflect matrices,
quarter- and half-wave plates, the four optical paths and the two balanced detectors.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from app.errors import PolarizationError
from app.modules.signal_core import TimeGrid

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

SQRT_HALF = np.sqrt(0.5)

# Relative tolerance for the launch-state checks in propagate()
POLARIZATION_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class JonesMatrix:
    """2x2 complex polarization operator."""

    m: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=np.complex128)
        if m.shape != (2, 2):
            raise ValueError(f"a Jones matrix is 2x2, got {m.shape}")
        object.__setattr__(self, "m", m)

    def __matmul__(self, other):
        if isinstance(other, JonesMatrix):
            return JonesMatrix(self.m @ other.m)
        if isinstance(other, JonesField):
            return other.transformed(self)
        return NotImplemented

    @property
    def dagger(self) -> "JonesMatrix":
        return JonesMatrix(self.m.conj().T)

    def is_unitary(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.m.conj().T @ self.m, np.eye(2), rtol=0, atol=atol))


def _mix(a: complex, x: np.ndarray, b: complex, y: np.ndarray) -> np.ndarray:
    # a*x + b*y without touching the arrays that a zero coefficient removes
    if a == 0 and b == 0:
        return np.zeros_like(x)
    if b == 0:
        return a * x
    if a == 0:
        return b * y
    return a * x + b * y


@dataclass(frozen=True, eq=False)
class JonesField:
    """
    Two-component field sampled on a shared grid.

    Attributes:
        horizontal: Horizontal component samples
        vertical: Vertical component samples
        grid: Shared sampling grid
    """

    horizontal: np.ndarray
    vertical: np.ndarray
    grid: TimeGrid

    def __post_init__(self) -> None:
        h = np.asarray(self.horizontal, dtype=np.complex128)
        v = np.asarray(self.vertical, dtype=np.complex128)
        if h.shape != (self.grid.num_samples,) or v.shape != h.shape:
            raise ValueError("Jones field components must match the grid")
        object.__setattr__(self, "horizontal", h)
        object.__setattr__(self, "vertical", v)

    @classmethod
    def linear45(cls, s: np.ndarray, grid: TimeGrid) -> "JonesField":
        """45-degree linear field [s, s]/sqrt(2) carrying total power |s|^2."""
        component = np.asarray(s, dtype=np.complex128) * SQRT_HALF
        return cls(component, component.copy(), grid)

    @classmethod
    def horizontal_only(cls, w: np.ndarray, grid: TimeGrid) -> "JonesField":
        w = np.asarray(w, dtype=np.complex128)
        return cls(w, np.zeros_like(w), grid)

    def transformed(self, matrix: JonesMatrix) -> "JonesField":
        (m00, m01), (m10, m11) = matrix.m
        return JonesField(
            _mix(m00, self.horizontal, m01, self.vertical),
            _mix(m10, self.horizontal, m11, self.vertical),
            self.grid,
        )

    def __add__(self, other: "JonesField") -> "JonesField":
        if self.grid != other.grid:
            raise ValueError("cannot add Jones fields on different grids")
        return JonesField(self.horizontal + other.horizontal, self.vertical + other.vertical, self.grid)

    def slice(self, start: int, stop: int) -> "JonesField":
        grid = TimeGrid(self.grid.sample_rate, stop - start, self.grid.t_start + start * self.grid.dt)
        return JonesField(self.horizontal[start:stop], self.vertical[start:stop], grid)

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.horizontal) ** 2 + np.abs(self.vertical) ** 2

    @property
    def energy(self) -> float:
        return float(np.sum(self.power) * self.grid.dt)


@dataclass(frozen=True)
class BenchParams:
    """
    Receiver settings.

    Attributes:
        t_amp: PBS transmit amplitude; defaults to sqrt(2)/2 * (1 - sigma)
        r_amp: PBS reflect amplitude; defaults to sqrt(2)/2 * (1 - sigma)
        sigma: PBS loss
        phi_t: PBS transmit phase (rad)
        phi_r: PBS reflect phase (rad)
        eta: Quarter-wave plate angle (rad)
        theta1: Half-wave plate angle in the I arm (rad)
        theta2: Half-wave plate angle in the Q arm (rad)
        normalized: Lossless element forms; False reproduces the published algebra
    """

    t_amp: Optional[float] = None
    r_amp: Optional[float] = None
    sigma: float = 0.0
    phi_t: float = np.pi
    phi_r: float = np.pi
    eta: float = np.pi / 4
    theta1: float = np.pi / 8
    theta2: float = np.pi / 8
    normalized: bool = True

    def __post_init__(self) -> None:
        if not 0 <= self.sigma < 1:
            raise ValueError(f"PBS loss sigma must lie in [0, 1), got {self.sigma}")
        default = SQRT_HALF * (1 - self.sigma)
        for name in ("t_amp", "r_amp"):
            value = getattr(self, name)
            if value is None:
                object.__setattr__(self, name, default)
            elif not 0 < value <= 1:
                raise ValueError(f"{name} must lie in (0, 1], got {value}")


@dataclass(frozen=True, eq=False)
class IQStream:
    """Balanced-detector photocurrents (arbitrary units) on a shared grid."""

    i_samples: np.ndarray
    q_samples: np.ndarray
    grid: TimeGrid

    def __post_init__(self) -> None:
        i = np.asarray(self.i_samples, dtype=np.float64)
        q = np.asarray(self.q_samples, dtype=np.float64)
        if i.shape != (self.grid.num_samples,) or q.shape != i.shape:
            raise ValueError("I and Q must match the grid")
        if not (np.all(np.isfinite(i)) and np.all(np.isfinite(q))):
            raise ValueError("I/Q samples must be finite")
        object.__setattr__(self, "i_samples", i)
        object.__setattr__(self, "q_samples", q)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"t": self.grid.times, "i": self.i_samples, "q": self.q_samples})


def pbs_matrices(p: BenchParams) -> Tuple[JonesMatrix, JonesMatrix]:
    """
    Transmit and reflect matrices shared by all three PBS instances.

    T passes only the horizontal component and R only the vertical one. In normalized
    mode t and r are read as the 50:50 amplitude split of a 45-degree beam, so each
    polarization sees sqrt(2)*t and the splitter is lossless at sigma = 0.
    """
    scale = np.sqrt(2) if p.normalized else 1.0
    T = JonesMatrix([[scale * p.t_amp * np.exp(1j * p.phi_t), 0], [0, 0]])
    R = JonesMatrix([[0, 0], [0, scale * p.r_amp * np.exp(1j * p.phi_r)]])
    return T, R


def qwp(eta: float, normalized: bool = True) -> JonesMatrix:
    """
    Quarter-wave plate at angle eta.

    The published matrix [[1 - j cos2eta, -j sin2eta], [-j sin2eta, 1 + j cos2eta]] is
    divided by sqrt(2) when normalized, which makes it unitary.
    """
    c, s = np.cos(2 * eta), np.sin(2 * eta)
    matrix = np.array([[1 - 1j * c, -1j * s], [-1j * s, 1 + 1j * c]])
    return JonesMatrix(matrix * SQRT_HALF if normalized else matrix)


def hwp(theta: float) -> JonesMatrix:
    """Half-wave plate [[cos2theta, sin2theta], [sin2theta, -cos2theta]]."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return JonesMatrix([[c, s], [s, -c]])


def _check_launch_states(signal: JonesField, reference: JonesField) -> None:
    if signal.grid != reference.grid:
        raise PolarizationError("signal and reference fields are on different grids")
    scale = max(1.0, float(np.max(np.abs(signal.horizontal), initial=0.0)))
    if np.max(np.abs(signal.horizontal - signal.vertical), initial=0.0) > POLARIZATION_TOLERANCE * scale:
        raise PolarizationError("the receiver model needs a 45-degree linear signal [s, s]")
    scale = max(1.0, float(np.max(np.abs(reference.horizontal), initial=0.0)))
    if np.max(np.abs(reference.vertical), initial=0.0) > POLARIZATION_TOLERANCE * scale:
        raise PolarizationError("the receiver model needs a horizontal reference [w, 0]")


def propagate(signal: JonesField, reference: JonesField,
              p: BenchParams) -> Tuple[JonesField, JonesField, JonesField, JonesField]:
    """
    Fields at the four detector inputs.

    L1 = R H1 T QW + R H1 R S, L2 = T H1 T QW + T H1 R S,
    L3 = T H2 R QW + T H2 T S, L4 = R H2 R QW + R H2 T S.

    Args:
        signal: 45-degree linear echo field
        reference: Horizontal reference field
        p: Bench parameters

    Returns:
        (l1, l2, l3, l4)

    Raises:
        PolarizationError: If either input is not in its assumed launch state
    """
    _check_launch_states(signal, reference)
    T, R = pbs_matrices(p)
    qw = qwp(p.eta, p.normalized) @ reference

    arm_i = hwp(p.theta1) @ ((T @ qw) + (R @ signal))
    arm_q = hwp(p.theta2) @ ((R @ qw) + (T @ signal))
    return R @ arm_i, T @ arm_i, T @ arm_q, R @ arm_q


def closed_form_paths(s: np.ndarray, w: np.ndarray, p: BenchParams) -> Tuple[np.ndarray, ...]:
    """
    Scalar path outputs for the default plate angles (eta = pi/4, theta = pi/8).

    Args:
        s: Per-component signal amplitude (the signal field is [s, s])
        w: Reference amplitude (the reference field is [w, 0])
        p: Bench parameters

    Returns:
        (l1, l2, l3, l4), each path's only non-zero component

    Raises:
        ValueError: For plate angles the closed forms were not derived for
    """
    if not (np.isclose(p.eta, np.pi / 4) and np.isclose(p.theta1, np.pi / 8) and np.isclose(p.theta2, np.pi / 8)):
        raise ValueError("closed forms hold only for eta = pi/4 and theta1 = theta2 = pi/8")
    scale = np.sqrt(2) if p.normalized else 1.0
    a = scale * p.t_amp * np.exp(1j * p.phi_t)
    b = scale * p.r_amp * np.exp(1j * p.phi_r)
    wq = w * (SQRT_HALF if p.normalized else 1.0)
    l1 = b * (a * wq - b * s) * SQRT_HALF
    l2 = a * (a * wq + b * s) * SQRT_HALF
    l3 = a * (a * s - 1j * b * wq) * SQRT_HALF
    l4 = b * (a * s + 1j * b * wq) * SQRT_HALF
    return l1, l2, l3, l4


def balanced_detect(l1: JonesField, l2: JonesField, l3: JonesField, l4: JonesField) -> IQStream:
    """
    Two balanced detectors: I = |l2|^2 - |l1|^2, Q = |l3|^2 - |l4|^2.

    Self-beat terms cancel, leaving the signal x reference cross term; with the default
    bench I + jQ equals w * conj(s).
    """
    grid = l1.grid
    if not (l2.grid == grid and l3.grid == grid and l4.grid == grid):
        raise ValueError("detector inputs are on different grids")
    return IQStream(l2.power - l1.power, l3.power - l4.power, grid)


class Receiver:
    """
    Polarization receiver that runs propagate + balanced_detect in fast-time chunks.

    Attributes:
        params (BenchParams): Bench settings
        chunk_size (int): Samples per chunk; bounds the working memory on long pulses
    """

    def __init__(self, params: BenchParams, chunk_size: int = 1 << 20):
        self.params = params
        self.chunk_size = chunk_size
        logger.info(f"Initialized Receiver (normalized={params.normalized}, sigma={params.sigma})")

    def detect(self, signal: JonesField, reference: JonesField) -> IQStream:
        """I/Q photocurrents for one pulse."""
        n = signal.grid.num_samples
        i_out = np.empty(n)
        q_out = np.empty(n)
        for start in range(0, n, self.chunk_size):
            stop = min(start + self.chunk_size, n)
            iq = balanced_detect(*propagate(signal.slice(start, stop), reference.slice(start, stop), self.params))
            i_out[start:stop] = iq.i_samples
            q_out[start:stop] = iq.q_samples
        return IQStream(i_out, q_out, signal.grid)
