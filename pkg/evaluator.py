"""
evaluator.py

Discrepancy ledger: checks published figures of the EOM chirp lidar design against the
values this simulator computes, and renders the comparison as text or a table.
"""

import logging
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional

import numpy as np
import pandas as pd
import yaml
from jinja2 import Environment, FileSystemLoader
from pydantic import BaseModel
from scipy import constants

from app.config import CONFIG_DIR, ExperimentConfig, load_preset
from app.modules.dechirp_imager import data_reduction_report
from app.modules.eom_chain import filter_feasibility, overlapping_orders, sideband_table
from app.modules.jones_bench import (
    BenchParams,
    JonesField,
    balanced_detect,
    closed_form_paths,
    pbs_matrices,
    propagate,
    qwp,
)
from app.modules.signal_core import TimeGrid

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

LEDGER_PATH = CONFIG_DIR / "ledger.yaml"
TEMPLATE_DIR = Path(__file__).resolve().parent / "templates"

# Candidate half-wave plate angles searched for the quadrature setting
HWP_CANDIDATES = [k * np.pi / 16 for k in range(1, 8)]


class LedgerEntry(BaseModel):
    """
    One published figure and its computed counterpart.

    Attributes:
        id: Short identifier
        source: Where the figure is stated
        claim: The statement being checked
        published: The printed value
        unit: Unit of both values
        compute: Name of the DiscrepancyLedger method producing the value
        rel_tol: Relative agreement band (absolute when published is 0)
        relation: "equal" compares the values; "below" requires computed < published
        computed: Value from this build
        verdict: "agrees" or "discrepancy"
    """

    id: str
    source: str
    claim: str
    published: float
    unit: str
    compute: str
    rel_tol: float = 0.02
    relation: Literal["equal", "below"] = "equal"
    computed: Optional[float] = None
    verdict: Optional[str] = None

    def judge(self) -> str:
        if self.computed is None:
            raise ValueError(f"ledger entry {self.id} has not been computed")
        if self.relation == "below":
            ok = self.computed < self.published
        elif self.published == 0:
            ok = abs(self.computed) <= self.rel_tol
        else:
            ok = abs(self.computed - self.published) <= self.rel_tol * abs(self.published)
        return "agrees" if ok else "discrepancy"


class DiscrepancyLedger:
    """
    Evaluates every ledger entry against a reference configuration.

    Attributes:
        config (ExperimentConfig): Parameters the computations use (the table1 preset by default)
        entries (List[LedgerEntry]): Entries loaded from config/ledger.yaml
    """

    def __init__(self, config: Optional[ExperimentConfig] = None, ledger_path: Path = LEDGER_PATH):
        logger.info("Initializing DiscrepancyLedger")
        self.config = config or load_preset("table1")
        with open(ledger_path, "r") as f:
            raw = yaml.safe_load(f)
        self.entries = [LedgerEntry(**item) for item in raw.get("entries", [])]
        self.drive = self.config.drive_params()
        self.geometry = self.config.scene_geometry()

    # Computations, one per `compute` key

    def core_power_share(self) -> float:
        return sideband_table(self.drive.m, self.drive).core_share

    def odd_power_share(self) -> float:
        return sideband_table(self.drive.m, self.drive).odd_share

    def _feasibility(self):
        f = self.config.filter
        return filter_feasibility(f.delta_lambda, f.lambda1, f.lambda2, self.drive,
                                  f.modulator_bandwidth, self.config.chirp.guard_fraction)

    def filter_spacing_ghz(self) -> float:
        return self._feasibility().delta_f0 / 1e9

    def required_interval_ghz(self) -> float:
        return self._feasibility().required_interval / 1e9

    def _reduction(self):
        return data_reduction_report(self.config.dechirp.scene_extent, self.config.dechirp_config(), self.drive)

    def dechirped_bandwidth_mhz(self) -> float:
        return self._reduction().dechirped_bandwidth / 1e6

    def eta_ratio(self) -> float:
        return self._reduction().eta_dr

    def reduction_orders(self) -> float:
        return self._reduction().orders_of_magnitude_saved

    def optical_bandwidth_ghz(self) -> float:
        return self.drive.optical_bandwidth / 1e9

    def order_offset_factor(self) -> float:
        return self.drive.optical_offset / self.drive.f0

    def range_resolution_cm(self) -> float:
        return 100 * constants.c / (2 * self.drive.optical_bandwidth)

    def azimuth_resolution_cm(self) -> float:
        g = self.geometry
        return 100 * 0.886 * g.platform_speed / (g.azimuth_rate() * g.aperture_time)

    def half_aperture_resolution_cm(self) -> float:
        g = self.geometry
        return 100 * g.wavelength * g.standoff_range / (2 * g.footprint)

    def table_overlap_count(self) -> float:
        return float(len(overlapping_orders(self.drive, self.config.chirp.guard_fraction)))

    def qwp_horizontal_magnitude(self) -> float:
        return float(abs(qwp(np.pi / 4, normalized=False).m[0, 0]))

    def qwp_unitarity_defect(self) -> float:
        q = qwp(np.pi / 4, normalized=False).m
        return float(np.max(np.abs(q.conj().T @ q - np.eye(2))))

    def pbs_transmit_corner(self) -> float:
        transmit, _ = pbs_matrices(BenchParams(normalized=False))
        return float(abs(transmit.m[1, 1]))

    def path_amplitude(self) -> float:
        _, l2, _, _ = closed_form_paths(np.array([0.0]), np.array([1.0]), BenchParams())
        return float(abs(l2[0]))

    @staticmethod
    def quadrature_error(theta: float) -> float:
        """Relative misfit of I + jQ to a complex multiple of w * conj(s) at HWP angle theta."""
        grid = TimeGrid(sample_rate=1.0, num_samples=64)
        w = np.exp(2j * np.pi * np.arange(64) / 64)
        s = np.ones(64, dtype=complex)
        bench = BenchParams(theta1=theta, theta2=theta)
        iq = balanced_detect(*propagate(JonesField.linear45(s, grid), JonesField.horizontal_only(w, grid), bench))
        beat = iq.i_samples + 1j * iq.q_samples
        target = w * np.conj(s)
        gain = np.vdot(target, beat) / np.vdot(target, target)
        if abs(gain) < 1e-3:
            return 1.0
        return float(np.linalg.norm(beat - gain * target) / np.linalg.norm(beat))

    def quadrature_hwp_angle(self) -> float:
        for theta in HWP_CANDIDATES:
            if self.quadrature_error(theta) < 1e-9:
                return float(theta)
        return float("nan")

    def evaluate(self) -> List[LedgerEntry]:
        """Compute and judge every entry."""
        results = []
        for entry in self.entries:
            method: Callable[[], float] = getattr(self, entry.compute, None)
            if method is None:
                raise ValueError(f"ledger entry {entry.id} names unknown computation '{entry.compute}'")
            judged = entry.model_copy(update={"computed": float(method())})
            judged.verdict = judged.judge()
            results.append(judged)
        discrepancies = sum(e.verdict == "discrepancy" for e in results)
        logger.info(f"Ledger: {len(results)} entries, {discrepancies} discrepancies")
        return results

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([e.model_dump() for e in self.evaluate()])

    def render(self, template: str = "ledger.txt.j2") -> str:
        env = Environment(loader=FileSystemLoader(TEMPLATE_DIR), trim_blocks=True, lstrip_blocks=True)
        return env.get_template(template).render(entries=self.evaluate(), preset=self.config.preset)


def emit_ledger(config: Optional[ExperimentConfig] = None) -> str:
    """Rendered discrepancy ledger."""
    return DiscrepancyLedger(config).render()


def ledger_summary(entries: List[LedgerEntry]) -> Dict[str, Any]:
    return {
        "entries": len(entries),
        "discrepancies": [e.id for e in entries if e.verdict == "discrepancy"],
    }
