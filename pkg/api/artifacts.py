"""
api/artifacts.py

Artifact writers for simulator runs: complex traces as CSV or little-endian binary with
JSON sidecars, image grids as float32 binary with an axes manifest, and tables as CSV.
All files go into a staging directory that is published only when the run succeeds.
"""

import logging
import shutil
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from app.modules.dechirp_imager import SalImage
from app.modules.signal_core import ComplexEnvelope, Spectrum
from utils.helpers import dumps_json

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


class ArtifactWriter:
    """
    Single writer for one run directory.

    Files are written under a hidden staging directory next to the final one; commit()
    renames it into place and abort() deletes it, so a failed run leaves nothing behind.

    Attributes:
        run_dir (Path): Final run directory
        staging_dir (Path): Directory files are written to until commit()
        fmt (str): Trace format, "csv" or "binary"
        config_hash (str): Hash recorded in every sidecar
        written (List[Path]): Files written so far, relative to the run directory
    """

    def __init__(self, run_dir: Path, fmt: str = "csv", config_hash: str = ""):
        if fmt not in ("csv", "binary"):
            raise ValueError(f"unknown artifact format {fmt!r}")
        self.run_dir = Path(run_dir)
        self.staging_dir = self.run_dir.parent / f".{self.run_dir.name}.staging"
        self.fmt = fmt
        self.config_hash = config_hash
        self.written: List[Path] = []
        if self.staging_dir.exists():
            shutil.rmtree(self.staging_dir)
        self.staging_dir.mkdir(parents=True)
        logger.info(f"Initialized ArtifactWriter for {self.run_dir}")

    def _path(self, name: str) -> Path:
        path = self.staging_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        self.written.append(Path(name))
        return path

    def _sidecar(self, name: str, meta: Dict[str, Any]) -> None:
        meta = {**meta, "config_hash": self.config_hash}
        self._path(name).write_text(dumps_json(meta))

    def write_trace(self, name: str, axis: np.ndarray, values: np.ndarray, axis_unit: str,
                    meta: Dict[str, Any]) -> None:
        """Complex trace as CSV (t_or_f, re, im) or interleaved float64 binary, plus a JSON sidecar."""
        values = np.asarray(values, dtype=np.complex128)
        if self.fmt == "csv":
            frame = pd.DataFrame({"t_or_f": axis, "re": values.real, "im": values.imag})
            frame.to_csv(self._path(f"{name}.csv"), index=False, float_format="%.17g")
        else:
            self._path(f"{name}.bin").write_bytes(values.astype("<c16").tobytes())
        self._sidecar(f"{name}.json", {**meta, "axis_unit": axis_unit, "format": self.fmt,
                                       "num_samples": len(values)})

    def write_envelope(self, name: str, env: ComplexEnvelope, units: str = "sqrt(W)") -> None:
        grid = env.grid
        self.write_trace(name, grid.times, env.samples, "s",
                         {"sample_rate": grid.sample_rate, "t_start": grid.t_start, "units": units})

    def write_spectrum(self, name: str, spec: Spectrum, sample_rate: float, t_start: float) -> None:
        self.write_trace(name, spec.freqs, spec.values, "Hz",
                         {"sample_rate": sample_rate, "t_start": t_start, "units": "sqrt(J/Hz)",
                          "resolution_bw": spec.resolution_bw})

    def write_image(self, name: str, image: SalImage) -> None:
        """Magnitude as little-endian float32 (rows = azimuth) plus an axes manifest."""
        self._path(f"{name}.f32").write_bytes(image.magnitude.astype("<f4").tobytes())
        self._sidecar(f"{name}.json", {
            "shape": list(image.data.shape),
            "dtype": "<f4",
            "azimuth_m": image.azimuth_axis,
            "range_m": image.range_axis,
            "range_origin_m": image.range_origin,
        })

    def write_table(self, name: str, frame: pd.DataFrame) -> None:
        frame.to_csv(self._path(f"{name}.csv"), index=False, float_format="%.10g")

    def write_text(self, name: str, text: str) -> None:
        self._path(name).write_text(text)

    def staged(self, name: str) -> Path:
        return self.staging_dir / name

    def commit(self) -> Path:
        """Publish the staging directory as the run directory."""
        if self.run_dir.exists():
            shutil.rmtree(self.run_dir)
        self.staging_dir.rename(self.run_dir)
        logger.info(f"Wrote {len(self.written)} artifacts to {self.run_dir}")
        return self.run_dir

    def abort(self, reason: Optional[Exception] = None) -> None:
        """Remove every partial artifact."""
        if self.staging_dir.exists():
            shutil.rmtree(self.staging_dir)
        logger.warning(f"Discarded partial artifacts for {self.run_dir}: {reason}")
