"""
api/manifest.py

Run manifest: configuration hash, seed, every emitted artifact with its checksum, wall
clock and tool version. Written last, into the run directory it describes.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from pydantic import BaseModel, Field

from utils.helpers import dumps_json, safe_json_loads, sha256_file

# Set up logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ArtifactRecord(BaseModel):
    path: str
    sha256: str
    bytes: int = Field(ge=0)


class RunManifest(BaseModel):
    """
    Provenance of one run.

    Attributes:
        config_hash: SHA-256 of the canonical configuration
        seed: Base seed
        preset: Preset name, if the run came from one
        experiment: Experiment that was run
        artifacts: Every emitted file with its checksum
        wall_clock_s: Run time (s)
        version: Tool version
        summary: Headline numbers of the run
        run_dir: Directory the run was published to
    """

    config_hash: str
    seed: int
    preset: Union[str, None] = None
    experiment: str
    artifacts: List[ArtifactRecord] = Field(default_factory=list)
    wall_clock_s: float = 0.0
    version: str
    summary: Dict[str, Any] = Field(default_factory=dict)
    run_dir: str = ""

    def checksums(self) -> Dict[str, str]:
        return {a.path: a.sha256 for a in self.artifacts}


def record_artifacts(root: Path, names: List[Path]) -> List[ArtifactRecord]:
    """Checksum each file under root."""
    records = []
    for name in names:
        path = Path(root) / name
        records.append(ArtifactRecord(path=name.as_posix(), sha256=sha256_file(path), bytes=path.stat().st_size))
    return records


def write_manifest(root: Path, manifest: RunManifest) -> Path:
    path = Path(root) / MANIFEST_NAME
    path.write_text(dumps_json(manifest.model_dump(mode="json")))
    return path


def read_manifest(run_dir: Union[str, Path]) -> RunManifest:
    """Load the manifest of a finished run."""
    text = (Path(run_dir) / MANIFEST_NAME).read_text()
    return RunManifest.model_validate(safe_json_loads(text))
