"""
utils/helpers.py
Utility functions for hashing artifacts, JSON conversion of numpy values and run
directory naming. These helpers support the artifact writers and the evaluation scripts.
"""

import hashlib
import json
from datetime import datetime
from pathlib import Path
from typing import Any, Union

import numpy as np


def sha256_file(path: Union[str, Path], chunk_size: int = 1 << 20) -> str:
    """
    SHA-256 hex digest of a file, read in chunks.

    Args:
        path (Union[str, Path]): File to hash
        chunk_size (int): Bytes read per step

    Returns:
        str: Hex digest
    """
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(chunk_size), b""):
            digest.update(block)
    return digest.hexdigest()


def numpy_converter(obj):
    """
    Custom JSON serializer for numpy scalars, arrays and complex numbers.

    Used as the 'default' parameter in json.dumps().

    Raises:
        TypeError: If the object has no JSON form
    """
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (set, tuple)):
        return list(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps_json(obj: Any) -> str:
    """Stable, indented JSON text."""
    return json.dumps(obj, indent=2, sort_keys=True, default=numpy_converter) + "\n"


def safe_json_loads(json_str: str, default_value: Any = None) -> Any:
    """
    Safely parse a JSON string with a fallback default value on error.

    Returns:
        Any: Parsed JSON object, or default_value (an empty dict when None) on failure
    """
    try:
        return json.loads(json_str)
    except json.JSONDecodeError:
        return default_value if default_value is not None else {}


def timestamped_dir(root: Union[str, Path], prefix: str) -> Path:
    """Path root/<prefix>_<YYYYmmdd_HHMMSS>; not created."""
    timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
    return Path(root) / f"{prefix}_{timestamp}"
