"""
Artifact writers of the command line: CSV tables, gnuplot-ready `.dat` columns and the run manifest.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
MANIFEST_NAME = "manifest.json"


def tool_version() -> str:
    try:
        return version("helmholtz-lab")
    except PackageNotFoundError:
        return "0+unknown"


def config_hash(payload: Union[str, bytes, Dict[str, Any]]) -> str:
    """sha256 of raw config text, or of a parameter snapshot serialized with sorted keys."""
    if isinstance(payload, dict):
        payload = json.dumps(payload, sort_keys=True, default=str)
    if isinstance(payload, str):
        payload = payload.encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def write_csv(path: Union[str, Path], frame: pd.DataFrame) -> Path:
    path = Path(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_dat(path: Union[str, Path], columns: Dict[str, Sequence[float]], comment: Optional[str] = None) -> Path:
    """Whitespace-separated columns with a `#` header line, readable by gnuplot's `using 1:2`."""
    path = Path(path)
    names = list(columns)
    data = np.column_stack([np.asarray(columns[name], dtype=np.float64) for name in names])
    header = " ".join(names) if comment is None else f"{comment}\n{' '.join(names)}"
    np.savetxt(path, data, fmt="%.17g", header=header, comments="# ")
    return path


@dataclass
class RunManifest:
    """
    Record of one command-line run, written as `manifest.json` next to its artifacts.
    """

    subcommand: str
    config_hash: str
    parameters: Dict[str, Any]
    artifacts: List[str] = field(default_factory=list)
    wall_time: float = 0.0
    tool_version: str = field(default_factory=tool_version)
    dry_run: bool = False

    def add(self, path: Path) -> Path:
        self.artifacts.append(Path(path).name)
        return path

    def write(self, out_dir: Union[str, Path]) -> Path:
        path = Path(out_dir) / MANIFEST_NAME
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=str), encoding="utf-8")
        logger.info(f"Wrote manifest {path} ({len(self.artifacts)} artifacts)")
        return path
