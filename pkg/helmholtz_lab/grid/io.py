"""
WaveField serialization.

Binary layout: one header record followed by the node values in row-major order.

| field  | type   | meaning                                 |
|--------|--------|-----------------------------------------|
| magic  | S8     | b"HLABWAVE"                             |
| d      | <i4    | dimension                               |
| n      | <i4    | points per axis                         |
| l      | <f8    | half width                              |
| double | <i4    | 1 for complex128 values, 0 for complex64 |
"""

from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from helmholtz_lab.grid.grid import Grid, WaveField

MAGIC = b"HLABWAVE"
HEADER_DTYPE = np.dtype([("magic", "S8"), ("d", "<i4"), ("n", "<i4"), ("l", "<f8"), ("double", "<i4")])


def save_wavefield(path: Union[str, Path], field: WaveField, double: bool = True) -> Path:
    path = Path(path)
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["d"] = field.grid.dimension
    header["n"] = field.grid.points_per_axis
    header["l"] = field.grid.half_width
    header["double"] = int(double)

    values = field.values.astype("<c16" if double else "<c8")
    with open(path, "wb") as handle:
        handle.write(header.tobytes())
        handle.write(values.tobytes(order="C"))
    return path


def load_wavefield(path: Union[str, Path]) -> WaveField:
    raw = Path(path).read_bytes()
    header = np.frombuffer(raw[: HEADER_DTYPE.itemsize], dtype=HEADER_DTYPE)[0]
    if header["magic"] != MAGIC:
        raise ValueError(f"{path} is not a wave field file")

    grid = Grid(dimension=int(header["d"]), half_width=float(header["l"]), points_per_axis=int(header["n"]))
    dtype = "<c16" if int(header["double"]) else "<c8"
    values = np.frombuffer(raw[HEADER_DTYPE.itemsize :], dtype=dtype)
    if values.shape[0] != grid.num_nodes:
        raise ValueError(f"{path} holds {values.shape[0]} values, expected {grid.num_nodes}")
    return WaveField(values.astype(np.complex128), grid)


def wavefield_frame(field: WaveField) -> pd.DataFrame:
    """One row per node: x1..xd, re, im."""
    columns = {f"x{k + 1}": field.grid.points[:, k] for k in range(field.grid.dimension)}
    columns["re"] = field.values.real
    columns["im"] = field.values.imag
    return pd.DataFrame(columns)


def export_wavefield_csv(path: Union[str, Path], field: WaveField) -> Path:
    path = Path(path)
    wavefield_frame(field).to_csv(path, index=False, float_format="%.17g")
    return path
