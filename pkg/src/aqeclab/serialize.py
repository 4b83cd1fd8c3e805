"""CSV/JSON emission helpers shared by result types and the experiment runner.

CSV format: comma separated, ``.`` decimal point, LF line endings, one header
row preceded by a units annotation comment.  Floats are written with %.12g so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Union

import numpy as np

PathLike = Union[str, Path]


def format_float(x: float) -> str:
    return f"{float(x):.12g}"


def write_csv(path: PathLike, columns: Mapping[str, np.ndarray], units: str = "arbitrary") -> None:
    names = list(columns)
    if not names:
        raise ValueError("need at least one column")
    arrays = [np.asarray(columns[n]) for n in names]
    length = arrays[0].shape[0]
    for n, arr in zip(names, arrays):
        if arr.ndim != 1 or arr.shape[0] != length:
            raise ValueError(f"column {n!r} must be 1-d of length {length}")
    lines = [f"# units: {units}", ",".join(names)]
    for i in range(length):
        lines.append(",".join(format_float(arr[i]) for arr in arrays))
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_csv(path: PathLike) -> dict[str, np.ndarray]:
    text = Path(path).read_text()
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    names = rows[0].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in rows[1:]])
    if data.size == 0:
        return {n: np.array([]) for n in names}
    return {n: data[:, i] for i, n in enumerate(names)}


def write_json(path: PathLike, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=False) + "\n")
