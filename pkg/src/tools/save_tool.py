# src/tools/save_tool.py
import csv
import json
import math
import os
from typing import Any, Iterable, Sequence

import numpy as np
from langfuse import observe

from oracle.quantization import OperatorMatrix

SCHEMA_LINE = "# schema=1"


def format_value(value: Any) -> str:
    """Floats as '.17g' (round-trip exact); everything else via str."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def _target(filename: str, directory: str) -> str:
    os.makedirs(directory, exist_ok=True)
    return os.path.join(directory, filename)


@observe(capture_input=False)
def write_csv(rows: Iterable[dict], columns: Sequence[str], filename: str, directory: str) -> str:
    """
    Write rows as CSV under `directory` with a leading schema comment line.
    Rows are written in the given order; missing cells are left empty.
    """
    path = _target(filename, directory)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(SCHEMA_LINE + "\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) if row.get(c) is not None else "" for c in columns])
    return path


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


@observe(capture_input=False)
def write_json(document: dict, filename: str, directory: str) -> str:
    path = _target(filename, directory)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(document), f, ensure_ascii=False, sort_keys=True, indent=2)
        f.write("\n")
    return path


@observe(capture_input=False)
def dump_matrix(op: OperatorMatrix, basename: str, directory: str) -> tuple[str, str]:
    """Row-major little-endian complex64 matrix plus a JSON sidecar (dims, K_basis, hbar, shape)."""
    path = _target(f"{basename}.bin", directory)
    np.ascontiguousarray(op.matrix, dtype="<c8").tofile(path)
    sidecar = write_json(
        {
            "dims": op.ctx.d,
            "K_basis": op.K_basis,
            "hbar": op.ctx.hbar,
            "center": list(op.center),
            "shape": list(op.matrix.shape),
            "dtype": "<c8",
            "order": "row-major",
        },
        f"{basename}.json",
        directory,
    )
    return path, sidecar
