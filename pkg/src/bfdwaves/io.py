"""CSV and JSON serialization of fields, spectra and run metadata.

Every CSV starts with ``#`` header lines of the form ``# key: value``; the
grid half length ``L``, size ``N`` and the parameter digest are always
present. Floats are written with 17 significant digits.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .spectral import PeriodicGrid, WaveState

FMT = "%.17g"


def _header(grid: PeriodicGrid, columns, meta: dict | None = None) -> str:
    lines = [f"L: {grid.L!r}", f"N: {grid.N}"]
    for key, value in (meta or {}).items():
        lines.append(f"{key}: {value}")
    lines.append("columns: " + ",".join(columns))
    return "\n".join(lines)


def read_header(path) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            out[key.strip()] = value.strip()
    return out


def write_nodal(path, grid: PeriodicGrid, values, *, name: str = "value", meta: dict | None = None):
    data = np.column_stack([grid.x, np.asarray(values, dtype=float)])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=_header(grid, ["x", name], meta))


def write_state(path, grid: PeriodicGrid, state: WaveState, *, meta: dict | None = None):
    data = np.column_stack([grid.x, state.zeta, state.u])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=_header(grid, ["x", "zeta", "u"], meta))


def write_spectrum(path, grid: PeriodicGrid, spectrum, *, meta: dict | None = None):
    spectrum = np.asarray(spectrum)
    data = np.column_stack([grid.modes[: spectrum.shape[-1]], spectrum.real, spectrum.imag])
    np.savetxt(path, data, fmt=FMT, delimiter=",", header=_header(grid, ["k", "re", "im"], meta))


def read_state(path) -> tuple[PeriodicGrid, WaveState]:
    """Read an ``(x, zeta, u)`` CSV back into a grid and state."""
    header = read_header(path)
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    if "L" in header and "N" in header:
        grid = PeriodicGrid(float(header["L"]), int(header["N"]))
    else:
        n = data.shape[0]
        grid = PeriodicGrid(-float(data[0, 0]), n)
    if data.shape[0] != grid.N or data.shape[1] < 3:
        raise ValueError(f"{path}: expected {grid.N} rows of (x, zeta, u)")
    return grid, WaveState(data[:, 1], data[:, 2])


def read_nodal(path) -> tuple[PeriodicGrid, np.ndarray]:
    header = read_header(path)
    data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    grid = PeriodicGrid(float(header["L"]), int(header["N"]))
    return grid, data[:, 1]


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(_clean(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_table(path, header, rows, *, delimiter=","):
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows.reshape(0, len(header)) if rows.size == 0 else rows.reshape(1, -1)
    np.savetxt(path, rows, fmt=FMT, delimiter=delimiter,
               header=delimiter.join(header), comments="" if delimiter == "," else "# ")


def write_plotdata(path, header, rows):
    """Whitespace-separated columns, readable by gnuplot."""
    write_table(path, header, rows, delimiter=" ")
