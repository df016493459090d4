"""Snapshot and report IO.

Snapshot format "FBZ1": magic bytes 0x46 0x42 0x5A 0x31, little-endian u32
fields dx, Nx, Nv, Nomega, f64 fields Lx, vmax, time, then Nx^dx * Nv^2 f64
values in row-major (x outer, v inner) order.

CSV files are written with 17-significant-digit decimal fields so byte
identity of reports follows from bit identity of the numbers.
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import DistributionFunction, GridError, PhaseGrid, make_grid

MAGIC = b"FBZ1"

__all__ = ["write_snapshot", "read_snapshot", "format_float", "write_diagnostics_csv"]


def format_float(x) -> str:
    """Finite decimal with 17 significant digits (round-trips f64 exactly)."""
    return format(float(x), ".17g")


def write_snapshot(path, f: DistributionFunction, time: float) -> None:
    g = f.grid
    header = MAGIC + struct.pack("<4I", g.dx, g.Nx, g.Nv, g.Nomega)
    header += struct.pack("<3d", g.Lx, g.vmax, float(time))
    body = np.ascontiguousarray(f.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + body)


def read_snapshot(path, expected_grid: PhaseGrid | None = None):
    """Read an FBZ1 snapshot; returns (DistributionFunction, time)."""
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise GridError(f"{path}: not an FBZ1 snapshot (bad magic)")
    dx, Nx, Nv, Nomega = struct.unpack_from("<4I", raw, 4)
    Lx, vmax, time = struct.unpack_from("<3d", raw, 20)
    grid = make_grid(dx, Lx, Nx, vmax, Nv, Nomega)
    if expected_grid is not None and grid != expected_grid:
        raise GridError(
            f"{path}: snapshot grid {grid!r} does not match expected {expected_grid!r}"
        )
    n = grid.n_xcells * grid.n_vcells
    vals = np.frombuffer(raw, dtype="<f8", offset=44, count=n).reshape(
        grid.n_xcells, grid.n_vcells
    )
    return DistributionFunction(grid, vals.copy()), time


def diagnostics_header(s_list, residual_names=()) -> str:
    cols = ["t", "mass", "px", "py", "energy", "H", "D", "clipped_mass", "projection_l1"]
    cols += [f"M_{format(s, 'g')}" for s in s_list]
    cols += list(residual_names)
    return ",".join(cols)


def diagnostics_row(rec, s_list, residual_names=()) -> str:
    vals = [
        format_float(rec.t),
        format_float(rec.mass),
        format_float(rec.momentum[0]),
        format_float(rec.momentum[1]),
        format_float(rec.energy),
        format_float(rec.H),
        "" if rec.D is None else format_float(rec.D),
        format_float(rec.clipped_mass),
        format_float(rec.projection_l1),
    ]
    vals += [format_float(rec.m_s[s]) for s in s_list]
    res = rec.residuals or {}
    vals += [format_float(res[name]) for name in residual_names]
    return ",".join(vals)


def write_diagnostics_csv(path, records, s_list, residual_names=()) -> None:
    lines = [diagnostics_header(s_list, residual_names)]
    lines += [diagnostics_row(r, s_list, residual_names) for r in records]
    Path(path).write_text("\n".join(lines) + "\n")
