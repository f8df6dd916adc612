"""Binary field dumps.

Layout (all little-endian):
    magic       4 bytes  b"NLSF"
    version     uint32   currently 1
    n_dims      uint32
    ell         uint32
    points      n_dims * uint32
    lengths     n_dims * float64
    data        per component, row-major complex128 (interleaved re, im)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import ComplexField, FieldVector, Grid

MAGIC = b"NLSF"
FORMAT_VERSION = 1


def write_fields(path, state: FieldVector) -> None:
    """Write a field vector with its grid metadata."""
    grid = state.grid
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", FORMAT_VERSION, grid.n_dims, state.ell))
        fh.write(struct.pack(f"<{grid.n_dims}I", *grid.points_per_dim))
        fh.write(struct.pack(f"<{grid.n_dims}d", *grid.lengths_per_dim))
        for comp in state.components:
            fh.write(np.ascontiguousarray(comp.values, dtype="<c16").tobytes())


def read_fields(path) -> FieldVector:
    """Read a field vector; raises ValueError on a malformed dump."""
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise ValueError(f"{path}: not a field dump (bad magic)")
    version, n_dims, ell = struct.unpack_from("<III", raw, 4)
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported dump version {version}")
    if n_dims not in (1, 2, 3) or ell < 1:
        raise ValueError(f"{path}: invalid header (n_dims={n_dims}, ell={ell})")
    offset = 16
    points = struct.unpack_from(f"<{n_dims}I", raw, offset)
    offset += 4 * n_dims
    lengths = struct.unpack_from(f"<{n_dims}d", raw, offset)
    offset += 8 * n_dims
    grid = Grid(points, lengths)
    count = grid.total_points
    expected = offset + ell * count * 16
    if len(raw) != expected:
        raise ValueError(f"{path}: size {len(raw)} does not match header (expected {expected})")
    comps = []
    for _ in range(ell):
        flat = np.frombuffer(raw, dtype="<c16", count=count, offset=offset)
        offset += count * 16
        comps.append(ComplexField(grid, flat.reshape(grid.shape).astype(np.complex128)))
    return FieldVector(tuple(comps))
