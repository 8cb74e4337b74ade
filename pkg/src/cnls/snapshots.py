"""Self-describing field snapshots.

Layout: an ASCII magic line, a little-endian uint32 header length, a JSON
header (grid kind and geometry, field names, dtype), then the raw field
arrays as little-endian 64-bit floats in header order (C order for the
Cartesian cube). A CSV export (node coordinates, value columns) is provided
for plotting.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .grids import CartesianGrid3, FieldPair, Grid, RadialGrid, ScalarField

MAGIC = b"CNLSSNAP1\n"
_DTYPE = "<f8"


def _grid_header(grid: Grid) -> dict:
    return grid.describe()


def _grid_from_header(h: dict) -> Grid:
    if h["kind"] == "radial":
        return RadialGrid(r_max=h["r_max"], n=h["n"])
    if h["kind"] == "cartesian":
        return CartesianGrid3(half_width=h["half_width"], n_per_axis=h["n"])
    raise ConfigurationError(f"unknown grid kind {h['kind']!r}")


def write_snapshot(path, grid: Grid, fields: dict[str, np.ndarray],
                   meta: dict | None = None) -> None:
    path = Path(path)
    header = {
        "format": 1,
        "grid": _grid_header(grid),
        "fields": list(fields.keys()),
        "dtype": _DTYPE,
    }
    if meta:
        header["meta"] = meta
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for name in header["fields"]:
            arr = np.ascontiguousarray(fields[name], dtype=np.float64)
            fh.write(arr.astype(_DTYPE, copy=False).tobytes())


def read_snapshot(path) -> tuple[Grid, dict[str, np.ndarray], dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ConfigurationError(f"{path} is not a field snapshot")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        grid = _grid_from_header(header["grid"])
        if header["grid"]["kind"] == "radial":
            shape, count = (grid.n,), grid.n
        else:
            npa = grid.n_per_axis
            shape, count = (npa, npa, npa), npa ** 3
        fields = {}
        for name in header["fields"]:
            raw = fh.read(count * 8)
            fields[name] = np.frombuffer(raw, dtype=_DTYPE).reshape(shape).copy()
    return grid, fields, header.get("meta", {})


def snapshot_pair(path, pair: FieldPair, names=("u", "v"),
                  meta: dict | None = None) -> None:
    write_snapshot(path, pair.grid, {names[0]: pair.u.values,
                                     names[1]: pair.v.values}, meta=meta)


def load_pair(path, names=("u", "v")) -> tuple[FieldPair, dict]:
    grid, fields, meta = read_snapshot(path)
    pair = FieldPair(ScalarField(grid, fields[names[0]]),
                     ScalarField(grid, fields[names[1]]))
    return pair, meta


def export_csv(path, grid: Grid, fields: dict[str, np.ndarray]) -> None:
    """Gnuplot-ready CSV: coordinates then one column per field."""
    path = Path(path)
    names = list(fields.keys())
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if isinstance(grid, RadialGrid):
            fh.write(",".join(["r"] + names) + "\n")
            cols = [np.asarray(fields[n]).ravel() for n in names]
            for i, r in enumerate(grid.r):
                row = [format(r, ".17g")] + [format(c[i], ".17g") for c in cols]
                fh.write(",".join(row) + "\n")
        else:
            fh.write(",".join(["x", "y", "z"] + names) + "\n")
            pts = grid.points()
            cols = [np.asarray(fields[n]).ravel() for n in names]
            for i in range(pts.shape[0]):
                row = [format(pts[i, 0], ".17g"), format(pts[i, 1], ".17g"),
                       format(pts[i, 2], ".17g")]
                row += [format(c[i], ".17g") for c in cols]
                fh.write(",".join(row) + "\n")
