"""Flat binary and CSV serialization of grid fields.

Binary dumps are row-major float64 with the component axis last; a JSON
sidecar (``<name>.json``) records shape, component names and free metadata.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


def write_binary(path, field: np.ndarray, components=None, **meta) -> Path:
    path = Path(path)
    arr = np.ascontiguousarray(field, dtype="<f8")
    arr.tofile(path)
    sidecar = {
        "shape": list(arr.shape),
        "dtype": "float64-le",
        "order": "row-major",
        "components": list(components) if components is not None else None,
        **meta,
    }
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar, indent=2))
    return path


def read_binary(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    arr = np.fromfile(path, dtype="<f8").reshape(sidecar["shape"])
    return arr, sidecar


def write_field_csv(path, coords: np.ndarray, field: np.ndarray, names) -> Path:
    """One row per grid point: ``x, y, z`` followed by the named components."""
    path = Path(path)
    pts = coords.reshape(-1, 3)
    vals = field.reshape(len(pts), -1)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "z", *names])
        for p, v in zip(pts, vals):
            writer.writerow([*(repr(float(c)) for c in p), *(repr(float(c)) for c in v)])
    return path


def write_matrix_csv(path, mat: np.ndarray) -> Path:
    path = Path(path)
    np.savetxt(path, np.asarray(mat), delimiter=",", fmt="%.17g")
    return path
