"""Point file formats: ``.fvecs`` and whitespace-separated text.

fvecs records are a little-endian int32 dimension followed by that many
little-endian float32 values.  Coordinates are widened to float64 on read.
Anything not ending in ``.fvecs`` is treated as text, one point per line,
written with ``repr`` so float64 values survive a round trip exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InputError


def read_fvecs(path) -> np.ndarray:
    raw = np.fromfile(path, dtype="<i4")
    if raw.size == 0:
        raise InputError(f"{path}: empty fvecs file")
    dim = int(raw[0])
    if dim <= 0 or raw.size % (dim + 1) != 0:
        raise InputError(f"{path}: malformed fvecs file")
    recs = raw.reshape(-1, dim + 1)
    if np.any(recs[:, 0] != dim):
        raise InputError(f"{path}: fvecs records have inconsistent dimensions")
    return recs[:, 1:].copy().view("<f4").astype(np.float64)


def write_fvecs(path, points: np.ndarray) -> None:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise InputError("expected an (n, dim) array")
    with np.errstate(over="ignore"):
        f32 = points.astype("<f4")
    if not np.all(np.isfinite(f32)):
        raise InputError("coordinates overflow float32; use a text file instead")
    n, dim = f32.shape
    recs = np.empty((n, dim + 1), dtype="<i4")
    recs[:, 0] = dim
    recs[:, 1:] = f32.view("<i4")
    recs.tofile(path)


def read_text(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append([float(tok) for tok in line.split()])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise InputError(f"{path}: no points")
    if len({len(r) for r in rows}) != 1:
        raise InputError(f"{path}: rows have different dimensions")
    return np.array(rows, dtype=np.float64)


def write_text(path, points: np.ndarray) -> None:
    points = np.asarray(points, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for p in points:
            fh.write(" ".join(repr(float(x)) for x in p))
            fh.write("\n")


def read_points(path) -> np.ndarray:
    if Path(path).suffix == ".fvecs":
        return read_fvecs(path)
    return read_text(path)


def write_points(path, points: np.ndarray) -> None:
    if Path(path).suffix == ".fvecs":
        write_fvecs(path, points)
    else:
        write_text(path, points)
