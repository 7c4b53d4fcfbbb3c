"""Point sets, the Euclidean metric, the brute-force oracle and synthetic data.

Every other module measures distance through :func:`dist` (one pair, used on
query paths) or :func:`distances` (one point against many, used by the
quadratic builders and by the oracle).  Both are overflow safe, so point sets
whose coordinates span hundreds of binary orders of magnitude (the geometric
chain dataset) are handled without special casing.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InputError

logger = logging.getLogger(__name__)

DATASET_KINDS = ("uniform", "clusters", "geochain")
GEOCHAIN_MAX_N = 900


@dataclass(frozen=True, eq=False)
class PointSet:
    """Immutable set of ``n`` distinct points in ``R^dim``.

    ``points[i]`` is the point with original id ``i``.
    """

    points: np.ndarray
    ids: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        pts = np.array(self.points, dtype=np.float64, copy=True)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"expected a non-empty (n, dim) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("point coordinates must be finite")
        if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise InputError("point set contains duplicate points")
        pts.setflags(write=False)
        ids = np.arange(pts.shape[0], dtype=np.int64)
        ids.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def rows(self) -> list[tuple[float, ...]]:
        """Points as tuples, for fast scalar distance evaluation."""
        return [tuple(map(float, p)) for p in self.points]

    def subset(self, ids: Sequence[int]) -> "PointSet":
        return PointSet(self.points[np.asarray(ids, dtype=np.int64)])

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True)
class SpreadStats:
    diameter: float
    closest_pair: float
    spread: float


def as_query(q, dim: int) -> tuple[float, ...]:
    """Validate a query point and return it as a tuple of floats."""
    arr = np.asarray(q, dtype=np.float64).reshape(-1)
    if arr.shape[0] != dim:
        raise InputError(f"query has dimension {arr.shape[0]}, index has {dim}")
    if not np.all(np.isfinite(arr)):
        raise InputError("query coordinates must be finite")
    return tuple(map(float, arr))


def dist(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance between two points of equal dimension."""
    if len(a) != len(b):
        raise InputError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return math.dist(a, b)


def distances(points: np.ndarray, q) -> np.ndarray:
    """Euclidean distances from ``q`` to every row of ``points``."""
    points = np.asarray(points, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if points.ndim != 2 or points.shape[1] != q.shape[0]:
        raise InputError(f"dimension mismatch: {points.shape} vs {q.shape}")
    diff = points - q
    with np.errstate(over="ignore"):
        sq = np.einsum("ij,ij->i", diff, diff)
    out = np.sqrt(sq)
    bad = ~np.isfinite(out)
    if bad.any():
        # squared norms overflowed; rescale those rows by their largest entry
        sub = diff[bad]
        scale = np.max(np.abs(sub), axis=1)
        scaled = sub / scale[:, None]
        out[bad] = scale * np.sqrt(np.einsum("ij,ij->i", scaled, scaled))
    return out


def brute_force_nn(P: PointSet, q) -> tuple[int, float]:
    """Exact nearest neighbor of ``q``; ties go to the lowest original id.

    The vectorised scan shortlists candidates; the final choice uses
    ``math.dist`` so the oracle agrees bit for bit with the search code.
    """
    d = distances(P.points, q)
    cand = np.flatnonzero(d <= d.min() * (1.0 + 1e-9))
    qt = tuple(map(float, np.asarray(q).reshape(-1)))
    best = min(cand.tolist(), key=lambda i: (math.dist(qt, P.rows[i]), i))
    return best, math.dist(qt, P.rows[best])


def spread_stats(P: PointSet) -> SpreadStats:
    if P.n < 2:
        raise InputError("spread is undefined for fewer than two points")
    diameter = 0.0
    closest = math.inf
    X = P.points
    for i in range(P.n - 1):
        d = distances(X[i + 1 :], X[i])
        diameter = max(diameter, float(d.max()))
        closest = min(closest, float(d.min()))
    return SpreadStats(diameter, closest, diameter / closest)


def gen_dataset(kind: str, n: int, dim: int, seed: int) -> PointSet:
    """Generate a synthetic point set.

    ``uniform``: i.i.d. points in the unit cube.
    ``clusters``: about ``sqrt(n)`` clusters of radius ~1e-6 whose centers are
    spread over a cube of side 1e4, so some queries resolve from the HST alone.
    ``geochain``: the 1-D chain ``2^i - 1``; consecutive gaps double, giving
    spread ``2^(n-1) - 1``.  Always one-dimensional.
    """
    if kind not in DATASET_KINDS:
        raise InputError(f"unknown dataset kind {kind!r}; expected one of {DATASET_KINDS}")
    if n < 2:
        raise InputError("datasets need at least two points")
    if dim < 1:
        raise InputError("dim must be positive")
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return PointSet(rng.random((n, dim)))
    if kind == "clusters":
        k = max(1, int(round(math.sqrt(n))))
        centers = rng.uniform(0.0, 1e4, size=(k, dim))
        sizes = np.full(k, n // k)
        sizes[: n % k] += 1
        labels = np.repeat(np.arange(k), sizes)
        pts = centers[labels] + rng.normal(0.0, 1e-6, size=(n, dim))
        return PointSet(pts)
    if n > GEOCHAIN_MAX_N:
        raise InputError(f"geochain supports n <= {GEOCHAIN_MAX_N} (float exponent range)")
    if dim != 1:
        logger.warning("geochain is one-dimensional; ignoring dim=%d", dim)
    return PointSet(np.array([float(2**i - 1) for i in range(n)]).reshape(-1, 1))
