"""Exact greedy permutation (farthest-point order) with radii and friends lists.

Ranks are 0-based: ``order[0]`` is the start point.  ``radii[0]`` is the
largest distance from the start point, and for ``i >= 1``, ``radii[i]`` is
the distance from ``order[i]`` to the prefix ``order[:i]``.

The friends of rank ``i`` are the earlier ranks within ``c * radii[i] / eps``
of it.  They are stored in CSR form, ascending by rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError
from .metric import PointSet, distances

FRIEND_CONST = 26.0


def check_eps(eps: float) -> float:
    eps = float(eps)
    # 1/2 itself is admitted so a coarse eps=1/2 index can seed bootstrap queries
    if not (0.0 < eps <= 0.5):
        raise ConfigError(f"eps must lie in (0, 1/2], got {eps}")
    return eps


def check_friend_const(c: float) -> float:
    c = float(c)
    if not c >= FRIEND_CONST:
        raise ConfigError(f"friend constant must be at least {FRIEND_CONST:g}, got {c}")
    return c


@dataclass(frozen=True, eq=False)
class GreedyOrder:
    order: np.ndarray
    rank_of: np.ndarray
    radii: np.ndarray
    friend_offsets: np.ndarray
    friend_ranks: np.ndarray
    eps: float
    c_const: float = FRIEND_CONST

    @property
    def n(self) -> int:
        return self.order.shape[0]

    def friends(self, rank: int) -> np.ndarray:
        return self.friend_ranks[self.friend_offsets[rank] : self.friend_offsets[rank + 1]]

    def friend_radius(self, rank: int) -> float:
        return self.c_const * float(self.radii[rank]) / self.eps

    @property
    def edge_count(self) -> int:
        return int(self.friend_ranks.shape[0])


def build_greedy(P: PointSet, start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Farthest-point ordering of ``P`` starting at original id ``start``.

    O(n^2): keeps every point's distance to the current prefix and repeatedly
    takes the farthest, lowest original id first on ties.
    """
    n = P.n
    if not 0 <= start < n:
        raise InputError(f"start id {start} out of range for {n} points")
    X = P.points
    order = np.empty(n, dtype=np.int64)
    radii = np.empty(n, dtype=np.float64)
    to_prefix = distances(X, X[start])
    order[0] = start
    radii[0] = float(to_prefix.max())
    to_prefix[start] = -np.inf
    for i in range(1, n):
        nxt = int(np.argmax(to_prefix))
        order[i] = nxt
        radii[i] = to_prefix[nxt]
        np.minimum(to_prefix, distances(X, X[nxt]), out=to_prefix)
        to_prefix[nxt] = -np.inf
    return order, radii


def build_friends(
    P: PointSet, order: np.ndarray, radii: np.ndarray, eps: float, c: float = FRIEND_CONST
) -> tuple[np.ndarray, np.ndarray]:
    """Friends lists as (offsets, flat ranks) by a direct O(n^2) scan."""
    eps = check_eps(eps)
    c = check_friend_const(c)
    Xo = P.points[order]
    n = order.shape[0]
    offsets = np.zeros(n + 1, dtype=np.int64)
    chunks = []
    for i in range(1, n):
        d = distances(Xo[:i], Xo[i])
        hits = np.flatnonzero(d <= c * float(radii[i]) / eps)
        chunks.append(hits)
        offsets[i + 1] = offsets[i] + hits.shape[0]
    flat = np.concatenate(chunks).astype(np.int64) if chunks else np.zeros(0, dtype=np.int64)
    return offsets, flat


def make_greedy(P: PointSet, eps: float, c: float = FRIEND_CONST, start: int = 0) -> GreedyOrder:
    order, radii = build_greedy(P, start)
    offsets, flat = build_friends(P, order, radii, eps, c)
    rank_of = np.empty_like(order)
    rank_of[order] = np.arange(order.shape[0], dtype=np.int64)
    return GreedyOrder(order, rank_of, radii, offsets, flat, float(eps), float(c))


def restrict_friends(P: PointSet, greedy: GreedyOrder, eps: float) -> GreedyOrder:
    """Same permutation with friends recomputed for a larger ``eps``.

    Friends balls shrink as ``eps`` grows, so the new lists are filtered from
    the existing ones instead of rescanning every prefix.
    """
    eps = check_eps(eps)
    if eps < greedy.eps:
        raise ConfigError("can only restrict friends to a larger eps")
    Xo = P.points[greedy.order]
    n = greedy.n
    offsets = np.zeros(n + 1, dtype=np.int64)
    chunks = []
    for i in range(1, n):
        cand = greedy.friends(i)
        d = distances(Xo[cand], Xo[i])
        keep = cand[d <= greedy.c_const * float(greedy.radii[i]) / eps]
        chunks.append(keep)
        offsets[i + 1] = offsets[i] + keep.shape[0]
    flat = np.concatenate(chunks).astype(np.int64) if chunks else np.zeros(0, dtype=np.int64)
    return GreedyOrder(greedy.order, greedy.rank_of, greedy.radii, offsets, flat, eps, greedy.c_const)
