"""Reverse tree over greedy ranks.

Rank ``i >= 1`` points to the earliest rank within ``8 * radii[i]`` of it.
Radii at least quadruple every two steps up any path, so climbing to the
first ancestor above a threshold takes logarithmically many steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .greedy import GreedyOrder
from .metric import PointSet, distances

BALL_FACTOR = 8.0


@dataclass(frozen=True, eq=False)
class ReverseTree:
    parent: np.ndarray  # parent[0] == -1

    @property
    def n(self) -> int:
        return self.parent.shape[0]

    def path_to_root(self, rank: int) -> list[int]:
        path = [rank]
        while self.parent[path[-1]] >= 0:
            path.append(int(self.parent[path[-1]]))
        return path


def build_reverse_tree(P: PointSet, greedy: GreedyOrder) -> ReverseTree:
    n = greedy.n
    Xo = P.points[greedy.order]
    parent = np.full(n, -1, dtype=np.int64)
    for i in range(1, n):
        d = distances(Xo[:i], Xo[i])
        # the nearest prefix point sits at exactly radii[i], so a hit always exists
        parent[i] = int(np.argmax(d <= BALL_FACTOR * float(greedy.radii[i])))
    return ReverseTree(parent)


def ascend(T: ReverseTree, radii: np.ndarray, start: int, threshold: float) -> tuple[int, int]:
    """First rank on the path from ``start`` (inclusive) with radius > threshold.

    Falls back to rank 0 when no rank on the path qualifies.  Returns
    ``(rank, parent steps taken)``.
    """
    cur, steps = start, 0
    while radii[cur] <= threshold and T.parent[cur] >= 0:
        cur = int(T.parent[cur])
        steps += 1
    return cur, steps
