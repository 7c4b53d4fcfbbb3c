"""Navigable DAG over greedy ranks and the baseline greedy-routing search.

Edge ``i -> j`` exists iff ``i`` is a friend of ``j``, so every edge points
to a later rank.  Out-lists are stored flat (``offsets``/``targets``) sorted
by destination rank, with a parallel ``labels`` array holding ``radii[j]``;
the labels of one out-list are therefore non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

from .greedy import GreedyOrder
from .metric import PointSet, as_query


@dataclass
class SearchTrace:
    """Per-query record used by invariant checks in tests and benchmarks."""

    visited: list = field(default_factory=list)  # (rank, distance) per vertex
    inspected: list = field(default_factory=list)  # (source rank, dest rank, label)


@dataclass
class QueryStats:
    rough_time_steps: int = 0
    ancestor_steps: int = 0
    reverse_steps: int = 0
    friends_scanned: int = 0
    hops: int = 0
    edges_scanned: int = 0
    stage2_edges: int = 0  # edges scanned by the final graph walk alone
    dist_evals: int = 0
    stop_reason: str = ""
    trace: Optional[SearchTrace] = field(default=None, repr=False, compare=False)

    COUNTERS = (
        "rough_time_steps",
        "ancestor_steps",
        "reverse_steps",
        "friends_scanned",
        "hops",
        "edges_scanned",
        "dist_evals",
    )

    @classmethod
    def csv_fields(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name != "trace"]

    def as_row(self) -> list:
        return [getattr(self, name) for name in self.csv_fields()]

    def absorb(self, other: "QueryStats") -> None:
        """Add another query's counters into this one (stop reason kept)."""
        for name in self.COUNTERS:
            setattr(self, name, getattr(self, name) + getattr(other, name))


@dataclass(frozen=True, eq=False)
class NavGraph:
    offsets: np.ndarray
    targets: np.ndarray
    labels: np.ndarray

    @property
    def n(self) -> int:
        return self.offsets.shape[0] - 1

    @property
    def edge_count(self) -> int:
        return int(self.targets.shape[0])

    def out_edges(self, rank: int) -> np.ndarray:
        return self.targets[self.offsets[rank] : self.offsets[rank + 1]]

    def out_labels(self, rank: int) -> np.ndarray:
        return self.labels[self.offsets[rank] : self.offsets[rank + 1]]

    def first_label_at_most(self, rank: int, bound: float) -> int:
        """Flat index of the first out-edge of ``rank`` whose label is <= bound."""
        lo, hi = int(self.offsets[rank]), int(self.offsets[rank + 1])
        # labels are non-increasing within a list; search on the negation
        return lo + int(np.searchsorted(-self.labels[lo:hi], -bound, side="left"))


def build_graph(greedy: GreedyOrder) -> NavGraph:
    n = greedy.n
    counts = np.diff(greedy.friend_offsets)
    dst = np.repeat(np.arange(n, dtype=np.int64), counts)
    src = greedy.friend_ranks
    # stable sort keeps destinations ascending inside each source's list
    perm = np.argsort(src, kind="stable")
    targets = dst[perm]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    labels = greedy.radii[targets]
    return NavGraph(offsets, targets, labels)


def greedy_route(
    G: NavGraph,
    P: PointSet,
    greedy: GreedyOrder,
    q: tuple,
    eps: float,
    start: int = 0,
    stats: Optional[QueryStats] = None,
) -> tuple[int, QueryStats]:
    """Impulsive greedy routing from ``start``; returns the final rank.

    Out-edges are scanned by ascending destination; the first destination at
    least a (1 - eps/4) factor closer becomes the current vertex and its list
    is scanned from the beginning.
    """
    stats = stats if stats is not None else QueryStats()
    rows, order = P.rows, greedy.order
    offsets, targets = G.offsets, G.targets
    shrink = 1.0 - eps / 4.0
    trace = stats.trace
    cur = start
    dcur = math.dist(q, rows[order[cur]])
    stats.dist_evals += 1
    before = stats.edges_scanned
    if trace is not None:
        trace.visited.append((cur, dcur))
    pos, end = int(offsets[cur]), int(offsets[cur + 1])
    while pos < end:
        j = int(targets[pos])
        stats.edges_scanned += 1
        dj = math.dist(q, rows[order[j]])
        stats.dist_evals += 1
        if trace is not None:
            trace.inspected.append((cur, j, float(G.labels[pos])))
        if dj <= shrink * dcur:
            cur, dcur = j, dj
            stats.hops += 1
            if trace is not None:
                trace.visited.append((cur, dcur))
            pos, end = int(offsets[cur]), int(offsets[cur + 1])
        else:
            pos += 1
    stats.stop_reason = "list_exhausted"
    stats.stage2_edges = stats.edges_scanned - before
    return cur, stats


def baseline_search(
    G: NavGraph, P: PointSet, greedy: GreedyOrder, q, eps: float, trace: bool = False
) -> tuple[int, QueryStats]:
    """Spread-dependent search from rank 0; returns (original id, stats)."""
    qt = as_query(q, P.dim)
    stats = QueryStats(trace=SearchTrace() if trace else None)
    rank, stats = greedy_route(G, P, greedy, qt, eps, 0, stats)
    return int(greedy.order[rank]), stats
