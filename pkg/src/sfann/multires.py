"""Bounded-spread reduction: lucky HST queries, slices and per-cluster graphs.

Each HST node ``v`` is active at a window of ``M + 1`` integer resolutions
below its own label (internal nodes) and below its parent's label (all but
the root).  The ``i``-slice holds the representatives of the nodes active at
``i``; it is partitioned by the head map ``f_i(s) = anc(s, 2^(i+M))`` and
every cluster gets a navigable graph built for ``eps / 2``.  A cluster has
diameter at most ``2^(i+M)`` and closest pair at least ``2^(i-2M)``, so its
spread is polynomial in ``n`` whatever the spread of the whole set.

A query first tries the lucky test on ``u = anc(p, ell)``.  Otherwise it
searches the cluster containing ``rep(u)`` at resolution
``res(eps * ell / (8n))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .errors import ConfigError
from .greedy import FRIEND_CONST, GreedyOrder, check_eps, make_greedy
from .hst import AncestorIndex, Hst, ancestor_query
from .metric import PointSet, as_query
from .navgraph import NavGraph, QueryStats, SearchTrace, build_graph, greedy_route


def res(r: float) -> int:
    """floor(log2 r), exact for every positive finite double."""
    if not r > 0.0 or math.isinf(r):
        raise ValueError(f"resolution undefined for {r}")
    return math.frexp(r)[1] - 1


def window_size(n: int, eps: float) -> int:
    """M = 7 + ceil(log2(n^3 / eps)), evaluated without rounding error."""
    # n^3/eps is compared against exact powers of two
    x = n**3 / eps
    k = res(x)
    return 7 + (k if math.ldexp(1.0, k) == x else k + 1)


def pow2(e: int) -> float:
    try:
        return math.ldexp(1.0, e)
    except OverflowError:
        return math.inf


def active_windows(H: Hst, M: int) -> list[list[tuple[int, int]]]:
    """Per node, the inclusive resolution windows ``(lo, hi)`` it is active in."""
    out = []
    root = H.root
    for v in range(H.n_nodes):
        wins = []
        if not H.is_leaf(v) or v == root:
            b = res(float(H.label[v])) if H.label[v] > 0 else None
            if b is not None:
                wins.append((b - M, b))
        if v != root:
            bp = res(float(H.label[H.parent[v]]))
            wins.append((bp - M, bp))
        out.append(wins)
    return out


def active_resolutions(H: Hst, M: int) -> list[set[int]]:
    return [set(i for lo, hi in w for i in range(lo, hi + 1)) for w in active_windows(H, M)]


def ancestor_table(H: Hst, M: int) -> np.ndarray:
    """``T[v, j] = anc(v, 2^(res(lbl v) + j))`` for internal ``v`` and ``0 <= j <= 2M``.

    Filled top-down: along an edge ``u -> v`` with resolution drop ``k``,
    scales below ``lbl(u)`` resolve to ``v`` itself and the rest shift in
    from ``T[u, j - k]``.  Entries whose scale is below ``lbl(v)`` are -1.
    Leaf rows stay -1.
    """
    n = H.n_points
    T = np.full((H.n_nodes, 2 * M + 1), -1, dtype=np.int64)
    js = np.arange(2 * M + 1)
    for v in range(H.n_nodes - 1, n - 1, -1):
        b = res(float(H.label[v]))
        scale = np.array([pow2(b + j) for j in js.tolist()])
        row = np.where(scale >= H.label[v], v, -1)
        u = int(H.parent[v])
        if u >= 0:
            k = res(float(H.label[u])) - b
            up = scale >= H.label[u]
            row[up] = T[u, js[up] - k]
        T[v] = row
    return T


@dataclass(frozen=True, eq=False)
class ClusterGraph:
    members: np.ndarray  # original ids, ascending
    points: PointSet  # the members, re-indexed 0..size-1
    greedy: GreedyOrder
    graph: NavGraph

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def closest_pair(self) -> float:
        return float(self.greedy.radii[1:].min()) if self.size > 1 else math.inf


@dataclass(frozen=True, eq=False)
class Slice:
    resolution: int
    members: np.ndarray  # original ids, ascending
    heads: np.ndarray  # f_i(member): HST node
    graph_ids: np.ndarray  # index into MultiResIndex.graphs

    def locate(self, s: int) -> int:
        """Position of point ``s`` in the slice, or -1."""
        k = int(np.searchsorted(self.members, s))
        return k if k < self.members.shape[0] and self.members[k] == s else -1

    def clusters(self) -> dict[int, np.ndarray]:
        return {int(h): self.members[self.heads == h] for h in np.unique(self.heads)}


class Route(NamedTuple):
    lucky: bool
    p: int
    ell: float
    u: int
    s: int
    r: float
    psi: int
    graph_id: int


@dataclass(eq=False)
class MultiResIndex:
    P: PointSet
    hst: Hst
    anc: AncestorIndex
    rough: object
    eps: float
    M: int
    slices: dict[int, Slice]
    graphs: list[ClusterGraph]
    c_const: float = FRIEND_CONST
    fallback_lookups: int = field(default=0, compare=False)

    @property
    def n(self) -> int:
        return self.P.n

    def total_slice_size(self) -> int:
        return sum(sl.members.shape[0] for sl in self.slices.values())

    def logical_edge_count(self) -> int:
        """Edges summed over every (slice, cluster) pair, shared graphs counted each time."""
        total = 0
        for sl in self.slices.values():
            for g in np.unique(sl.graph_ids).tolist():
                total += self.graphs[g].graph.edge_count
        return total

    def stored_edge_count(self) -> int:
        return sum(g.graph.edge_count for g in self.graphs)

    def route(self, q: tuple, stats: Optional[QueryStats] = None) -> Route:
        stats = stats if stats is not None else QueryStats()
        H = self.hst
        pid, ell, steps = self.rough.query(q)
        stats.rough_time_steps += steps
        stats.dist_evals += 1
        u, asteps = ancestor_query(self.anc, H, pid, ell)
        stats.ancestor_steps += asteps
        n = self.n
        if H.label[u] <= self.eps * ell / 2.0 and H.parent_label(u) > 6.0 * n * n * ell:
            return Route(True, pid, ell, u, -1, 0.0, 0, -1)
        s = int(H.rep[u])
        r = self.eps * ell / (8.0 * n)
        psi = res(r)
        sl = self.slices.get(psi)
        pos = sl.locate(s) if sl is not None else -1
        # a failed lucky test guarantees rep(u) is active at psi
        if pos < 0:
            raise AssertionError(f"representative {s} missing from slice {psi}")
        return Route(False, pid, ell, u, s, r, psi, int(sl.graph_ids[pos]))

    def query(self, q, trace: bool = False) -> tuple[int, float, QueryStats]:
        qt = as_query(q, self.P.dim)
        stats = QueryStats(trace=SearchTrace() if trace else None)
        if self.n == 1:
            stats.stop_reason = "lucky"
            return 0, math.dist(qt, self.P.rows[0]), stats
        rt = self.route(qt, stats)
        if rt.lucky:
            stats.stop_reason = "lucky"
            return rt.p, rt.ell, stats
        cg = self.graphs[rt.graph_id]
        bound = pow2(3 * self.M)
        if cg.size > 1 and not float(cg.greedy.radii[0]) / cg.closest_pair <= bound:
            raise AssertionError(f"cluster spread exceeds 2^(3M) at resolution {rt.psi}")
        if cg.size == 1:
            pid = int(cg.members[0])
        else:
            rank, _ = greedy_route(cg.graph, cg.points, cg.greedy, qt, self.eps / 2.0, 0, stats)
            pid = int(cg.members[cg.greedy.order[rank]])
        return pid, math.dist(qt, self.P.rows[pid]), stats


def cluster_heads(H: Hst, A: AncestorIndex, M: int, T: Optional[np.ndarray] = None) -> tuple[dict, int]:
    """``{i: {s: f_i(s)}}`` over every active (resolution, representative) pair.

    Returns the map and the number of lookups that had to fall back to an
    ancestor query (scale below the generating node's own label).
    """
    T = ancestor_table(H, M) if T is None else T
    label, parent, rep = H.label, H.parent, H.rep
    out: dict[int, dict[int, int]] = {}
    fallbacks = 0
    for v, wins in enumerate(active_windows(H, M)):
        s = int(rep[v])
        lv = float(label[v])
        u = int(parent[v])
        lu = math.inf if u < 0 else float(label[u])
        bu = res(lu) if u >= 0 else 0
        for lo, hi in wins:
            for i in range(lo, hi + 1):
                bucket = out.setdefault(i, {})
                if s in bucket:
                    continue
                R = pow2(i + M)
                if lv <= R < lu:
                    head = v
                elif R >= lu:
                    head = int(T[u, i + M - bu])
                else:
                    head, _ = ancestor_query(A, H, s, R)
                    fallbacks += 1
                bucket[s] = head
    return out, fallbacks


def build_multires(
    P: PointSet,
    eps: float,
    hst: Hst,
    anc: AncestorIndex,
    rough,
    c: float = FRIEND_CONST,
) -> MultiResIndex:
    eps = check_eps(eps)
    n = P.n
    M = window_size(n, eps)
    if n == 1:
        return MultiResIndex(P, hst, anc, rough, eps, M, {}, [], c)
    if eps < 1.0 / n:
        raise ConfigError(f"multires needs eps >= 1/n (eps={eps}, n={n})")
    heads, fallbacks = cluster_heads(hst, anc, M)
    graphs: list[ClusterGraph] = []
    cache: dict[tuple, int] = {}
    slices: dict[int, Slice] = {}
    for i in sorted(heads):
        bucket = heads[i]
        members = np.array(sorted(bucket), dtype=np.int64)
        hv = np.array([bucket[s] for s in members.tolist()], dtype=np.int64)
        gids = np.empty(members.shape[0], dtype=np.int64)
        for h in np.unique(hv).tolist():
            mask = hv == h
            key = tuple(members[mask].tolist())
            g = cache.get(key)
            if g is None:
                g = len(graphs)
                cache[key] = g
                sub = P.subset(key)
                greedy = make_greedy(sub, eps / 2.0, c)
                graphs.append(ClusterGraph(members[mask], sub, greedy, build_graph(greedy)))
            gids[mask] = g
        slices[i] = Slice(i, members, hv, gids)
    return MultiResIndex(P, hst, anc, rough, eps, M, slices, graphs, c, fallbacks)
