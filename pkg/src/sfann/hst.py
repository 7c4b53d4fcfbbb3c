"""Expansive HST over a point set, built by splitting the Euclidean MST.

Node ids: leaves are ``0..n-1`` (leaf ``i`` holds point ``i``); internal
nodes are created bottom-up, so every parent has a larger id than its
children and the root is the last node.

An internal node splits its component at the heaviest MST edge inside it
(lowest MST edge index among equal weights) and is labelled with the total
MST weight of its component.  Every pair separated at a node is at least the
split weight apart (cycle property), and the component's diameter is at most
its label, so the tree distance overestimates by a factor of at most
``n - 1``.  Downstream formulas still use the looser ``xi = 3 n^2``.

In floating point a rounded sum of collinear gaps can fall an ulp short of
the rounded end-to-end distance, so a label is also raised to the largest
computed distance across the merge (each pair is compared once, at its
lowest common ancestor, so this stays quadratic overall).

:class:`AncestorIndex` answers ``anc(p, r)`` -- the node on ``p``'s root path
with ``label <= r < label(parent)`` -- by descending a balanced
edge-separator decomposition of the tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .metric import PointSet, distances


@dataclass(frozen=True, eq=False)
class Hst:
    parent: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray
    rep: np.ndarray
    tin: np.ndarray
    tout: np.ndarray
    leaf_lo: np.ndarray
    leaf_hi: np.ndarray
    leaf_order: np.ndarray
    sigma_min: Optional[np.ndarray] = None

    @property
    def n_points(self) -> int:
        return self.leaf_order.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.parent.shape[0]

    @property
    def root(self) -> int:
        return self.n_nodes - 1

    @property
    def xi_factor(self) -> float:
        n = self.n_points
        return 3.0 * n * n

    def is_leaf(self, v: int) -> bool:
        return v < self.n_points

    def is_ancestor(self, a: int, b: int) -> bool:
        """True if ``a`` is ``b`` or an ancestor of ``b``."""
        return self.tin[a] <= self.tin[b] and self.tout[b] <= self.tout[a]

    def points_under(self, v: int) -> np.ndarray:
        return self.leaf_order[self.leaf_lo[v] : self.leaf_hi[v]]

    def parent_label(self, v: int) -> float:
        p = self.parent[v]
        return np.inf if p < 0 else float(self.label[p])

    def with_sigma_min(self, rank_of: np.ndarray) -> "Hst":
        """Copy carrying, per node, the smallest greedy rank below it."""
        n = self.n_points
        sig = np.empty(self.n_nodes, dtype=np.int64)
        sig[:n] = rank_of
        for v in range(n, self.n_nodes):
            sig[v] = min(sig[self.left[v]], sig[self.right[v]])
        return Hst(
            self.parent, self.left, self.right, self.label, self.rep, self.tin, self.tout,
            self.leaf_lo, self.leaf_hi, self.leaf_order, sig,
        )


def euclidean_mst(P: PointSet) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Prim's algorithm, O(n^2).  Edges are returned in the order added."""
    n = P.n
    X = P.points
    best = distances(X, X[0])
    link = np.zeros(n, dtype=np.int64)
    done = np.zeros(n, dtype=bool)
    done[0] = True
    best[0] = np.inf
    us = np.empty(n - 1, dtype=np.int64)
    vs = np.empty(n - 1, dtype=np.int64)
    ws = np.empty(n - 1, dtype=np.float64)
    for k in range(n - 1):
        v = int(np.argmin(best))
        us[k], vs[k], ws[k] = link[v], v, best[v]
        done[v] = True
        best[v] = np.inf
        d = distances(X, X[v])
        closer = (d < best) & ~done
        best[closer] = d[closer]
        link[closer] = v
    return us, vs, ws


def build_hst(P: PointSet, rank_of: Optional[np.ndarray] = None) -> Hst:
    n = P.n
    n_nodes = 2 * n - 1
    parent = np.full(n_nodes, -1, dtype=np.int64)
    left = np.full(n_nodes, -1, dtype=np.int64)
    right = np.full(n_nodes, -1, dtype=np.int64)
    label = np.zeros(n_nodes, dtype=np.float64)
    rep = np.empty(n_nodes, dtype=np.int64)
    rep[:n] = np.arange(n)

    if n > 1:
        us, vs, ws = euclidean_mst(P)
        # merging lightest-first with later indices first among equal weights
        # reproduces top-down splitting at the lowest-index heaviest edge
        merge_order = np.lexsort((-np.arange(n - 1), ws))
        uf = np.arange(n)

        def find(x: int) -> int:
            while uf[x] != x:
                uf[x] = uf[uf[x]]
                x = uf[x]
            return x

        comp_node = np.arange(n, dtype=np.int64)
        members = [[i] for i in range(n)]
        X = P.points
        nxt = n
        for e in merge_order:
            ra, rb = find(int(us[e])), find(int(vs[e]))
            a, b = int(comp_node[ra]), int(comp_node[rb])
            if rep[b] < rep[a]:
                a, b = b, a
            left[nxt], right[nxt] = a, b
            parent[a] = parent[b] = nxt
            small, big = sorted((members[ra], members[rb]), key=len)
            Xb = X[big]
            cross = max(float(distances(Xb, X[x]).max()) for x in small)
            label[nxt] = max(label[a] + label[b] + ws[e], cross)
            rep[nxt] = rep[a]
            big.extend(small)
            members[ra] = big
            members[rb] = []
            uf[rb] = ra
            comp_node[ra] = nxt
            nxt += 1

    tin = np.empty(n_nodes, dtype=np.int64)
    tout = np.empty(n_nodes, dtype=np.int64)
    leaf_lo = np.empty(n_nodes, dtype=np.int64)
    leaf_hi = np.empty(n_nodes, dtype=np.int64)
    leaf_order = np.empty(n, dtype=np.int64)
    clock = 0
    nleaf = 0
    stack = [(n_nodes - 1, False)]
    while stack:
        v, closing = stack.pop()
        if closing:
            tout[v] = clock
            leaf_hi[v] = nleaf
            clock += 1
            continue
        tin[v] = clock
        leaf_lo[v] = nleaf
        clock += 1
        if v < n:
            leaf_order[nleaf] = v
            nleaf += 1
        stack.append((v, True))
        if left[v] >= 0:
            stack.append((int(right[v]), False))
            stack.append((int(left[v]), False))

    hst = Hst(parent, left, right, label, rep, tin, tout, leaf_lo, leaf_hi, leaf_order)
    return hst.with_sigma_min(rank_of) if rank_of is not None else hst


def naive_ancestor(H: Hst, v: int, r: float) -> int:
    """anc(v, r) by walking parent pointers; ``v`` may be any node with label <= r."""
    while H.parent[v] >= 0 and H.label[H.parent[v]] <= r:
        v = int(H.parent[v])
    return v


@dataclass(frozen=True, eq=False)
class AncestorIndex:
    """Balanced edge-separator decomposition of an HST.

    Decomposition node ``x`` either stores a single HST vertex (``vertex[x]``,
    when its component has one vertex) or an HST edge ``edge[x] -> parent``
    whose removal splits the component into ``down[x]`` (below the edge) and
    ``up[x]`` (the rest).
    """

    vertex: np.ndarray
    edge: np.ndarray
    down: np.ndarray
    up: np.ndarray

    @property
    def depth(self) -> int:
        best = 0
        stack = [(0, 1)]
        while stack:
            x, d = stack.pop()
            best = max(best, d)
            if self.vertex[x] < 0:
                stack.append((int(self.down[x]), d + 1))
                stack.append((int(self.up[x]), d + 1))
        return best


def build_ancestor_index(H: Hst) -> AncestorIndex:
    vertex: list[int] = []
    edge: list[int] = []
    down: list[int] = []
    up: list[int] = []
    left, right, parent = H.left, H.right, H.parent
    mark = np.zeros(H.n_nodes, dtype=np.int64)
    stamp = 0

    def new_node() -> int:
        vertex.append(-1)
        edge.append(-1)
        down.append(-1)
        up.append(-1)
        return len(vertex) - 1

    # verts: component vertices sorted by DFS entry time, so verts[0] is its top
    root_verts = np.argsort(H.tin, kind="stable")
    work = [(new_node(), root_verts)]
    while work:
        x, verts = work.pop()
        if verts.shape[0] == 1:
            vertex[x] = int(verts[0])
            continue
        stamp += 1
        mark[verts] = stamp
        size = {}
        total = verts.shape[0]
        for v in verts[::-1].tolist():
            s = 1
            for c in (left[v], right[v]):
                if c >= 0 and mark[c] == stamp:
                    s += size[int(c)]
            size[v] = s
        top = int(verts[0])
        best_v, best_cost = -1, total + 1
        for v in verts.tolist():
            if v == top:
                continue
            cost = max(size[v], total - size[v])
            if cost < best_cost or (cost == best_cost and v < best_v):
                best_v, best_cost = v, cost
        inside = (H.tin[verts] >= H.tin[best_v]) & (H.tout[verts] <= H.tout[best_v])
        edge[x] = best_v
        dn, upn = new_node(), new_node()
        down[x], up[x] = dn, upn
        work.append((dn, verts[inside]))
        work.append((upn, verts[~inside]))
    as_arr = lambda a: np.asarray(a, dtype=np.int64)  # noqa: E731
    return AncestorIndex(as_arr(vertex), as_arr(edge), as_arr(down), as_arr(up))


def ancestor_query(A: AncestorIndex, H: Hst, p: int, r: float) -> tuple[int, int]:
    """Return ``(anc(p, r), decomposition steps)``; the root when r >= label(root)."""
    x = 0
    low = p  # HST vertex whose root path contains the answer
    steps = 0
    label, parent = H.label, H.parent
    while True:
        steps += 1
        v = A.vertex[x]
        if v >= 0:
            return int(v), steps
        u = int(A.edge[x])
        pu = int(parent[u])
        if H.is_ancestor(u, low):
            if label[u] <= r < label[pu]:
                return u, steps
            if label[u] > r:
                x = A.down[x]
            else:
                low = pu
                x = A.up[x]
        else:
            x = A.up[x]


class GapReport(NamedTuple):
    worst_ratio: float
    violations: int


def gap_check(H: Hst, P: PointSet) -> GapReport:
    """Exhaustively test d(P_z, P \\ P_z) >= label(parent(z)) / xi for every z.

    ``worst_ratio`` is the smallest observed left side divided by the right
    side; a violation is a ratio below one.
    """
    n = P.n
    if n < 2:
        return GapReport(np.inf, 0)
    D = np.stack([distances(P.points, P.points[i]) for i in range(n)])
    xi = H.xi_factor
    worst, bad = np.inf, 0
    for z in range(H.n_nodes - 1):
        inside = np.zeros(n, dtype=bool)
        inside[H.points_under(z)] = True
        gap = D[np.ix_(inside, ~inside)].min()
        ratio = gap / (H.label[H.parent[z]] / xi)
        worst = min(worst, float(ratio))
        bad += int(ratio < 1.0)
    return GapReport(worst, bad)
