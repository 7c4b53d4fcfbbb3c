"""Exhaustive invariant checkers for test builds.

Every checker returns a list of human-readable violations; an empty list
means the structure passed.  All of them are quadratic or worse and meant for
instances of a few hundred points.
"""

from __future__ import annotations

import bisect
import math
from typing import Optional

import numpy as np

from .greedy import GreedyOrder
from .hst import AncestorIndex, Hst, ancestor_query, gap_check
from .metric import PointSet, distances
from .multires import MultiResIndex, pow2, res
from .navgraph import NavGraph, QueryStats
from .reverse_tree import BALL_FACTOR, ReverseTree


def distance_matrix(P: PointSet) -> np.ndarray:
    return np.stack([distances(P.points, P.points[i]) for i in range(P.n)])


def check_greedy(P: PointSet, g: GreedyOrder) -> list[str]:
    """Radius monotonicity, exact radii and farthest choice, prefix packing."""
    bad = []
    n = g.n
    if sorted(g.order.tolist()) != list(range(n)):
        return ["order is not a permutation"]
    if not np.array_equal(g.rank_of[g.order], np.arange(n)):
        bad.append("rank_of is not the inverse of order")
    Xo = P.points[g.order]
    if np.any(np.diff(g.radii) > 0):
        bad.append("radii increase somewhere")
    d0 = distances(Xo, Xo[0])
    if g.radii[0] != d0.max():
        bad.append("radius of rank 0 is not the largest distance from it")
    to_prefix = d0.copy()
    sep = math.inf
    for i in range(1, n):
        remaining = to_prefix[i:]
        if to_prefix[i] != g.radii[i]:
            bad.append(f"rank {i}: radius {g.radii[i]} != distance to prefix {to_prefix[i]}")
        if remaining.max() != g.radii[i]:
            bad.append(f"rank {i} is not a farthest remaining point")
        sep = min(sep, float(distances(Xo[:i], Xo[i]).min()))
        # prefix 0..i is an (r_i, r_{i+1}) packing
        if sep < g.radii[i]:
            bad.append(f"prefix {i} separation {sep} below radius {g.radii[i]}")
        np.minimum(to_prefix, distances(Xo, Xo[i]), out=to_prefix)
        cover = float(to_prefix.max())
        nxt = float(g.radii[i + 1]) if i + 1 < n else 0.0
        if cover > nxt:
            bad.append(f"prefix {i} covering radius {cover} exceeds {nxt}")
    return bad


def check_friends(P: PointSet, g: GreedyOrder) -> list[str]:
    bad = []
    Xo = P.points[g.order]
    for i in range(g.n):
        d = distances(Xo[:i], Xo[i])
        want = np.flatnonzero(d <= g.c_const * float(g.radii[i]) / g.eps)
        if not np.array_equal(g.friends(i), want):
            bad.append(f"rank {i}: friends list differs from the ball query")
    return bad


def check_graph(g: GreedyOrder, G: NavGraph) -> list[str]:
    """Edges point forward, lists ascend, labels match radii, edges mirror friends."""
    bad = []
    if G.edge_count != g.edge_count:
        bad.append(f"edge count {G.edge_count} != friends total {g.edge_count}")
    edges = set()
    for i in range(G.n):
        out = G.out_edges(i)
        if out.size and out.min() <= i:
            bad.append(f"rank {i} has a backward or self edge")
        if np.any(np.diff(out) <= 0):
            bad.append(f"rank {i} out-list not strictly ascending")
        lab = G.out_labels(i)
        if not np.array_equal(lab, g.radii[out]):
            bad.append(f"rank {i} labels differ from destination radii")
        if np.any(np.diff(lab) > 0):
            bad.append(f"rank {i} labels increase")
        edges.update((i, int(j)) for j in out.tolist())
    friends = {(int(j), i) for i in range(g.n) for j in g.friends(i).tolist()}
    if edges != friends:
        bad.append("edge set differs from reversed friends relation")
    return bad


def check_hst(P: PointSet, H: Hst, D: Optional[np.ndarray] = None) -> list[str]:
    """Labels, representatives, expansiveness, distortion <= n-1 and the gap property."""
    bad = []
    n = P.n
    D = distance_matrix(P) if D is None else D
    if np.any(H.label[:n] != 0) or np.any(H.label[n:] <= 0):
        bad.append("leaf labels must be zero and internal labels positive")
    for v in range(n, H.n_nodes):
        a, b = int(H.left[v]), int(H.right[v])
        if H.parent[a] != v or H.parent[b] != v:
            bad.append(f"node {v}: child/parent links disagree")
        if H.label[a] > H.label[v] or H.label[b] > H.label[v]:
            bad.append(f"node {v}: child label exceeds parent label")
        if H.rep[v] not in (H.rep[a], H.rep[b]) or H.rep[v] != H.points_under(v).min():
            bad.append(f"node {v}: representative is not the lowest id below it")
        cross = D[np.ix_(H.points_under(a), H.points_under(b))]
        if cross.max() > H.label[v]:
            bad.append(f"node {v}: not expansive ({cross.max()} > {H.label[v]})")
        if H.label[v] > (n - 1) * cross.min():
            bad.append(f"node {v}: distortion above n-1")
    if H.sigma_min is not None:
        for v in range(H.n_nodes):
            pts = H.points_under(v)
            # a leaf's sigma_min is its point's rank
            if H.sigma_min[v] != H.sigma_min[pts].min():
                bad.append(f"node {v}: sigma_min wrong")
    if n > 1:
        rep = gap_check(H, P)
        if rep.violations:
            bad.append(f"gap property violated at {rep.violations} nodes")
    return bad


def check_reverse_tree(P: PointSet, g: GreedyOrder, T: ReverseTree) -> list[str]:
    """Parent rule and the radius growth properties along every upward path."""
    bad = []
    Xo = P.points[g.order]
    R = g.radii
    for i in range(1, g.n):
        p = int(T.parent[i])
        d = distances(Xo[:i], Xo[i])
        if p != int(np.argmax(d <= BALL_FACTOR * R[i])):
            bad.append(f"rank {i}: parent is not the first rank in the ball")
            continue
        L = float(d[p])
        if not R[i] <= R[p]:
            bad.append(f"rank {i}: radius decreases upward")
        if not R[i] <= L <= BALL_FACTOR * R[i]:
            bad.append(f"rank {i}: edge length outside [R, 8R]")
        if not L <= R[p]:
            bad.append(f"rank {i}: edge length exceeds parent radius")
        gp = int(T.parent[p])
        if gp >= 0 and not R[gp] >= 4 * R[i]:
            bad.append(f"rank {i}: grandparent radius below 4x")
    if T.parent[0] != -1:
        bad.append("rank 0 must be the root")
    return bad


class PathOracle:
    """Leaf-to-root walks precomputed once, so ``anc(p, r)`` is a bisection.

    Labels never decrease going up, so the walk from ``p`` stops at the last
    path node whose label is at most ``r``.
    """

    def __init__(self, H: Hst):
        self.paths: list[list[int]] = []
        self.labels: list[list[float]] = []
        for p in range(H.n_points):
            path, v = [], p
            while v >= 0:
                path.append(v)
                v = int(H.parent[v])
            self.paths.append(path)
            self.labels.append([float(H.label[v]) for v in path])

    def anc(self, p: int, r: float) -> int:
        k = bisect.bisect_right(self.labels[p], r)
        return self.paths[p][max(k - 1, 0)]


def check_ancestor_index(H: Hst, A: AncestorIndex, oracle: Optional[PathOracle] = None) -> list[str]:
    """anc(p, r) against the parent walk at every breakpoint on every leaf path.

    The answer only changes at labels on the leaf's root path, so testing
    each such label and the value just below it covers every distinct case.
    """
    bad = []
    oracle = PathOracle(H) if oracle is None else oracle
    for p in range(H.n_points):
        probes = [0.0, math.inf]
        for lab in oracle.labels[p]:
            probes += [lab, math.nextafter(lab, -math.inf), lab * 1.5]
        for r in probes:
            if r < 0:
                continue
            got, _ = ancestor_query(A, H, p, r)
            want = oracle.anc(p, r)
            if got != want:
                bad.append(f"anc({p}, {r}) = {got}, walk gives {want}")
    return bad


def ancestor_split_excess(A: AncestorIndex) -> float:
    """Largest ``part - 2N/3`` over all splits of an ``N``-vertex component."""
    size = np.zeros(A.vertex.shape[0], dtype=np.int64)
    # children of a decomposition node are created after it
    for x in range(A.vertex.shape[0] - 1, -1, -1):
        size[x] = 1 if A.vertex[x] >= 0 else size[A.down[x]] + size[A.up[x]]
    worst = -math.inf
    for x in range(A.vertex.shape[0]):
        if A.vertex[x] < 0:
            part = max(size[A.down[x]], size[A.up[x]])
            worst = max(worst, part - 2.0 * size[x] / 3.0)
    return worst


def check_multires(
    MR: MultiResIndex, D: Optional[np.ndarray] = None, oracle: Optional[PathOracle] = None
) -> list[str]:
    """Cluster heads against direct ancestor walks and the cluster diameter/closest-pair bounds."""
    bad = []
    H, M = MR.hst, MR.M
    D = distance_matrix(MR.P) if D is None else D
    oracle = PathOracle(H) if oracle is None else oracle
    for i, sl in MR.slices.items():
        R = pow2(i + M)
        for s, h in zip(sl.members.tolist(), sl.heads.tolist()):
            want = oracle.anc(s, R)
            if h != want:
                bad.append(f"slice {i}: head of {s} is {h}, walk gives {want}")
        for h, members in sl.clusters().items():
            gids = np.unique(sl.graph_ids[sl.heads == h])
            if gids.shape[0] != 1 or not np.array_equal(MR.graphs[int(gids[0])].members, members):
                bad.append(f"slice {i}: cluster {h} is not backed by one graph over its members")
            if members.shape[0] < 2:
                continue
            sub = D[np.ix_(members, members)]
            diam = sub.max()
            cp = sub[~np.eye(members.shape[0], dtype=bool)].min()
            if diam > R:
                bad.append(f"slice {i}: cluster {h} diameter {diam} > 2^(i+M)")
            if cp < pow2(i - 2 * M):
                bad.append(f"slice {i}: cluster {h} closest pair {cp} < 2^(i-2M)")
    return bad


def check_slice_membership(MR: MultiResIndex) -> list[str]:
    """Slices equal the representatives of the nodes active at each resolution."""
    from .multires import active_resolutions

    want: dict[int, set] = {}
    for v, rs in enumerate(active_resolutions(MR.hst, MR.M)):
        for i in rs:
            want.setdefault(i, set()).add(int(MR.hst.rep[v]))
    got = {i: set(sl.members.tolist()) for i, sl in MR.slices.items()}
    return [] if got == want else ["slice membership differs from the active-resolution definition"]


def hop_bound(eps: float, delta: float, ell_star: float) -> int:
    """ceil(log_{1/(1-eps/4)}(13 Delta / ell*))."""
    return math.ceil(math.log(13.0 * delta / ell_star) / -math.log1p(-eps / 4.0))


def check_stage2_trace(
    stats: QueryStats, eps: float, c: float, delta: float
) -> list[str]:
    """Monotone progress, forward scanning and the inspected-label interval."""
    bad = []
    tr = stats.trace
    if tr is None:
        return ["query ran without a trace"]
    shrink = 1.0 - eps / 4.0
    dists = [d for _, d in tr.visited]
    for a, b in zip(dists, dists[1:]):
        if not b <= shrink * a:
            bad.append("visited distances do not shrink by 1 - eps/4")
    dests = [j for _, j, _ in tr.inspected]
    if any(b <= a for a, b in zip(dests, dests[1:])):
        bad.append("inspected destinations are not strictly increasing")
    labels = [lab for _, _, lab in tr.inspected]
    if any(b > a for a, b in zip(labels, labels[1:])):
        bad.append("inspected labels increase")
    if labels and max(labels) > c * delta:
        bad.append("inspected label above c * Delta")
    final = dists[-1] if dists else 0.0
    body = labels[:-1] if stats.stop_reason == "label_below_threshold" else labels
    if body and min(body) < (eps / 4.0) * final:
        bad.append("inspected label below the stop threshold before stopping")
    if stats.hops != len(dists) - 1:
        bad.append("hop counter disagrees with the trace")
    return bad


def band_counts(labels) -> dict[int, int]:
    """Inspected edges per dyadic label band ``[2^k, 2^(k+1))``."""
    out: dict[int, int] = {}
    for lab in labels:
        if lab > 0:
            k = res(float(lab))
            out[k] = out.get(k, 0) + 1
    return out


def start_is_healthy(P: PointSet, g: GreedyOrder, q, psi: int) -> bool:
    """No rank before ``psi`` is strictly closer to ``q`` than ``psi`` itself."""
    Xo = P.points[g.order[: psi + 1]]
    d = distances(Xo, q)
    return bool(d[:psi].size == 0 or d[:psi].min() >= d[psi])
