"""Spread-independent two-stage ANN search over the greedy-permutation graph.

Stage I turns a rough neighbor ``p`` at distance ``ell`` into a start
vertex: it takes the HST ancestor of ``p`` at scale ``Gamma = 3 n^4 ell /
eps``, the first greedy rank inside that subtree, climbs the reverse tree
until the radius exceeds ``Delta = n^2 Gamma``, and picks the friend of that
rank closest to the query.

Stage II is greedy routing from there that ignores out-edges labelled above
``c * Delta`` and stops at the first inspected edge whose label drops below
``eps/4`` of the current distance.  Inspected destinations only move forward
in the permutation, so labels are inspected in non-increasing order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .greedy import FRIEND_CONST, GreedyOrder, check_eps, make_greedy, restrict_friends
from .hst import AncestorIndex, Hst, ancestor_query, build_ancestor_index, build_hst
from .metric import PointSet, as_query
from .navgraph import NavGraph, QueryStats, SearchTrace, build_graph
from .reverse_tree import ReverseTree, ascend, build_reverse_tree
from .rough import ExactRough, build_rough

BOOTSTRAP_FACTOR = 8.0
COARSE_EPS = 0.5


def stage1_scales(n: int, eps: float, ell: float) -> tuple[float, float]:
    """``(Gamma, Delta) = (3 n^4 ell / eps, n^2 Gamma)``."""
    gamma = 3.0 * float(n) ** 4 * ell / eps
    return gamma, float(n) ** 2 * gamma


def stops_at(label: float, eps: float, d_current: float) -> bool:
    """Stage II stop rule for an inspected edge label."""
    return label < (eps / 4.0) * d_current


@dataclass(eq=False)
class SpreadFreeIndex:
    P: PointSet
    greedy: GreedyOrder
    graph: NavGraph
    hst: Hst
    anc: AncestorIndex
    rev: ReverseTree
    rough: object
    seed: int = 0
    _coarse: Optional["SpreadFreeIndex"] = field(default=None, repr=False)

    @classmethod
    def build(
        cls,
        P: PointSet,
        eps: float,
        c: float = FRIEND_CONST,
        start: int = 0,
        seed: int = 0,
        rough: str = "quadtree",
    ) -> "SpreadFreeIndex":
        eps = check_eps(eps)
        greedy = make_greedy(P, eps, c, start)
        hst = build_hst(P, greedy.rank_of)
        if rough == "quadtree":
            R = build_rough(P, seed)
        elif rough == "exact":
            R = ExactRough(P)
        else:
            raise ValueError(f"unknown rough backend {rough!r}")
        return cls(
            P=P,
            greedy=greedy,
            graph=build_graph(greedy),
            hst=hst,
            anc=build_ancestor_index(hst),
            rev=build_reverse_tree(P, greedy),
            rough=R,
            seed=seed,
        )

    @property
    def eps(self) -> float:
        return self.greedy.eps

    @property
    def n(self) -> int:
        return self.P.n

    def coarsened(self, eps: float = COARSE_EPS) -> "SpreadFreeIndex":
        """Sibling index with a larger eps sharing everything but the graph."""
        if self._coarse is None or self._coarse.eps != eps:
            greedy = restrict_friends(self.P, self.greedy, eps)
            self._coarse = SpreadFreeIndex(
                self.P, greedy, build_graph(greedy), self.hst, self.anc, self.rev, self.rough, self.seed
            )
        return self._coarse

    def _dist(self, q: tuple, rank: int, stats: QueryStats) -> float:
        stats.dist_evals += 1
        return math.dist(q, self.P.rows[self.greedy.order[rank]])

    def closest_friend(self, q: tuple, rank: int, stats: QueryStats) -> int:
        """Closest rank to ``q`` among ``rank`` and its friends (lowest rank on ties)."""
        best, best_d = -1, math.inf
        for j in self.greedy.friends(rank).tolist() + [rank]:
            stats.friends_scanned += 1
            d = self._dist(q, j, stats)
            if d < best_d:
                best, best_d = j, d
        return best

    def stage1(self, q: tuple, stats: QueryStats) -> tuple[int, float, Optional[int]]:
        """Return ``(start rank, Delta, exact hit id or None)``."""
        pid, ell, steps = self.rough.query(q)
        stats.rough_time_steps += steps
        stats.dist_evals += 1
        if ell == 0.0:
            return int(self.greedy.rank_of[pid]), 0.0, pid
        gamma, delta = stage1_scales(self.n, self.eps, ell)
        u, asteps = ancestor_query(self.anc, self.hst, pid, gamma)
        stats.ancestor_steps += asteps
        tau = int(self.hst.sigma_min[u])
        xi, rsteps = ascend(self.rev, self.greedy.radii, tau, delta)
        stats.reverse_steps += rsteps
        return self.closest_friend(q, xi, stats), delta, None

    def stage2(self, q: tuple, psi: int, delta: float, stats: QueryStats) -> int:
        G, order, rows = self.graph, self.greedy.order, self.P.rows
        offsets, targets, labels = G.offsets, G.targets, G.labels
        shrink = 1.0 - self.eps / 4.0
        trace = stats.trace
        cur = psi
        dcur = self._dist(q, cur, stats)
        if trace is not None:
            trace.visited.append((cur, dcur))
        pos = G.first_label_at_most(cur, self.greedy.c_const * delta)
        end = int(offsets[cur + 1])
        stats.stop_reason = "list_exhausted"
        scanned = 0
        while pos < end:
            j = int(targets[pos])
            lab = float(labels[pos])
            scanned += 1
            if trace is not None:
                trace.inspected.append((cur, j, lab))
            if stops_at(lab, self.eps, dcur):
                stats.stop_reason = "label_below_threshold"
                break
            dj = math.dist(q, rows[order[j]])
            stats.dist_evals += 1
            if dj <= shrink * dcur:
                cur, dcur = j, dj
                stats.hops += 1
                if trace is not None:
                    trace.visited.append((cur, dcur))
                # every out-edge of the new vertex already lies past j,
                # so its list start is the forward-scan resume point
                pos, end = int(offsets[cur]), int(offsets[cur + 1])
            else:
                pos += 1
        stats.edges_scanned += scanned
        stats.stage2_edges = scanned
        return cur

    def query(self, q, trace: bool = False) -> tuple[int, float, QueryStats]:
        """Return ``(original id, distance, stats)`` of a (1+eps)-ANN of ``q``."""
        qt = as_query(q, self.P.dim)
        stats = QueryStats(trace=SearchTrace() if trace else None)
        if self.n == 1:
            return 0, math.dist(qt, self.P.rows[0]), stats
        psi, delta, hit = self.stage1(qt, stats)
        if hit is not None:
            stats.stop_reason = "exact_hit"
            return hit, 0.0, stats
        rank = self.stage2(qt, psi, delta, stats)
        pid = int(self.greedy.order[rank])
        return pid, math.dist(qt, self.P.rows[pid]), stats


def bootstrap_query(
    coarse: SpreadFreeIndex,
    fine: SpreadFreeIndex,
    q,
    factor: float = BOOTSTRAP_FACTOR,
    trace: bool = False,
) -> tuple[int, float, QueryStats]:
    """Answer with ``fine`` after a constant-factor estimate from ``coarse``.

    The coarse answer's distance ``ell`` sets ``Delta' = factor * ell /
    eps_fine``; the fine search climbs the reverse tree from the coarse
    answer to the first radius above ``Delta'`` and runs Stage II from the
    closest friend there.
    """
    if coarse.P is not fine.P and not np.array_equal(coarse.P.points, fine.P.points):
        raise ValueError("coarse and fine indices must share a point set")
    qt = as_query(q, fine.P.dim)
    a, ell, cstats = coarse.query(qt)
    stats = QueryStats(trace=SearchTrace() if trace else None)
    stats.absorb(cstats)
    if ell == 0.0 or fine.n == 1:
        stats.stop_reason = cstats.stop_reason
        return a, ell, stats
    delta = factor * ell / fine.eps
    xi, rsteps = ascend(fine.rev, fine.greedy.radii, int(fine.greedy.rank_of[a]), delta)
    stats.reverse_steps += rsteps
    psi = fine.closest_friend(qt, xi, stats)
    rank = fine.stage2(qt, psi, delta, stats)
    pid = int(fine.greedy.order[rank])
    return pid, math.dist(qt, fine.P.rows[pid]), stats
