"""Rough nearest-neighbor index: a randomly shifted compressed quadtree.

Coordinates are mapped exactly onto an integer grid of ``W`` bits per axis:
the box ``[0, 2)^d`` becomes ``[0, 2^W)^d``, the point set is translated so
that it occupies ``[1/2, 3/4]^d`` (up to a power-of-two scale), and a random
shift from ``[0, 1/2]^d`` is added.  Working in Python integers keeps every
point in its own leaf even when coordinates span hundreds of binary orders
of magnitude.

A query descends to the lowest node whose cell contains it and returns that
node's representative (lowest original id below it) together with the true
distance.  The returned distance never underestimates the nearest-neighbor
distance; with high probability over the shift it is within a factor
``rho = 2n`` of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .metric import PointSet, brute_force_nn

FLOAT_UNIT_BITS = 1074  # every finite double is an integer multiple of 2^-1074


def _exact_int(x: float) -> int:
    num, den = float(x).as_integer_ratio()
    return num * ((1 << FLOAT_UNIT_BITS) // den)


@dataclass(eq=False)
class RoughAnnIndex:
    width: int  # bits per axis
    origin: tuple  # exact-int lower corner of the data bounding box
    shift: tuple  # exact-int offset added after translation
    shift_float: np.ndarray
    node_depth: np.ndarray  # bits of the cell prefix; ``width`` for leaves
    node_rep: np.ndarray
    node_parent: np.ndarray
    rho: float
    P: PointSet = field(repr=False)
    _coords: list = field(init=False, repr=False)
    _children: list = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._coords = [self._grid(row) for row in self.P.rows]
        self._children = [dict() for _ in range(self.node_depth.shape[0])]
        for v in range(1, self.node_depth.shape[0]):
            p = int(self.node_parent[v])
            self._children[p][self._child_key(p, self._coords[self.node_rep[v]])] = v

    @property
    def n_nodes(self) -> int:
        return self.node_depth.shape[0]

    def _grid(self, x) -> tuple:
        top = (1 << self.width) - 1
        out = []
        for xi, o, s in zip(x, self.origin, self.shift):
            g = (1 << (self.width - 2)) + s + _exact_int(xi) - o
            out.append(min(max(g, 0), top))
        return tuple(out)

    def _child_key(self, v: int, g: tuple) -> tuple:
        bit = self.width - int(self.node_depth[v]) - 1
        return tuple((c >> bit) & 1 for c in g)

    def _in_cell(self, v: int, g: tuple) -> bool:
        drop = self.width - int(self.node_depth[v])
        ref = self._coords[self.node_rep[v]]
        return all((a >> drop) == (b >> drop) for a, b in zip(g, ref))

    def locate(self, q) -> tuple[int, int]:
        """Node owning the smallest non-empty quadtree cell that contains ``q``.

        ``q`` is clamped to the domain first.  A compressed child stands for
        the whole chain of cells between its parent's quadrant and its own
        cell, all holding the same points, so landing in the quadrant but
        outside the child's cell still resolves to the child.
        """
        g = self._grid(q)
        v, steps = 0, 1
        if not self._in_cell(0, g):
            return 0, steps
        while int(self.node_depth[v]) < self.width:
            child = self._children[v].get(self._child_key(v, g))
            if child is None:
                break
            steps += 1
            v = child
            if not self._in_cell(child, g):
                break
        return v, steps

    def query(self, q) -> tuple[int, float, int]:
        """Return ``(point id, true distance, descent steps)``."""
        v, steps = self.locate(q)
        pid = int(self.node_rep[v])
        return pid, math.dist(q, self.P.rows[pid]), steps

    def leaf_count(self) -> int:
        return int(np.sum(self.node_depth == self.width))


def build_rough(P: PointSet, seed: int = 0, shift=None) -> RoughAnnIndex:
    """Build the shifted compressed quadtree; deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    if shift is None:
        shift = rng.random(P.dim) * 0.5
    shift = np.asarray(shift, dtype=np.float64)
    ints = [[_exact_int(x) for x in row] for row in P.rows]
    origin = tuple(min(col) for col in zip(*ints))
    extent = max((max(col) - min(col) for col in zip(*ints)), default=0)
    # translated data must fit in a quarter of the [0, 2^W) box
    width = max(extent.bit_length() + 3, 64)
    half = 1 << (width - 1)
    shift_int = tuple(int(Fraction(float(s)) * half) for s in shift)

    base = 1 << (width - 2)
    coords = [tuple(base + s + c - o for c, s, o in zip(row, shift_int, origin)) for row in ints]

    depth: list[int] = []
    rep: list[int] = []
    parent: list[int] = []

    def common_depth(members: list[int]) -> int:
        d = width
        for axis in range(P.dim):
            vals = [coords[m][axis] for m in members]
            d = min(d, width - (min(vals) ^ max(vals)).bit_length())
        return d

    # iterative build: (member ids, parent node)
    work = [(list(range(P.n)), -1)]
    while work:
        members, par = work.pop()
        node = len(depth)
        parent.append(par)
        rep.append(min(members))
        if len(members) == 1:
            depth.append(width)
            continue
        d = common_depth(members)
        depth.append(d)
        bit = width - d - 1
        groups: dict[tuple, list[int]] = {}
        for m in members:
            groups.setdefault(tuple((c >> bit) & 1 for c in coords[m]), []).append(m)
        for key in sorted(groups, reverse=True):
            work.append((groups[key], node))

    return RoughAnnIndex(
        width=width,
        origin=origin,
        shift=shift_int,
        shift_float=shift,
        node_depth=np.asarray(depth, dtype=np.int64),
        node_rep=np.asarray(rep, dtype=np.int64),
        node_parent=np.asarray(parent, dtype=np.int64),
        rho=2.0 * P.n,
        P=P,
    )


@dataclass(eq=False)
class ExactRough:
    """Brute-force stand-in with the same query surface, for differential tests."""

    P: PointSet = field(repr=False)
    rho: float = 1.0

    def query(self, q) -> tuple[int, float, int]:
        pid, d = brute_force_nn(self.P, np.asarray(q))
        return pid, math.dist(q, self.P.rows[pid]), 1


def rough_query(R, q) -> tuple[int, float]:
    """``(point id, distance)`` from either rough backend."""
    pid, ell, _ = R.query(tuple(map(float, q)))
    return pid, ell
