import math

import numpy as np
from hypothesis import given, strategies as st

from sfann.greedy import make_greedy
from sfann.metric import PointSet, gen_dataset
from sfann.reverse_tree import ascend, build_reverse_tree
from sfann.verify import check_reverse_tree

from conftest import random_points


def test_line_example(line4):
    g = make_greedy(line4, 0.5)
    T = build_reverse_tree(line4, g)
    assert T.parent.tolist() == [-1, 0, 0, 0]
    assert ascend(T, g.radii, 3, 5.0) == (0, 1)
    assert ascend(T, g.radii, 3, 0.0) == (3, 0)
    assert ascend(T, g.radii, 2, 1e9)[0] == 0
    assert check_reverse_tree(line4, g, T) == []


def test_two_points():
    P = PointSet(np.array([[0.0], [3.0]]))
    g = make_greedy(P, 0.25)
    assert build_reverse_tree(P, g).parent.tolist() == [-1, 0]


def _check_ascend(P, g, T, rng, calls=200):
    R = g.radii
    span = math.log(R[0] / R[-1], 4) if R[-1] > 0 else 0
    for _ in range(calls):
        start = int(rng.integers(g.n))
        thr = float(R[start] * 10.0 ** rng.uniform(-1, 4))
        got, steps = ascend(T, R, start, thr)
        path = T.path_to_root(start)
        want = next((v for v in path if R[v] > thr), 0)
        assert got == want
        assert steps <= 2 * math.ceil(span) + 2
        if got != start:
            below = path[path.index(got) - 1]
            assert math.dist(P.rows[g.order[start]], P.rows[g.order[got]]) <= 12 * max(thr, R[below])


def test_random_and_geochain(rng):
    for P in (random_points(rng, 150, 2), random_points(rng, 100, 5), gen_dataset("geochain", 200, 1, 0)):
        g = make_greedy(P, 0.25)
        T = build_reverse_tree(P, g)
        assert check_reverse_tree(P, g, T) == []
        _check_ascend(P, g, T, rng)


@given(st.integers(2, 80), st.integers(1, 3), st.integers(0, 10**6))
def test_reverse_tree_property(n, dim, seed):
    rng = np.random.default_rng(seed)
    P = random_points(rng, n, dim)
    g = make_greedy(P, 0.49, start=int(rng.integers(n)))
    T = build_reverse_tree(P, g)
    assert check_reverse_tree(P, g, T) == []
    _check_ascend(P, g, T, rng, calls=30)
