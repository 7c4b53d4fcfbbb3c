import numpy as np
import pytest
from hypothesis import given, strategies as st

from sfann.errors import ConfigError
from sfann.greedy import build_friends, build_greedy, make_greedy, restrict_friends
from sfann.metric import PointSet
from sfann.verify import check_friends, check_greedy

from conftest import random_points


def test_line_example(line4):
    order, radii = build_greedy(line4, 0)
    assert order.tolist() == [0, 1, 2, 3]
    assert radii.tolist() == [10.0, 10.0, 4.0, 3.0]
    g = make_greedy(line4, 0.5)
    # rank 2 is point 4 with radius 4: the ball of radius 208 holds both earlier points
    assert g.friends(2).tolist() == [0, 1]
    assert g.friends(1).tolist() == [0]
    assert g.friends(3).tolist() == [0, 1, 2]
    assert g.edge_count == 6


def test_two_points():
    P = PointSet(np.array([[1.0, 1.0], [4.0, 5.0]]))
    order, radii = build_greedy(P, 1)
    assert order.tolist() == [1, 0]
    assert radii.tolist() == [5.0, 5.0]


def test_farthest_ties_go_to_lowest_id():
    P = PointSet(np.array([[0.0], [-1.0], [1.0], [0.5]]))
    order, _ = build_greedy(P, 0)
    assert order[:3].tolist() == [0, 1, 2]


def test_parameter_validation(line4):
    for eps in (0.0, -0.1, 0.51, 1.0, float("nan")):
        with pytest.raises(ConfigError):
            make_greedy(line4, eps)
    with pytest.raises(ConfigError):
        make_greedy(line4, 0.25, c=25.9)
    g = make_greedy(line4, 0.25, c=40.0)
    assert g.c_const == 40.0


def test_friends_grow_as_eps_shrinks(rng):
    P = random_points(rng, 120, 2)
    order, radii = build_greedy(P, 0)
    sizes = [build_friends(P, order, radii, eps)[0][-1] for eps in (0.5, 0.25, 0.1, 0.05)]
    assert sizes == sorted(sizes)


def test_restrict_matches_fresh_build(rng):
    for _ in range(5):
        P = random_points(rng, 80, 3)
        fine = make_greedy(P, 0.1)
        coarse = restrict_friends(P, fine, 0.5)
        fresh = make_greedy(P, 0.5)
        assert np.array_equal(coarse.friend_offsets, fresh.friend_offsets)
        assert np.array_equal(coarse.friend_ranks, fresh.friend_ranks)
        assert coarse.eps == 0.5


def test_exhaustive_checks_on_random_sets(rng):
    for n, dim in ((2, 1), (30, 1), (60, 2), (90, 4), (50, 8)):
        P = random_points(rng, n, dim)
        g = make_greedy(P, 0.25, start=int(rng.integers(n)))
        assert check_greedy(P, g) == []
        assert check_friends(P, g) == []
        assert all(g.friends(i).size > 0 for i in range(1, n))


@given(st.integers(2, 60), st.integers(1, 4), st.sampled_from([0.49, 0.25, 0.1]), st.integers(0, 10**6))
def test_greedy_invariants_property(n, dim, eps, seed):
    rng = np.random.default_rng(seed)
    P = random_points(rng, n, dim, scale=10.0 ** rng.uniform(-5, 5))
    g = make_greedy(P, eps, start=int(rng.integers(n)))
    assert check_greedy(P, g) == []
    assert check_friends(P, g) == []
    again = make_greedy(P, eps, start=int(g.order[0]))
    assert np.array_equal(again.order, g.order)
