"""Position utilities and the FiniteTree container."""

from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from treemeasure.errors import BudgetError, InputError
from treemeasure.trees import (
    FiniteTree,
    bfs_rank,
    check_enumeration_budget,
    common_prefix,
    distance,
    enumerate_full_trees,
    full_node_count,
    full_tree_count,
    is_position,
    positions_up_to,
    restrict_to_depth,
    tree_at_index,
)

positions = st.text(alphabet="LR", max_size=8)


def test_is_position():
    assert is_position("")
    assert is_position("LRL")
    assert not is_position("LRX")
    assert not is_position("lr")


def test_bfs_rank_first_levels():
    ordered = sorted(["", "L", "R", "LL", "LR", "RL", "RR"], key=bfs_rank)
    assert ordered == ["", "L", "R", "LL", "LR", "RL", "RR"]
    assert [bfs_rank(p) for p in ordered] == list(range(7))


def test_positions_up_to():
    assert positions_up_to(1) == ("", "L", "R")
    assert len(positions_up_to(3)) == full_node_count(3) == 15


@given(positions, positions)
def test_distance_symmetry(u, v):
    assert distance(u, v) == distance(v, u)
    assert distance(u, u) == 0


@given(positions, positions, positions)
def test_distance_triangle(u, v, w):
    assert distance(u, w) <= distance(u, v) + distance(v, w)


@given(positions, positions)
def test_distance_positive(u, v):
    if u != v:
        assert distance(u, v) >= 1


def test_distance_examples():
    assert distance("L", "R") == 2
    assert distance("", "LRL") == 3
    assert distance("LL", "LR") == 2
    assert common_prefix("LRL", "LRRR") == "LR"


def test_full_tree_factory():
    t = FiniteTree.full(("a", "b"), 1, ("a", "b", "a"))
    assert t.is_full() and t.height == 1 and t.node_count == 3
    assert t.label("") == "a" and t.label("L") == "b" and t.label("R") == "a"
    assert t.ball_measure() == Fraction(1, 2**3)


def test_full_factory_validates():
    with pytest.raises(InputError):
        FiniteTree.full(("a", "b"), 1, ("a", "b"))
    with pytest.raises(InputError):
        FiniteTree.full(("a", "b"), 0, ("c",))


def test_from_map_sparse():
    t = FiniteTree.from_map(("a", "b"), {"": "a", "L": "b"})
    assert not t.is_full()
    assert t.node_count == 2
    assert "R" not in t
    with pytest.raises(InputError):
        t.label("R")


def test_from_map_requires_prefix_closed():
    with pytest.raises(InputError):
        FiniteTree.from_map(("a", "b"), {"": "a", "LL": "b"})
    with pytest.raises(InputError):
        FiniteTree.from_map(("a", "b"), {"L": "a"})


def test_dense_sparse_equality():
    dense = FiniteTree.full(("a", "b"), 1, ("a", "b", "a"))
    sparse = FiniteTree.from_map(("a", "b"), {"": "a", "L": "b", "R": "a"})
    assert dense == sparse
    assert hash(dense) == hash(sparse)


def test_from_generator():
    t = FiniteTree.from_generator(("a", "b"), lambda p: "a" if len(p) % 2 == 0 else "b", 2)
    assert t.is_full() and t.height == 2
    assert t.label("") == "a" and t.label("L") == "b" and t.label("LL") == "a"


def test_subtree_at():
    t = FiniteTree.full(("a", "b"), 2, tuple("abbaabb"))
    sub = t.subtree_at("L")
    assert sub.is_full() and sub.height == 1
    assert sub.label("") == t.label("L")
    assert sub.label("L") == t.label("LL")
    with pytest.raises(InputError):
        FiniteTree.from_map(("a",), {"": "a"}).subtree_at("L")


def test_restrict_to_depth_tree_and_callable():
    t = FiniteTree.full(("a", "b"), 2, tuple("abbaabb"))
    cut = restrict_to_depth(t, 1)
    assert cut.height == 1 and cut.label("R") == t.label("R")
    gen = restrict_to_depth(lambda p: "b", 1, alphabet=("a", "b"))
    assert gen.is_full() and set(gen.labels.values()) == {"b"}


@given(st.integers(0, 2), st.integers(0, 2))
def test_restrict_composes(h1, h2):
    t = FiniteTree.from_generator(("a", "b"), lambda p: "ab"[p.count("L") % 2], 3)
    a = restrict_to_depth(restrict_to_depth(t, max(h1, h2)), min(h1, h2))
    b = restrict_to_depth(t, min(h1, h2))
    assert a == b


def test_ball_measures_sum_to_one():
    for alphabet, h in ((("a", "b"), 1), (("a", "b", "c"), 1), (("a", "b"), 2)):
        total = sum(t.ball_measure() for t in enumerate_full_trees(alphabet, h))
        assert total == 1


def test_enumeration_count_and_distinct():
    trees = list(enumerate_full_trees(("a", "b"), 1))
    assert len(trees) == full_tree_count(2, 1) == 8
    assert len(set(trees)) == 8


def test_tree_at_index_matches_enumeration():
    trees = list(enumerate_full_trees(("a", "b", "c"), 1))
    for i in (0, 5, 26):
        assert tree_at_index(("a", "b", "c"), 1, i) == trees[i]
    ranged = list(enumerate_full_trees(("a", "b", "c"), 1, start=5, stop=9))
    assert ranged == trees[5:9]


def test_budget_errors():
    with pytest.raises(BudgetError) as info:
        check_enumeration_budget(("a", "b"), 6, budget=1000)
    assert info.value.required == 2**127
    with pytest.raises(BudgetError):
        list(enumerate_full_trees(("a", "b"), 6, budget=1000))


def test_full_node_count():
    assert [full_node_count(h) for h in range(4)] == [1, 3, 7, 15]
