"""Pattern engine: structure, homomorphisms, satisfiability, measure,
compilation to the safety engine."""

import random
from fractions import Fraction

import pytest

from treemeasure.cq import (
    Pattern,
    check_homomorphism,
    compile_pattern_to_safety,
    connections_graph,
    count_prefix_matches,
    firm_decomposition,
    is_firm,
    is_satisfiable,
    measure_cq,
    root_subpattern,
    satisfying_assignment,
)
from treemeasure.errors import InputError, ResourceError
from treemeasure.safety import exact_depth_measure
from treemeasure.trees import FiniteTree, enumerate_full_trees, full_tree_count

from . import oracles
from .conftest import sample_pattern

AB = ("a", "b")


def rooted_a():
    return Pattern.build(AB, ["x"], roots=["x"], labels={"x": "a"})


def left_child_ab():
    return Pattern.build(
        AB, ["x", "y"], roots=["x"], edges=[("x", "L", "y")], labels={"x": "a", "y": "b"}
    )


def some_child_ab():
    return Pattern.build(
        AB, ["x", "y"], roots=["x"], edges=[("x", "S", "y")], labels={"x": "a", "y": "b"}
    )


def unsat_diamond():
    # w would have to be y's left child and z's right child at once
    return Pattern.build(
        AB,
        ["x", "y", "z", "w"],
        roots=["x"],
        edges=[("x", "L", "y"), ("x", "R", "z"), ("y", "L", "w"), ("z", "R", "w")],
    )


def sat_diamond():
    # size 8: enumeration would need 2^511 trees, compile mode handles it
    return Pattern.build(
        AB,
        ["x", "y", "z", "w"],
        roots=["x"],
        edges=[("x", "L", "y"), ("x", "S", "z"), ("y", "S", "w"), ("z", "D", "w")],
        labels={"x": "a", "w": "b"},
    )


# -- construction and validation -----------------------------------------------


def test_pattern_validation_errors():
    with pytest.raises(InputError):
        Pattern.build((), ["x"])
    with pytest.raises(InputError):
        Pattern.build(AB, ["x", "x"])
    with pytest.raises(InputError):
        Pattern.build(AB, ["x"], edges=[("x", "Z", "x")])
    with pytest.raises(InputError):
        Pattern.build(AB, ["x"], edges=[("x", "L", "ghost")])
    with pytest.raises(InputError):
        Pattern.build(AB, ["x"], roots=["ghost"])
    with pytest.raises(InputError):
        Pattern.build(AB, ["x"], labels={"x": "z"})
    with pytest.raises(InputError):
        Pattern(AB, ("x",), frozenset(), (), (("x", "a"), ("x", "b")))


def test_pattern_value_semantics():
    p = Pattern(AB, ("x", "y"), frozenset(["x"]), (("x", "L", "y"),), (("y", "b"), ("x", "a")))
    q = Pattern(AB, ("x", "y"), frozenset(["x"]), (("x", "L", "y"),), (("x", "a"), ("y", "b")))
    assert p == q and hash(p) == hash(q)
    assert p.labelling == (("x", "a"), ("y", "b"))
    assert p.size == 3
    assert p.label_map == {"x": "a", "y": "b"}


def test_degree_counts_root_marks():
    p = left_child_ab()
    assert p.degree("x") == 2  # one edge plus the root mark
    assert p.degree("y") == 1


# -- firm decomposition ----------------------------------------------------------


def test_child_edges_connect_both_ways():
    assert is_firm(left_child_ab())
    assert is_firm(some_child_ab())
    assert is_firm(unsat_diamond())


def test_descendant_edge_connects_one_way():
    p = Pattern.build(
        AB, ["x", "y"], roots=["x"], edges=[("x", "D", "y")], labels={"x": "a", "y": "b"}
    )
    comps = firm_decomposition(p)
    assert len(comps) == 2
    assert {tuple(c.vertices) for c in comps} == {("x",), ("y",)}
    g = connections_graph(p)
    assert g.has_edge("x", "y") and not g.has_edge("y", "x")


def test_root_marks_reach_one_way():
    # a root mark reaches every vertex but is only reached back through
    # another root mark, so an isolated unrooted vertex stays separate
    one_mark = Pattern.build(AB, ["x", "y"], roots=["x"])
    assert len(firm_decomposition(one_mark)) == 2
    both_marked = Pattern.build(AB, ["x", "y"], roots=["x", "y"])
    assert len(firm_decomposition(both_marked)) == 1


def test_root_subpattern_selection():
    p = Pattern.build(
        AB, ["x", "y"], roots=["x"], edges=[("x", "D", "y")], labels={"x": "a", "y": "b"}
    )
    sub = root_subpattern(p)
    assert sub.vertices == ("x",) and sub.roots == frozenset(["x"])
    assert root_subpattern(Pattern.build(AB, ["x"], labels={"x": "a"})) is None


# -- homomorphism checking --------------------------------------------------------


def test_check_homomorphism_hand_cases():
    t = FiniteTree.from_map(
        AB,
        {"": "a", "L": "b", "R": "a", "LL": "a", "LR": "b", "RL": "a", "RR": "b"},
    )
    h = check_homomorphism(t, left_child_ab())
    assert h == {"x": "", "y": "L"}
    flipped = Pattern.build(
        AB, ["x", "y"], roots=["x"], edges=[("x", "R", "y")], labels={"x": "a", "y": "b"}
    )
    assert check_homomorphism(t, flipped) is None
    deep = Pattern.build(AB, ["u", "v"], edges=[("u", "D", "v")], labels={"u": "b", "v": "b"})
    h = check_homomorphism(t, deep)
    assert h is not None and h["v"] != h["u"] and h["v"].startswith(h["u"])


def test_check_homomorphism_shared_position():
    # two unlabelled root-marked vertices may share the root
    t = FiniteTree.from_generator(AB, lambda p: "a", 1)
    p = Pattern.build(AB, ["x", "y"], roots=["x", "y"])
    h = check_homomorphism(t, p)
    assert h == {"x": "", "y": ""}


def test_check_homomorphism_matches_product_search():
    rng = random.Random(7)
    agree = 0
    for _ in range(80):
        pattern = sample_pattern(rng)
        index = rng.randrange(2 ** 7)
        tree = next(
            iter(enumerate_full_trees(AB, 2, start=index, stop=index + 1))
        )
        fast = check_homomorphism(tree, pattern)
        slow = oracles.homomorphism_by_product_search(tree, pattern)
        assert (fast is None) == (slow is None)
        if fast is not None:
            assert oracles._map_respects_pattern(tree, pattern, fast)
            agree += 1
    assert agree > 5  # the sampler must produce some matchable patterns


# -- satisfiability ----------------------------------------------------------------


def test_satisfiable_hand_cases():
    assert is_satisfiable(rooted_a())
    assert is_satisfiable(Pattern.build(AB, []))
    assert is_satisfiable(
        Pattern.build(AB, ["u", "v"], edges=[("u", "D", "v")], labels={"u": "a", "v": "b"})
    )
    assert is_satisfiable(sat_diamond())
    # a vertex below two comparable anchors
    assert is_satisfiable(
        Pattern.build(
            AB,
            ["x", "u", "v"],
            roots=["x"],
            edges=[("x", "L", "u"), ("x", "D", "v"), ("u", "D", "v")],
        )
    )


def test_unsatisfiable_hand_cases():
    assert not is_satisfiable(Pattern.build(AB, ["x"], edges=[("x", "L", "x")]))
    assert not is_satisfiable(Pattern.build(AB, ["x"], edges=[("x", "D", "x")]))
    assert not is_satisfiable(unsat_diamond())
    # every edge pushes strictly deeper, so directed cycles are contradictions
    assert not is_satisfiable(
        Pattern.build(AB, ["x", "y"], edges=[("x", "D", "y"), ("y", "D", "x")])
    )
    assert not is_satisfiable(
        Pattern.build(AB, ["x", "y"], edges=[("x", "L", "y"), ("y", "D", "x")])
    )
    # a vertex below two incomparable anchors
    assert not is_satisfiable(
        Pattern.build(
            AB,
            ["x", "u", "w", "v"],
            roots=["x"],
            edges=[("x", "L", "u"), ("x", "R", "w"), ("u", "D", "v"), ("w", "D", "v")],
        )
    )
    # same position forced for differently labelled vertices
    assert not is_satisfiable(
        Pattern.build(AB, ["x", "y"], roots=["x", "y"], labels={"x": "a", "y": "b"})
    )
    assert not is_satisfiable(
        Pattern.build(
            AB,
            ["x", "y", "z"],
            edges=[("x", "L", "y"), ("x", "L", "z")],
            labels={"y": "a", "z": "b"},
        )
    )


def test_unsatisfiable_means_no_small_tree_matches():
    rng = random.Random(23)
    checked = 0
    for _ in range(60):
        pattern = sample_pattern(rng)
        if is_satisfiable(pattern):
            continue
        checked += 1
        for tree in enumerate_full_trees(AB, 2):
            assert oracles.homomorphism_by_product_search(tree, pattern) is None
    assert checked >= 3


def test_satisfying_assignment_separates_unrooted_components():
    p = Pattern.build(
        AB,
        ["x", "u", "v"],
        roots=["x"],
        edges=[("u", "L", "v")],
        labels={"x": "a", "u": "a", "v": "b"},
    )
    h = satisfying_assignment(p)
    assert h["x"] == ""
    assert h["v"] == h["u"] + "L"
    assert len(h["u"]) > 0  # pushed away from the root
    assert is_satisfiable(p)


def test_satisfiability_refuses_oversized_unanchored_patterns():
    vs = [f"v{i}" for i in range(10)]
    edges = [(vs[i], "L", vs[i + 1]) for i in range(9)]
    p = Pattern.build(AB, vs, edges=edges)
    with pytest.raises(ResourceError):
        is_satisfiable(p)


# -- measure ------------------------------------------------------------------------


def test_measure_trichotomy_values():
    assert measure_cq(rooted_a()) == Fraction(1, 2)
    assert measure_cq(Pattern.build(AB, ["x"], labels={"x": "a"})) == 1
    assert measure_cq(Pattern.build(AB, ["x"], edges=[("x", "L", "x")])) == 0
    assert measure_cq(left_child_ab()) == Fraction(1, 4)


def test_measure_more_hand_values():
    assert measure_cq(some_child_ab()) == Fraction(3, 8)
    assert measure_cq(unsat_diamond()) == 0
    assert measure_cq(Pattern.build(AB, [])) == 1
    unlabelled_child = Pattern.build(AB, ["x", "y"], roots=["x"], edges=[("x", "R", "y")])
    assert measure_cq(unlabelled_child) == 1


def test_measure_drops_floating_components():
    # the D-descendant requirement is almost surely met, so only the root
    # component contributes
    p = Pattern.build(
        AB, ["x", "y"], roots=["x"], edges=[("x", "D", "y")], labels={"x": "a", "y": "b"}
    )
    assert measure_cq(p) == Fraction(1, 2)


def test_measure_matches_exhaustive_tree_search():
    rng = random.Random(101)
    checked = 0
    while checked < 6:
        pattern = sample_pattern(rng, max_vertices=2)
        sub = root_subpattern(pattern)
        if sub is None or sub.size > 3 or not is_satisfiable(pattern):
            continue
        expected = oracles.pattern_measure_by_tree_search(sub, sub.size)
        assert measure_cq(pattern) == expected
        checked += 1


def test_count_prefix_matches_value():
    # root a with left child b: 2^13 of the 2^15 height-3 trees
    assert count_prefix_matches(left_child_ab(), 3) == 2 ** 13


# -- compilation ---------------------------------------------------------------------


def test_compile_requires_rooted_firm_input():
    with pytest.raises(InputError):
        compile_pattern_to_safety(Pattern.build(AB, ["x"], labels={"x": "a"}))
    split = Pattern.build(
        AB, ["x", "y"], roots=["x"], edges=[("x", "D", "y")], labels={"x": "a", "y": "b"}
    )
    with pytest.raises(InputError):
        compile_pattern_to_safety(split)


def test_compile_agrees_with_enumeration_on_fixtures():
    for pattern in [
        rooted_a(),
        Pattern.build(AB, ["x"], roots=["x"]),
        left_child_ab(),
        some_child_ab(),
        Pattern.build(AB, ["x", "y"], roots=["x"], edges=[("x", "R", "y")]),
    ]:
        aut = compile_pattern_to_safety(pattern)
        assert exact_depth_measure(aut, pattern.size) == measure_cq(pattern)


def test_compile_handles_structurally_impossible_patterns():
    aut = compile_pattern_to_safety(unsat_diamond())
    assert aut.initial == frozenset()
    assert exact_depth_measure(aut, unsat_diamond().size) == 0


def test_compile_reaches_past_the_enumeration_budget():
    p = sat_diamond()
    assert measure_cq(p, via_compile=True) == Fraction(3, 8)


def test_compile_agrees_with_enumeration_randomized():
    rng = random.Random(3571)
    checked = 0
    while checked < 8:
        pattern = sample_pattern(rng, max_vertices=2)
        if not pattern.roots or not is_firm(pattern) or pattern.size > 3:
            continue
        aut = compile_pattern_to_safety(pattern)
        assert exact_depth_measure(aut, pattern.size) == measure_cq(pattern)
        checked += 1


def test_membership_is_prefix_determined():
    # extending a height-size tree one level with extreme fillers never
    # changes whether a rooted firm pattern matches
    rng = random.Random(9)
    for pattern in [rooted_a(), left_child_ab(), some_child_ab()]:
        h = pattern.size
        for _ in range(12):
            index = rng.randrange(min(2 ** 10, full_tree_count(2, h)))
            tree = next(iter(enumerate_full_trees(AB, h, start=index, stop=index + 1)))
            base = check_homomorphism(tree, pattern) is not None
            for filler in AB:
                ext = FiniteTree.from_generator(
                    AB,
                    lambda p: tree.label(p) if len(p) <= h else filler,
                    h + 1,
                )
                assert (check_homomorphism(ext, pattern) is not None) == base


def test_compiled_automaton_accepts_exactly_matching_trees():
    pattern = some_child_ab()
    aut = compile_pattern_to_safety(pattern)
    for tree in enumerate_full_trees(AB, 2):
        wants = check_homomorphism(tree, pattern) is not None
        assert oracles.accepts_by_run_search(aut, tree) == wants
