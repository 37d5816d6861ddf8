"""Shared fixture automata and patterns used across the test suite.

Each automaton is small enough to brute-force, and each has a known or
independently computable measure, so the same objects serve unit tests,
property tests, and the acceptance suite.
"""

import random

import pytest

from treemeasure.safety import SafetyAutomaton


@pytest.fixture(scope="session")
def ab_path_automaton():
    """Trees over {a,b,c} containing an infinite root path avoiding c.

    State p tracks the path obligation and delegates it to one child; t
    accepts anything. Measure 1/2.
    """
    return SafetyAutomaton(
        alphabet=("a", "b", "c"),
        states=("p", "t"),
        transitions=[
            ("p", "a", "p", "t"), ("p", "a", "t", "p"),
            ("p", "b", "p", "t"), ("p", "b", "t", "p"),
            ("t", "a", "t", "t"), ("t", "b", "t", "t"), ("t", "c", "t", "t"),
        ],
        initial=("p",),
    )


@pytest.fixture(scope="session")
def a_path_3_automaton():
    """Trees over {a,b,c} with an infinite all-a root path; measure 0,
    reached at geometric rate."""
    return SafetyAutomaton(
        alphabet=("a", "b", "c"),
        states=("p", "t"),
        transitions=[
            ("p", "a", "p", "t"), ("p", "a", "t", "p"),
            ("t", "a", "t", "t"), ("t", "b", "t", "t"), ("t", "c", "t", "t"),
        ],
        initial=("p",),
    )


@pytest.fixture(scope="session")
def a_path_2_automaton():
    """Trees over {a,b} with an infinite all-a root path; measure 0 but
    M_d shrinks only like 2/d."""
    return SafetyAutomaton(
        alphabet=("a", "b"),
        states=("p", "t"),
        transitions=[
            ("p", "a", "p", "t"), ("p", "a", "t", "p"),
            ("t", "a", "t", "t"), ("t", "b", "t", "t"),
        ],
        initial=("p",),
    )


@pytest.fixture(scope="session")
def even_block_automaton():
    """Trees over {a,b} where, until a b at even depth releases a branch,
    odd-depth nodes must read a.  Its measure is the root of
    m = 1/2 + m^4/8 in [0,1], an irrational number near 0.5083."""
    return SafetyAutomaton(
        alphabet=("a", "b"),
        states=("q_even", "q_odd", "q_done"),
        transitions=[
            ("q_even", "a", "q_odd", "q_odd"),
            ("q_even", "b", "q_done", "q_done"),
            ("q_odd", "a", "q_even", "q_even"),
            ("q_done", "a", "q_done", "q_done"),
            ("q_done", "b", "q_done", "q_done"),
        ],
        initial=("q_even",),
    )


@pytest.fixture(scope="session")
def fixture_automata(ab_path_automaton, a_path_3_automaton, a_path_2_automaton, even_block_automaton):
    full2 = SafetyAutomaton(
        ("a", "b"), ("u", "v"),
        [(q, a, l, r) for q in ("u", "v") for a in ("a", "b") for l in ("u", "v") for r in ("u", "v")],
        ("u",),
    )
    no_start = SafetyAutomaton(("a", "b"), ("u",), [("u", "a", "u", "u")], ())
    left_a = SafetyAutomaton(
        ("a", "b"), ("w", "t"),
        [("w", "a", "w", "t"), ("t", "a", "t", "t"), ("t", "b", "t", "t")],
        ("w",),
    )
    return {
        "ab_path": ab_path_automaton,
        "a_path_3": a_path_3_automaton,
        "a_path_2": a_path_2_automaton,
        "even_block": even_block_automaton,
        "full_2": full2,
        "no_start": no_start,
        "left_a_spine": left_a,
    }


def sample_automaton(rng: random.Random, letters=("a", "b"), max_states=4) -> SafetyAutomaton:
    """Random small automaton; sparse-biased so deep exact iteration stays
    affordable while still hitting wide powerset supports sometimes."""
    n = rng.choice(range(2, max_states + 1))
    states = tuple(f"q{i}" for i in range(n))
    trans = set()
    for q in states:
        for a in letters:
            for _ in range(rng.choices([0, 1, 2], weights=[5, 4, 1])[0]):
                trans.add((q, a, rng.choice(states), rng.choice(states)))
    if not trans:
        trans.add((states[0], letters[0], states[0], states[0]))
    ini = tuple(rng.sample(states, rng.randint(1, n)))
    return SafetyAutomaton(letters, states, sorted(trans), ini)


def sample_pattern(rng: random.Random, alphabet=("a", "b"), max_vertices=3):
    """Random tiny pattern mixing edge kinds, root marks, and partial labels."""
    from treemeasure.cq import Pattern

    n = rng.randint(1, max_vertices)
    vs = [f"v{i}" for i in range(n)]
    edges = []
    for _ in range(rng.randint(0, n)):
        edges.append((rng.choice(vs), rng.choice("LRSD"), rng.choice(vs)))
    roots = [v for v in vs if rng.random() < 0.4]
    labels = {v: rng.choice(alphabet) for v in vs if rng.random() < 0.6}
    return Pattern.build(alphabet, vs, roots, edges, labels)
