"""Discounted measure of finite-tree languages by alphabet doubling.

Every plain letter gets a flat twin meaning "this branch stops here with
that letter".  A random infinite tree over the doubled alphabet projects
to the finite tree read off above the flat frontier, so a finite tree
with m nodes is hit with probability (2n)^-m and a finite-tree language
inherits a measure.  The reduction to the safety engine relabels leaf
transitions onto the flat twins and lets a universal sink state absorb
everything below the frontier; runs on trees that never leave the plain
letters die out in measure, so they need no device of their own.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import InputError, TruncationError
from .safety import MeasureEstimate, SafetyAutomaton, iterate_measure
from .trees import FiniteTree

FLAT_SUFFIX = "~"


@dataclass(frozen=True)
class ExtendedAlphabet:
    """A plain alphabet with one flat twin per letter."""

    plain: tuple[str, ...]
    flats: tuple[str, ...]

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.plain + self.flats

    def flat_of(self, letter: str) -> str:
        try:
            return self.flats[self.plain.index(letter)]
        except ValueError:
            raise InputError(f"letter {letter!r} not in alphabet {self.plain}") from None

    def plain_of(self, symbol: str) -> str:
        try:
            return self.plain[self.flats.index(symbol)]
        except ValueError:
            raise InputError(f"symbol {symbol!r} is not a flat twin") from None

    def is_flat(self, symbol: str) -> bool:
        return symbol in self.flats


def extend_alphabet(alphabet: Iterable[str]) -> ExtendedAlphabet:
    """Doubled alphabet with the letter <-> flat twin bijection recorded."""
    plain = tuple(alphabet)
    if not plain or len(set(plain)) != len(plain):
        raise InputError(f"alphabet must be non-empty without repeats: {plain}")
    flats = tuple(a + FLAT_SUFFIX for a in plain)
    if set(flats) & set(plain):
        raise InputError(
            f"alphabet already contains a would-be flat twin: {sorted(set(flats) & set(plain))}"
        )
    return ExtendedAlphabet(plain, flats)


def project(tree: FiniteTree, ext: ExtendedAlphabet) -> FiniteTree:
    """The finite tree sitting above the flat frontier of `tree`.

    Keeps every node all of whose proper ancestors are plain, relabelling
    flats to their plain twins.  Anything below a flat is ignored.  A kept
    plain node with a child missing leaves the image undetermined, which
    raises TruncationError rather than guessing.
    """
    out: dict[str, str] = {}
    stack = [""]
    while stack:
        pos = stack.pop()
        label = tree.label(pos)
        if ext.is_flat(label):
            out[pos] = ext.plain_of(label)
            continue
        if label not in ext.plain:
            raise InputError(f"label {label!r} at {pos!r} outside extended alphabet")
        out[pos] = label
        for child in (pos + "L", pos + "R"):
            if child not in tree:
                raise TruncationError(
                    f"plain-labelled {pos!r} lacks child {child!r}: too shallow to project"
                )
            stack.append(child)
    return FiniteTree.from_map(ext.plain, out)


def embed_finite_tree(tree: FiniteTree, ext: ExtendedAlphabet) -> FiniteTree:
    """The flat-terminated doubled-alphabet tree that projects back to
    `tree`: leaves become their flat twins.  Only full-branching trees
    are in the projection's image."""
    out: dict[str, str] = {}
    for pos in tree.positions():
        label = tree.label(pos)
        if label not in ext.plain:
            raise InputError(f"label {label!r} at {pos!r} outside alphabet {ext.plain}")
        has_l, has_r = pos + "L" in tree, pos + "R" in tree
        if has_l != has_r:
            raise InputError(f"node {pos!r} has exactly one child: not in the projection image")
        out[pos] = label if has_l else ext.flat_of(label)
    return FiniteTree.from_map(ext.symbols, out)


@dataclass(frozen=True)
class FiniteTreeAutomaton:
    """Top-down automaton on finite labelled binary trees.

    A run assigns states, accepting at the root.  Internal transitions
    (q, a, qL, qR) fire at any node with at least one child; a missing
    side's state is simply unused, so forbidding one-child nodes takes an
    explicitly dead state there.  Leaf transitions (q, a) fire at leaves.
    """

    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    internal: frozenset
    leaves: frozenset
    accepting: frozenset

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "alphabet", tuple(self.alphabet))
        set_(self, "states", tuple(self.states))
        set_(self, "internal", frozenset(self.internal))
        set_(self, "leaves", frozenset(self.leaves))
        set_(self, "accepting", frozenset(self.accepting))
        if not self.alphabet or len(set(self.alphabet)) != len(self.alphabet):
            raise InputError(f"alphabet must be non-empty without repeats: {self.alphabet}")
        if not self.states or len(set(self.states)) != len(self.states):
            raise InputError(f"states must be non-empty without repeats: {self.states}")
        known = set(self.states)
        for t in self.internal:
            q, a, ql, qr = t
            if q not in known or ql not in known or qr not in known:
                raise InputError(f"internal transition {t} uses an undeclared state")
            if a not in self.alphabet:
                raise InputError(f"internal transition {t} uses an undeclared letter")
        for t in self.leaves:
            q, a = t
            if q not in known:
                raise InputError(f"leaf transition {t} uses an undeclared state")
            if a not in self.alphabet:
                raise InputError(f"leaf transition {t} uses an undeclared letter")
        for q in self.accepting:
            if q not in known:
                raise InputError(f"accepting state {q} undeclared")


def finite_accepts(aut: FiniteTreeAutomaton, tree: FiniteTree) -> bool:
    """Run search on a finite tree, memoized per (state, position)."""
    memo: dict = {}

    def ok(state: str, pos: str) -> bool:
        key = (state, pos)
        hit = memo.get(key)
        if hit is not None:
            return hit
        label = tree.label(pos)
        has_l, has_r = pos + "L" in tree, pos + "R" in tree
        if not has_l and not has_r:
            out = (state, label) in aut.leaves
        else:
            out = False
            for q, a, ql, qr in aut.internal:
                if q != state or a != label:
                    continue
                if (not has_l or ok(ql, pos + "L")) and (not has_r or ok(qr, pos + "R")):
                    out = True
                    break
        memo[key] = out
        return out

    return any(ok(q, "") for q in aut.accepting)


def accepts_nonfull_tree(aut: FiniteTreeAutomaton, max_height: int = 3) -> bool:
    """Whether some accepted tree of height <= max_height has a one-child
    node.  Such trees are outside the projection image and contribute
    nothing to the measure, so callers may want to flag them."""
    some: dict = {}  # state -> accepts some tree of height <= h
    nonfull: dict = {}

    def grow():
        by_state: dict = {}
        for q, a, ql, qr in aut.internal:
            by_state.setdefault(q, []).append((ql, qr))
        nxt_some = {q: some[q] for q in aut.states}
        nxt_nonfull = {q: nonfull[q] for q in aut.states}
        for q in aut.states:
            for ql, qr in by_state.get(q, ()):
                if some[ql] or some[qr]:
                    # a one-child node: only the present side is constrained
                    nxt_some[q] = True
                    nxt_nonfull[q] = True
                if some[ql] and some[qr]:
                    nxt_some[q] = True
                if (nonfull[ql] and some[qr]) or (some[ql] and nonfull[qr]):
                    nxt_nonfull[q] = True
        return nxt_some, nxt_nonfull

    for q in aut.states:
        some[q] = any(lq == q for lq, _ in aut.leaves)
        nonfull[q] = False
    for _ in range(max_height):
        some, nonfull = grow()
    return any(nonfull[q] for q in aut.accepting)


def _fresh_state(base: str, taken) -> str:
    name = base
    while name in taken:
        name = "_" + name
    return name


def lift_automaton(aut: FiniteTreeAutomaton) -> SafetyAutomaton:
    """Safety automaton over the doubled alphabet whose language has the
    measure of `aut`'s finite-tree language.

    Leaf transitions turn into reads of the flat twin handing both
    children to a universal sink; internal transitions survive verbatim.
    Acceptance of the lift forces a flat frontier shaped like an accepted
    finite tree, except along branches that never leave the plain letters,
    and those form a null set.
    """
    ext = extend_alphabet(aut.alphabet)
    top = _fresh_state("any", aut.states)
    states = aut.states + (top,)
    transitions = set(aut.internal)
    for q, a in aut.leaves:
        transitions.add((q, ext.flat_of(a), top, top))
    for sym in ext.symbols:
        transitions.add((top, sym, top, top))
    return SafetyAutomaton(ext.symbols, states, transitions, aut.accepting)


def measure_finite_language(
    aut: FiniteTreeAutomaton,
    tolerance: float = 1e-9,
    max_iters: int = 10**6,
    mode: str = "float",
    exact_bit_cap: int = 1 << 23,
) -> MeasureEstimate:
    """Measure of the finite-tree language, through the lifted safety
    automaton."""
    return iterate_measure(
        lift_automaton(aut),
        tolerance=tolerance,
        max_iters=max_iters,
        mode=mode,
        exact_bit_cap=exact_bit_cap,
    )
