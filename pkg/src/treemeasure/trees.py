"""Positions, finite labelled binary trees, full-tree enumeration.

Positions are words over {L, R} stored as plain strings; "" is the root.
A finite tree is a non-empty prefix-closed set of positions with a total
labelling.  Full trees of height h (every position with |u| <= h present)
keep their labels densely, as a tuple indexed by breadth-first rank; all
other trees keep a position -> symbol mapping.

The uniform measure of the ball around a finite tree t is
|alphabet| ** -|nodes(t)|, and a full tree of height h has 2**(h+1) - 1
nodes, so enumerating full trees of height h costs |alphabet| ** (2**(h+1)-1)
objects.  Enumeration therefore takes an explicit budget and refuses,
naming the exact count, when the budget is exceeded.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping

from .errors import BudgetError, InputError

Position = str

DEFAULT_ENUMERATION_BUDGET = 2**26

_LR = ("L", "R")


def is_position(word: str) -> bool:
    return all(c in "LR" for c in word)


def check_position(word: str) -> str:
    if not is_position(word):
        raise InputError(f"not a position (expected a word over L/R): {word!r}")
    return word


def common_prefix(u: Position, v: Position) -> Position:
    """Longest common prefix; the meet of u and v in the tree order."""
    n = 0
    for a, b in zip(u, v):
        if a != b:
            break
        n += 1
    return u[:n]


def distance(u: Position, v: Position) -> int:
    """Graph distance along child edges: |u| + |v| - 2|meet(u, v)|."""
    return len(u) + len(v) - 2 * len(common_prefix(u, v))


def bfs_rank(pos: Position) -> int:
    """Rank of a position in breadth-first order (root = 0)."""
    offset = 0
    for c in pos:
        offset = (offset << 1) | (1 if c == "R" else 0)
    return (1 << len(pos)) - 1 + offset


@lru_cache(maxsize=64)
def positions_up_to(depth: int) -> tuple[Position, ...]:
    """All positions with |u| <= depth, in breadth-first order."""
    if depth < 0:
        raise InputError("depth must be non-negative")
    out: list[Position] = [""]
    level = [""]
    for _ in range(depth):
        level = [p + c for p in level for c in _LR]
        out.extend(level)
    return tuple(out)


def full_node_count(height: int) -> int:
    return (1 << (height + 1)) - 1


class FiniteTree:
    """Immutable finite labelled binary tree.

    Equality and hashing are by alphabet plus labelling; the dense and
    sparse representations of the same tree compare equal.
    """

    __slots__ = ("alphabet", "dense", "height", "_labels", "_hash")

    def __init__(self):
        raise TypeError("use FiniteTree.full or FiniteTree.from_map")

    # -- constructors -------------------------------------------------

    @classmethod
    def _new(cls, alphabet, dense, height, labels):
        self = object.__new__(cls)
        set_ = object.__setattr__
        set_(self, "alphabet", alphabet)
        set_(self, "dense", dense)
        set_(self, "height", height)
        set_(self, "_labels", labels)
        set_(self, "_hash", None)
        return self

    @classmethod
    def full(cls, alphabet: Iterable[str], height: int, bfs_labels: Iterable[str]) -> "FiniteTree":
        """Full tree of the given height from labels in breadth-first order."""
        alphabet = tuple(alphabet)
        labels = tuple(bfs_labels)
        if height < 0:
            raise InputError("height must be non-negative")
        if len(labels) != full_node_count(height):
            raise InputError(
                f"full tree of height {height} needs {full_node_count(height)} labels, got {len(labels)}"
            )
        bad = set(labels) - set(alphabet)
        if bad:
            raise InputError(f"labels outside alphabet: {sorted(bad)}")
        return cls._new(alphabet, labels, height, None)

    @classmethod
    def from_map(cls, alphabet: Iterable[str], labels: Mapping[Position, str]) -> "FiniteTree":
        """Tree from an explicit position -> symbol mapping.

        The domain must be non-empty and prefix-closed.  A mapping whose
        domain is exactly all positions up to some depth densifies.
        """
        alphabet = tuple(alphabet)
        if not labels:
            raise InputError("a tree has at least its root")
        lab = dict(labels)
        for pos, sym in lab.items():
            check_position(pos)
            if sym not in alphabet:
                raise InputError(f"label {sym!r} at {pos!r} outside alphabet {alphabet}")
            if pos and pos[:-1] not in lab:
                raise InputError(f"domain not prefix-closed: {pos!r} present, parent missing")
        height = max(len(p) for p in lab)
        if len(lab) == full_node_count(height):
            dense = tuple(lab[p] for p in positions_up_to(height))
            return cls._new(alphabet, dense, height, lab)
        return cls._new(alphabet, None, height, lab)

    @classmethod
    def from_generator(cls, alphabet: Iterable[str], fn: Callable[[Position], str], depth: int) -> "FiniteTree":
        """Height-`depth` prefix of the infinite tree described by `fn`."""
        alphabet = tuple(alphabet)
        labels = tuple(fn(p) for p in positions_up_to(depth))
        return cls.full(alphabet, depth, labels)

    # -- structure -----------------------------------------------------

    @property
    def labels(self) -> dict[Position, str]:
        if self._labels is None:
            lab = dict(zip(positions_up_to(self.height), self.dense))
            object.__setattr__(self, "_labels", lab)
        return self._labels

    def positions(self) -> tuple[Position, ...]:
        if self.dense is not None:
            return positions_up_to(self.height)
        return tuple(sorted(self.labels, key=lambda p: (len(p), p)))

    def __contains__(self, pos: Position) -> bool:
        if self.dense is not None:
            return len(pos) <= self.height and is_position(pos)
        return pos in self.labels

    def label(self, pos: Position) -> str:
        if self.dense is not None:
            if len(pos) > self.height or not is_position(pos):
                raise InputError(f"position {pos!r} outside tree domain")
            return self.dense[bfs_rank(pos)]
        try:
            return self.labels[pos]
        except KeyError:
            raise InputError(f"position {pos!r} outside tree domain") from None

    @property
    def node_count(self) -> int:
        if self.dense is not None:
            return len(self.dense)
        return len(self.labels)

    def is_full(self) -> bool:
        return self.dense is not None

    # -- operations ----------------------------------------------------

    def subtree_at(self, pos: Position) -> "FiniteTree":
        """Tree rooted at `pos`: v -> label(pos + v)."""
        check_position(pos)
        if pos not in self:
            raise InputError(f"position {pos!r} outside tree domain")
        if not pos:
            return self
        n = len(pos)
        sub = {
            p[n:]: sym
            for p, sym in self.labels.items()
            if p.startswith(pos)
        }
        return FiniteTree.from_map(self.alphabet, sub)

    def restrict_to_depth(self, depth: int) -> "FiniteTree":
        if depth < 0:
            raise InputError("depth must be non-negative")
        if self.dense is not None:
            if depth >= self.height:
                return self
            return FiniteTree.full(self.alphabet, depth, self.dense[: full_node_count(depth)])
        kept = {p: s for p, s in self.labels.items() if len(p) <= depth}
        return FiniteTree.from_map(self.alphabet, kept)

    def ball_measure(self) -> Fraction:
        """Uniform measure of the set of full trees extending this one."""
        return Fraction(1, len(self.alphabet) ** self.node_count)

    # -- value semantics -----------------------------------------------

    def _key(self):
        if self.dense is not None:
            return (self.alphabet, True, self.height, self.dense)
        return (self.alphabet, False, self.height, tuple(sorted(self.labels.items())))

    def __eq__(self, other):
        if not isinstance(other, FiniteTree):
            return NotImplemented
        if self.alphabet != other.alphabet:
            return False
        if self.dense is not None and other.dense is not None:
            return self.dense == other.dense and self.height == other.height
        return self.labels == other.labels

    def __hash__(self):
        if self._hash is None:
            if self.dense is not None:
                h = hash((self.alphabet, self.height, self.dense))
            else:
                h = hash((self.alphabet, tuple(sorted(self.labels.items()))))
            object.__setattr__(self, "_hash", h)
        return self._hash

    def __repr__(self):
        return f"FiniteTree({self.node_count} nodes, height {self.height})"


def restrict_to_depth(
    source: "FiniteTree | Callable[[Position], str]",
    depth: int,
    alphabet: Iterable[str] | None = None,
) -> FiniteTree:
    """Height-`depth` prefix of a tree or of a lazily generated labelling.

    Callables stand in for infinite trees: they are sampled exactly on the
    positions with |u| <= depth.
    """
    if isinstance(source, FiniteTree):
        return source.restrict_to_depth(depth)
    if alphabet is None:
        raise InputError("restricting a generator needs the alphabet")
    return FiniteTree.from_generator(alphabet, source, depth)


def full_tree_count(alphabet_size, height: int) -> int:
    if not isinstance(alphabet_size, int):
        alphabet_size = len(tuple(alphabet_size))
    return alphabet_size ** full_node_count(height)


def check_enumeration_budget(alphabet_size, height: int, budget: int) -> int:
    count = full_tree_count(alphabet_size, height)
    if count > budget:
        raise BudgetError(
            f"enumeration infeasible: {count} full trees of height {height} "
            f"over {alphabet_size} letters exceed budget {budget}",
            required=count,
            budget=budget,
        )
    return count


def tree_at_index(alphabet: tuple[str, ...], height: int, index: int) -> FiniteTree:
    """The index-th full tree in lexicographic breadth-first label order."""
    n = full_node_count(height)
    k = len(alphabet)
    if not 0 <= index < k**n:
        raise InputError(f"tree index {index} out of range")
    digits = []
    for _ in range(n):
        index, d = divmod(index, k)
        digits.append(alphabet[d])
    return FiniteTree.full(alphabet, height, tuple(reversed(digits)))


def enumerate_full_trees(
    alphabet: Iterable[str],
    height: int,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    start: int = 0,
    stop: int | None = None,
) -> Iterator[FiniteTree]:
    """All full trees of `height`, lexicographic in breadth-first labels.

    `start`/`stop` select a contiguous index range, so enumeration splits
    into disjoint ranges for independent workers.  The budget check always
    covers the whole space, not the slice.
    """
    alphabet = tuple(alphabet)
    if len(set(alphabet)) != len(alphabet) or not alphabet:
        raise InputError(f"alphabet must be non-empty without repeats: {alphabet}")
    count = check_enumeration_budget(len(alphabet), height, budget)
    n = full_node_count(height)
    it: Iterable[tuple[str, ...]] = itertools.product(alphabet, repeat=n)
    if start or stop is not None:
        it = itertools.islice(it, start, stop if stop is not None else count)
    new = FiniteTree._new
    for labels in it:
        yield new(alphabet, labels, height, None)
