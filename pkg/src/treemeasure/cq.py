"""Tree patterns (conjunctive queries) and their uniform measure.

A pattern is a labelled graph over vertices that map homomorphically into
trees: edge kinds L/R/S pin a vertex's left child, right child, or some
child, D pins a strict descendant, and root marks pin the tree root.  The
measure trichotomy: unsatisfiable patterns have measure 0; satisfiable
patterns without a rooted firm component have measure 1 (their matches
float freely, so almost every tree contains one); otherwise the measure
is decided by the rooted firm component alone, whose matches all sit
within depth below its size, so counting tree prefixes of that height
gives the exact rational value.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional

import networkx as nx

from .errors import BudgetError, InputError, ResourceError
from .safety import SafetyAutomaton, exact_depth_measure
from .trees import (
    DEFAULT_ENUMERATION_BUDGET,
    FiniteTree,
    enumerate_full_trees,
    full_tree_count,
)

EDGE_KINDS = ("L", "R", "S", "D")

# positions searched for an unanchored vertex; beyond this the search refuses
_CANDIDATE_CAP = 1 << 19
_SEARCH_LENGTH_LIMIT = 18
_ASSIGNMENT_CAP = 1 << 16


@dataclass(frozen=True)
class Pattern:
    """Conjunctive query over labelled binary trees.

    `edges` entries are (source, kind, target); for kind D the source is
    the strict ancestor.  `labelling` is a partial vertex -> letter map
    stored as a sorted tuple of pairs so patterns hash and compare by
    value.  Size counts vertices plus edges.
    """

    alphabet: tuple[str, ...]
    vertices: tuple[str, ...]
    roots: frozenset[str]
    edges: tuple[tuple[str, str, str], ...]
    labelling: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        if not self.alphabet or len(set(self.alphabet)) != len(self.alphabet):
            raise InputError(f"alphabet must be non-empty without repeats: {self.alphabet}")
        if len(set(self.vertices)) != len(self.vertices):
            raise InputError(f"vertices must not repeat: {self.vertices}")
        declared = set(self.vertices)
        for e in self.edges:
            if len(e) != 3 or e[1] not in EDGE_KINDS:
                raise InputError(f"edge {e}: expected (source, kind, target) with kind in {EDGE_KINDS}")
            if e[0] not in declared or e[2] not in declared:
                raise InputError(f"edge {e} uses an undeclared vertex")
        if not self.roots <= declared:
            raise InputError(f"root marks {sorted(set(self.roots) - declared)} undeclared")
        seen: dict[str, str] = {}
        for v, letter in self.labelling:
            if v not in declared:
                raise InputError(f"label on undeclared vertex {v!r}")
            if letter not in self.alphabet:
                raise InputError(f"label {letter!r} outside alphabet {self.alphabet}")
            if seen.get(v, letter) != letter:
                raise InputError(f"vertex {v!r} labelled both {seen[v]!r} and {letter!r}")
            seen[v] = letter
        object.__setattr__(self, "labelling", tuple(sorted(set(self.labelling))))

    @classmethod
    def build(
        cls,
        alphabet: Iterable[str],
        vertices: Iterable[str],
        roots: Iterable[str] = (),
        edges: Iterable[tuple[str, str, str]] = (),
        labels: Mapping[str, str] | None = None,
    ) -> "Pattern":
        return cls(
            tuple(alphabet),
            tuple(vertices),
            frozenset(roots),
            tuple(tuple(e) for e in edges),
            tuple((labels or {}).items()),
        )

    @property
    def size(self) -> int:
        return len(self.vertices) + len(self.edges)

    @cached_property
    def label_map(self) -> dict[str, str]:
        return dict(self.labelling)

    @cached_property
    def adjacency(self) -> dict[str, tuple[tuple[str, str, str], ...]]:
        """Edges touching each vertex, from either side."""
        adj: dict[str, list] = {v: [] for v in self.vertices}
        for e in self.edges:
            adj[e[0]].append(e)
            if e[2] != e[0]:
                adj[e[2]].append(e)
        return {v: tuple(es) for v, es in adj.items()}

    def degree(self, v: str) -> int:
        return len(self.adjacency[v]) + (1 if v in self.roots else 0)

    def induced(self, keep: Iterable[str]) -> "Pattern":
        keep = set(keep)
        return Pattern(
            self.alphabet,
            tuple(v for v in self.vertices if v in keep),
            self.roots & keep,
            tuple(e for e in self.edges if e[0] in keep and e[2] in keep),
            tuple((v, l) for v, l in self.labelling if v in keep),
        )

    def __repr__(self):
        return (
            f"Pattern({len(self.vertices)} vertices, {len(self.edges)} edges, "
            f"{len(self.roots)} root marks)"
        )


# -- structure ----------------------------------------------------------------


def connections_graph(pattern: Pattern) -> "nx.DiGraph":
    """Digraph whose strongly connected components are the firm parts: root
    marks connect to everything, child edges connect both ways, descendant
    edges only downward."""
    g = nx.DiGraph()
    g.add_nodes_from(pattern.vertices)
    for x in pattern.roots:
        for y in pattern.vertices:
            g.add_edge(x, y)
    for src, kind, dst in pattern.edges:
        g.add_edge(src, dst)
        if kind != "D":
            g.add_edge(dst, src)
    return g


def firm_decomposition(pattern: Pattern) -> list[Pattern]:
    """Induced sub-patterns on the strongly connected components of the
    connections graph, ordered by earliest vertex declaration."""
    order = {v: i for i, v in enumerate(pattern.vertices)}
    comps = nx.strongly_connected_components(connections_graph(pattern))
    return [pattern.induced(c) for c in sorted(comps, key=lambda c: min(order[v] for v in c))]


def is_firm(pattern: Pattern) -> bool:
    return len(pattern.vertices) > 0 and len(firm_decomposition(pattern)) == 1


def root_subpattern(pattern: Pattern) -> Optional[Pattern]:
    """The firm component holding the root marks, or None for an unrooted
    pattern.  All root-marked vertices share one component: each reaches
    every vertex directly and is reached back through any root mark."""
    rooted = [p for p in firm_decomposition(pattern) if p.roots]
    if not rooted:
        return None
    if len(rooted) > 1:
        raise AssertionError("root marks can never split across components")
    return rooted[0]


# -- position assignments ------------------------------------------------------


def _edge_holds(kind: str, hu: str, hv: str) -> bool:
    if kind == "L":
        return hv == hu + "L"
    if kind == "R":
        return hv == hu + "R"
    if kind == "S":
        return len(hv) == len(hu) + 1 and hv[:-1] == hu
    return hv != hu and hv.startswith(hu)


def _has_forced_cycle(pattern: Pattern) -> bool:
    """Every edge kind forces the target strictly deeper than the source,
    so a directed cycle among edges (self-loops included) is a
    contradiction no assignment can satisfy."""
    g = nx.DiGraph()
    g.add_nodes_from(pattern.vertices)
    g.add_edges_from((e[0], e[2]) for e in pattern.edges)
    return not nx.is_directed_acyclic_graph(g)


def _positions_stream(max_len: int) -> Iterator[str]:
    """All positions of length <= max_len, shortest first, lazily capped."""
    total = 0
    for n in range(max_len + 1):
        for w in itertools.product("LR", repeat=n):
            total += 1
            if total > _CANDIDATE_CAP:
                raise ResourceError(
                    f"candidate position space exceeds {_CANDIDATE_CAP} "
                    f"(length bound {max_len})"
                )
            yield "".join(w)


def _candidates_from_edge(edge, vertex, assigned, cap_len) -> Iterator[str]:
    """Positions the unassigned `vertex` may take given one edge whose other
    endpoint is already placed.  Descendant edges enumerate extensions
    shortest first, lazily capped."""
    src, kind, dst = edge
    if vertex == dst:
        base = assigned[src]
        if kind == "L":
            yield base + "L"
        elif kind == "R":
            yield base + "R"
        elif kind == "S":
            yield base + "L"
            yield base + "R"
        else:
            total = 0
            for n in range(1, cap_len - len(base) + 1):
                for tail in itertools.product("LR", repeat=n):
                    total += 1
                    if total > _CANDIDATE_CAP:
                        raise ResourceError(
                            "descendant-edge candidate space exceeds "
                            f"{_CANDIDATE_CAP} (length bound {cap_len})"
                        )
                    yield base + "".join(tail)
    else:
        base = assigned[dst]
        if kind == "L":
            if base.endswith("L"):
                yield base[:-1]
        elif kind == "R":
            if base.endswith("R"):
                yield base[:-1]
        elif kind == "S":
            if base:
                yield base[:-1]
        else:
            for n in range(len(base)):
                yield base[:n]


def _anchored_candidates(pattern: Pattern, v: str, h: dict, cap_len: int) -> Optional[Iterator[str]]:
    """Candidate positions for `v` derived from edges to already-placed
    vertices, or None when no such edge exists.

    Any anchoring edge except descendant-below gives a small finite set,
    so one of those is preferred.  With only descendant-below anchors the
    candidates must extend every anchor at once, which is possible exactly
    when the anchors form a prefix chain, and then extending the deepest
    covers the rest."""
    anchored = [
        e
        for e in pattern.adjacency[v]
        if not (e[0] == v and e[2] == v)
        and (e[2] if e[0] == v else e[0]) in h
    ]
    if not anchored:
        return None
    finite = [e for e in anchored if not (e[1] == "D" and e[2] == v)]
    if finite:
        # tightest first: child edges offer at most two positions
        finite.sort(key=lambda e: 0 if e[1] in ("L", "R") else (1 if e[1] == "S" else 2))
        return _candidates_from_edge(finite[0], v, h, cap_len)
    deepest = max(anchored, key=lambda e: len(h[e[0]]))
    top = h[deepest[0]]
    if any(not top.startswith(h[e[0]]) for e in anchored):
        return iter(())
    return _candidates_from_edge(deepest, v, h, cap_len)


def _search_assignment(
    pattern: Pattern,
    order: list[str],
    cap_len: int,
    tree: Optional[FiniteTree] = None,
    shared_bindings: Optional[dict[str, str]] = None,
) -> Optional[dict[str, str]]:
    """Backtracking vertex -> position search.

    With `tree` given, placements stay inside the tree and labels check
    against its letters.  Without one, labels accumulate as position ->
    letter requirements in `shared_bindings`, so two vertices sharing a
    position must want the same letter.
    """
    labels = pattern.label_map
    adjacency = pattern.adjacency
    domain = frozenset(tree.positions()) if tree is not None else None
    h: dict[str, str] = {}
    bindings = shared_bindings if shared_bindings is not None else {}

    def place(v: str, pos: str, undo: list) -> bool:
        if domain is not None:
            if pos not in domain:
                return False
        elif len(pos) > cap_len:
            return False
        if v in pattern.roots and pos != "":
            return False
        for e in adjacency[v]:
            if e[0] == v and e[2] == v:
                if not _edge_holds(e[1], pos, pos):
                    return False
                continue
            other = e[2] if e[0] == v else e[0]
            if other in h:
                hu, hv = (pos, h[other]) if e[0] == v else (h[other], pos)
                if not _edge_holds(e[1], hu, hv):
                    return False
        want = labels.get(v)
        if want is not None:
            if tree is not None:
                if tree.label(pos) != want:
                    return False
            else:
                bound = bindings.get(pos)
                if bound is not None and bound != want:
                    return False
                if bound is None:
                    bindings[pos] = want
                    undo.append(pos)
        h[v] = pos
        return True

    def candidates(v: str) -> Iterator[str]:
        if v in pattern.roots:
            return iter([""])
        derived = _anchored_candidates(pattern, v, h, cap_len)
        if derived is not None:
            return derived
        if domain is not None:
            return iter(sorted(domain, key=lambda p: (len(p), p)))
        return _positions_stream(cap_len)

    def rec(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        seen = set()
        for pos in candidates(v):
            if pos in seen:
                continue
            seen.add(pos)
            undo: list = []
            if place(v, pos, undo):
                if rec(i + 1):
                    return True
                del h[v]
            for b in undo:
                del bindings[b]
        return False

    return dict(h) if rec(0) else None


def _expansion_order(pattern: Pattern, vertices: Iterable[str]) -> list[str]:
    """Vertices ordered so each (beyond the first of a component) touches an
    earlier one; prefers root marks and high degree, then declaration."""
    decl = {v: i for i, v in enumerate(pattern.vertices)}
    remaining = list(vertices)
    done: set[str] = set()
    out: list[str] = []
    while remaining:
        best = None
        for v in remaining:
            touches = any(
                (e[0] if e[2] == v else e[2]) in done for e in pattern.adjacency[v]
            )
            key = (not touches, v not in pattern.roots, -pattern.degree(v), decl[v])
            if best is None or key < best[0]:
                best = (key, v)
        out.append(best[1])
        done.add(best[1])
        remaining.remove(best[1])
    return out


def check_homomorphism(tree: FiniteTree, pattern: Pattern) -> Optional[dict[str, str]]:
    """Vertex -> position map into the finite tree respecting root marks,
    edges, and labels; None when there is none."""
    decl = {v: i for i, v in enumerate(pattern.vertices)}
    order = sorted(
        pattern.vertices,
        key=lambda v: (v not in pattern.roots, -pattern.degree(v), decl[v]),
    )
    return _search_assignment(pattern, order, tree.height, tree=tree)


def satisfying_assignment(pattern: Pattern) -> Optional[dict[str, str]]:
    """Some vertex -> position map realisable in a tree, or None.

    Root-marked weakly-connected components all crowd the root, so they
    are solved together against one shared position/label table.  Each
    unrooted component can be pushed into its own remote subtree of an
    infinite tree, so it is solved alone and shifted below a private
    anchor afterwards; the shift keeps every edge relation because all
    four kinds are invariant under prefixing.
    """
    if not pattern.vertices:
        return {}
    if _has_forced_cycle(pattern):
        return None
    comps = list(nx.connected_components(_undirected_view(pattern)))
    cap = pattern.size * (1 + len(firm_decomposition(pattern)))

    rooted_vertices: set[str] = set()
    unrooted: list[set[str]] = []
    for c in comps:
        if c & pattern.roots:
            rooted_vertices |= c
        else:
            unrooted.append(c)
    if unrooted and cap > _SEARCH_LENGTH_LIMIT:
        raise ResourceError(
            f"satisfiability search bound {cap} exceeds {_SEARCH_LENGTH_LIMIT}; "
            "the pattern is too large to place unanchored components"
        )

    result: dict[str, str] = {}
    if rooted_vertices:
        sub = pattern.induced(rooted_vertices)
        found = _search_assignment(
            sub, _expansion_order(sub, sub.vertices), cap, shared_bindings={}
        )
        if found is None:
            return None
        result.update(found)

    # deep enough that shifted components miss the rooted placements and
    # each other
    base_depth = max((len(p) for p in result.values()), default=0)
    anchor = "R" * (base_depth + 1)
    for i, comp in enumerate(unrooted):
        sub = pattern.induced(comp)
        found = _search_assignment(
            sub, _expansion_order(sub, sub.vertices), cap, shared_bindings={}
        )
        if found is None:
            return None
        prefix = anchor + "L" * (i + 1) + "R"
        result.update({v: prefix + pos for v, pos in found.items()})
    return result


def _undirected_view(pattern: Pattern) -> "nx.Graph":
    g = nx.Graph()
    g.add_nodes_from(pattern.vertices)
    g.add_edges_from((e[0], e[2]) for e in pattern.edges)
    return g


def _witness_tree(pattern: Pattern, assignment: Mapping[str, str]) -> FiniteTree:
    depth = max((len(p) for p in assignment.values()), default=0)
    filler = pattern.alphabet[0]
    wanted: dict[str, str] = {}
    for v, pos in assignment.items():
        letter = pattern.label_map.get(v)
        if letter is not None:
            wanted[pos] = letter
    return FiniteTree.from_generator(
        pattern.alphabet, lambda p: wanted.get(p, filler), depth
    )


def is_satisfiable(pattern: Pattern) -> bool:
    """True iff some tree satisfies the pattern; positive answers are
    certified by building the witness tree and re-checking the
    homomorphism on it."""
    h = satisfying_assignment(pattern)
    if h is None:
        return False
    if pattern.vertices:
        witness = _witness_tree(pattern, h)
        assert check_homomorphism(witness, pattern) is not None, (
            "satisfiability witness failed its own check"
        )
    return True


# -- measure -------------------------------------------------------------------


def count_prefix_matches(
    pattern: Pattern, height: int, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> int:
    """Number of full trees of the given height admitting a homomorphism."""
    n = 0
    for t in enumerate_full_trees(pattern.alphabet, height, budget=budget):
        if check_homomorphism(t, pattern) is not None:
            n += 1
    return n


def measure_cq(
    pattern: Pattern,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    via_compile: bool = False,
) -> Fraction:
    """Uniform measure of the pattern's tree language, as an exact rational.

    Unsatisfiable: 0.  No rooted firm component: 1.  Otherwise the rooted
    firm component p decides the value, all its matches sit at depth below
    size(p), and the fraction of full height-size(p) trees that match is
    exact.  `via_compile` routes the same count through the safety engine
    (useful when enumeration would blow the budget)."""
    if not is_satisfiable(pattern):
        return Fraction(0)
    p = root_subpattern(pattern)
    if p is None:
        return Fraction(1)
    h = p.size
    if via_compile:
        return exact_depth_measure(compile_pattern_to_safety(p), h)
    try:
        count = count_prefix_matches(p, h, budget)
    except BudgetError as e:
        raise BudgetError(
            f"{e} (compile mode avoids enumeration: pass via_compile=True)",
            required=e.required,
            budget=e.budget,
        ) from None
    return Fraction(count, full_tree_count(len(p.alphabet), h))


# -- compilation to a safety automaton ------------------------------------------


def _structural_assignments(pattern: Pattern, max_len: int) -> list[dict[str, str]]:
    """All maps of vertices to positions of length <= max_len respecting
    root marks and edges; labels are left to the automaton's transitions."""
    if _has_forced_cycle(pattern):
        return []
    order = _expansion_order(pattern, pattern.vertices)
    adjacency = pattern.adjacency
    out: list[dict[str, str]] = []
    h: dict[str, str] = {}

    def ok(v: str, pos: str) -> bool:
        if len(pos) > max_len:
            return False
        if v in pattern.roots and pos != "":
            return False
        for e in adjacency[v]:
            if e[0] == v and e[2] == v:
                if not _edge_holds(e[1], pos, pos):
                    return False
                continue
            other = e[2] if e[0] == v else e[0]
            if other in h:
                hu, hv = (pos, h[other]) if e[0] == v else (h[other], pos)
                if not _edge_holds(e[1], hu, hv):
                    return False
        return True

    def candidates(v: str) -> Iterator[str]:
        if v in pattern.roots:
            return iter([""])
        derived = _anchored_candidates(pattern, v, h, max_len)
        if derived is not None:
            return derived
        return _positions_stream(max_len)

    def rec(i: int):
        if i == len(order):
            out.append(dict(h))
            if len(out) > _ASSIGNMENT_CAP:
                raise ResourceError(
                    f"pattern admits more than {_ASSIGNMENT_CAP} structural "
                    "placements; compilation would explode"
                )
            return
        v = order[i]
        seen = set()
        for pos in candidates(v):
            if pos in seen or not ok(v, pos):
                continue
            seen.add(pos)
            h[v] = pos
            rec(i + 1)
            del h[v]

    rec(0)
    return out


def compile_pattern_to_safety(pattern: Pattern, state_cap: int = 20000) -> SafetyAutomaton:
    """Safety automaton accepting exactly the trees the rooted firm pattern
    matches.

    Every match sits at depth below the pattern size, so the automaton
    guesses the entire placement at the root: each initial state is one
    structural assignment encoded as a set of (vertex, remaining path)
    pairs.  Transitions peel one step off every path, refusing letters
    that contradict the label of a vertex landing on the current node;
    emptied obligation sets fall into an all-accepting sink.
    """
    if not pattern.roots:
        raise InputError("compilation needs a root-marked pattern")
    if not is_firm(pattern):
        raise InputError(
            "compilation needs a firm pattern; this one splits into "
            f"{len(firm_decomposition(pattern))} components"
        )
    labels = pattern.label_map
    assignments = _structural_assignments(pattern, pattern.size - 1)

    sink = "ok"
    names: dict[frozenset, str] = {}
    queue: list[frozenset] = []

    def intern(s: frozenset) -> str:
        if not s:
            return sink
        if s not in names:
            names[s] = f"s{len(names)}"
            queue.append(s)
            if len(names) > state_cap:
                raise ResourceError(f"compiled automaton exceeds {state_cap} states")
        return names[s]

    initial = sorted({intern(frozenset(a.items())) for a in assignments})
    transitions: list[tuple[str, str, str, str]] = []
    i = 0
    while i < len(queue):
        s = queue[i]
        i += 1
        here = [v for v, rest in s if rest == ""]
        for a in pattern.alphabet:
            if any(labels.get(v, a) != a for v in here):
                continue
            left = frozenset((v, rest[1:]) for v, rest in s if rest[:1] == "L")
            right = frozenset((v, rest[1:]) for v, rest in s if rest[:1] == "R")
            transitions.append((names[s], a, intern(left), intern(right)))
    for a in pattern.alphabet:
        transitions.append((sink, a, sink, sink))
    return SafetyAutomaton(
        pattern.alphabet,
        [names[s] for s in queue] + [sink],
        transitions,
        initial,
    )
