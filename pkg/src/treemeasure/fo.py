"""First-order sentences over labelled binary trees, in local normal form.

The measure pipeline accepts Boolean combinations of basic local
sentences: each leaf carries a radius r and a list of one-variable
formulas whose quantifiers stay inside the radius-r ball of the free
variable, and asserts witnesses for all of them pairwise farther than 2r
apart.  Deep witnesses exist almost surely, so only locals that force
their witness near the root (root formulas) survive the reduction, and
the measure is an exact fraction of bounded-height tree prefixes.

The model checker itself is general purpose: it also evaluates the strict
ancestor atom and unguarded quantifiers, which the measure pipeline
rejects.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, Mapping, Optional, Union

from .boolcomb import BoolConstant, Conjunction, Disjunction, Negation
from .errors import BudgetError, InputError
from .trees import (
    DEFAULT_ENUMERATION_BUDGET,
    FiniteTree,
    distance,
    enumerate_full_trees,
    full_tree_count,
    positions_up_to,
)


# -- formula syntax -------------------------------------------------------------


@dataclass(frozen=True)
class Root:
    var: str


@dataclass(frozen=True)
class HasLabel:
    letter: str
    var: str


@dataclass(frozen=True)
class ChildL:
    parent: str
    child: str


@dataclass(frozen=True)
class ChildR:
    parent: str
    child: str


@dataclass(frozen=True)
class Child:
    parent: str
    child: str


@dataclass(frozen=True)
class Ancestor:
    above: str
    below: str


@dataclass(frozen=True)
class Eq:
    left: str
    right: str


@dataclass(frozen=True)
class DistLE:
    """Distance-at-most macro atom; expandable to pure child relations."""

    radius: int
    left: str
    right: str


@dataclass(frozen=True)
class DistGT:
    radius: int
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    child: "FoFormula"


@dataclass(frozen=True)
class And:
    children: tuple["FoFormula", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Or:
    children: tuple["FoFormula", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Implies:
    premise: "FoFormula"
    conclusion: "FoFormula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "FoFormula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "FoFormula"


FoFormula = Union[
    Root, HasLabel, ChildL, ChildR, Child, Ancestor, Eq, DistLE, DistGT,
    Not, And, Or, Implies, Exists, Forall,
]

TRUE_FORMULA = And(())
FALSE_FORMULA = Or(())

_UNBOUND = object()

_VAR_ATOMS = {
    Root: ("var",),
    HasLabel: ("var",),
    ChildL: ("parent", "child"),
    ChildR: ("parent", "child"),
    Child: ("parent", "child"),
    Ancestor: ("above", "below"),
    Eq: ("left", "right"),
    DistLE: ("left", "right"),
    DistGT: ("left", "right"),
}


@lru_cache(maxsize=None)
def free_variables(formula: FoFormula) -> frozenset[str]:
    cls = type(formula)
    if cls in _VAR_ATOMS:
        return frozenset(getattr(formula, f) for f in _VAR_ATOMS[cls])
    if cls is Not:
        return free_variables(formula.child)
    if cls in (And, Or):
        out = frozenset()
        for c in formula.children:
            out |= free_variables(c)
        return out
    if cls is Implies:
        return free_variables(formula.premise) | free_variables(formula.conclusion)
    if cls in (Exists, Forall):
        return free_variables(formula.body) - {formula.var}
    raise InputError(f"not a formula node: {formula!r}")


@lru_cache(maxsize=None)
def all_variables(formula: FoFormula) -> frozenset[str]:
    cls = type(formula)
    if cls in _VAR_ATOMS:
        return frozenset(getattr(formula, f) for f in _VAR_ATOMS[cls])
    if cls is Not:
        return all_variables(formula.child)
    if cls in (And, Or):
        out = frozenset()
        for c in formula.children:
            out |= all_variables(c)
        return out
    if cls is Implies:
        return all_variables(formula.premise) | all_variables(formula.conclusion)
    if cls in (Exists, Forall):
        return all_variables(formula.body) | {formula.var}
    raise InputError(f"not a formula node: {formula!r}")


def _fresh_var(base: str, taken: frozenset[str]) -> str:
    if base not in taken:
        return base
    i = 0
    while f"{base}{i}" in taken:
        i += 1
    return f"{base}{i}"


def expand_dist_macros(formula: FoFormula) -> FoFormula:
    """Rewrite distance macros into pure child-relation formulas, linearly
    in the radius: within distance k means equal, or within distance k-1
    of some neighbour (parent or child)."""
    taken = all_variables(formula)

    def expand_le(k: int, x: str, y: str) -> FoFormula:
        if k <= 0:
            return Eq(x, y)
        z = _fresh_var("_d", taken | {x, y})
        step = Or((Child(x, z), Child(z, x)))
        return Or((Eq(x, y), Exists(z, And((step, expand_le(k - 1, z, y))))))

    def walk(f: FoFormula) -> FoFormula:
        cls = type(f)
        if cls is DistLE:
            return expand_le(f.radius, f.left, f.right)
        if cls is DistGT:
            return Not(expand_le(f.radius, f.left, f.right))
        if cls is Not:
            return Not(walk(f.child))
        if cls is And:
            return And(tuple(walk(c) for c in f.children))
        if cls is Or:
            return Or(tuple(walk(c) for c in f.children))
        if cls is Implies:
            return Implies(walk(f.premise), walk(f.conclusion))
        if cls is Exists:
            return Exists(f.var, walk(f.body))
        if cls is Forall:
            return Forall(f.var, walk(f.body))
        return f

    return walk(formula)


# -- model checking ---------------------------------------------------------------


def _ball_positions(tree: FiniteTree, center: str, k: int) -> tuple:
    """Positions of the tree at distance at most k from center."""
    seen = {center}
    frontier = [center]
    for _ in range(k):
        step = []
        for p in frontier:
            around = [p + "L", p + "R"]
            if p:
                around.append(p[:-1])
            for q in around:
                if q not in seen and q in tree:
                    seen.add(q)
                    step.append(q)
        frontier = step
    return tuple(sorted(seen, key=lambda s: (len(s), s)))


def _guard_ball(tree, var: str, g, env) -> Optional[tuple]:
    if isinstance(g, DistLE):
        if g.left == var and g.right in env:
            return _ball_positions(tree, env[g.right], g.radius)
        if g.right == var and g.left in env:
            return _ball_positions(tree, env[g.left], g.radius)
    return None


def _exists_domain(tree, var: str, body, env) -> Optional[tuple]:
    """A distance guard conjoined into an existential body confines the
    scan to its ball: everything outside falsifies the guard."""
    conjuncts = body.children if isinstance(body, And) else (body,)
    for g in conjuncts:
        ball = _guard_ball(tree, var, g, env)
        if ball is not None:
            return ball
    return None


def _forall_domain(tree, var: str, body, env) -> Optional[tuple]:
    """A distance guard hypothesized by a universal body confines the
    scan likewise: outside the ball the implication holds vacuously."""
    if isinstance(body, Implies):
        return _guard_ball(tree, var, body.premise, env)
    if isinstance(body, Or):
        for c in body.children:
            if isinstance(c, Not):
                ball = _guard_ball(tree, var, c.child, env)
                if ball is not None:
                    return ball
    return None


def _make_evaluator(tree: FiniteTree):
    """Recursive truth evaluator over the tree, shared by every valuation
    passed to it.  Quantifier nodes are memoized per valuation restricted
    to their free variables; atoms are cheaper to recompute than to key."""
    domain = tree.positions()
    alphabet = set(tree.alphabet)
    memo: dict = {}

    def ev(f: FoFormula, env: dict) -> bool:
        cls = type(f)
        if cls is Root:
            return env[f.var] == ""
        if cls is HasLabel:
            if f.letter not in alphabet:
                raise InputError(f"label {f.letter!r} outside alphabet {tree.alphabet}")
            return tree.label(env[f.var]) == f.letter
        if cls is ChildL:
            return env[f.child] == env[f.parent] + "L"
        if cls is ChildR:
            return env[f.child] == env[f.parent] + "R"
        if cls is Child:
            c = env[f.child]
            return c != "" and c[:-1] == env[f.parent]
        if cls is Ancestor:
            a, b = env[f.above], env[f.below]
            return a != b and b.startswith(a)
        if cls is Eq:
            return env[f.left] == env[f.right]
        if cls is DistLE:
            return distance(env[f.left], env[f.right]) <= f.radius
        if cls is DistGT:
            return distance(env[f.left], env[f.right]) > f.radius
        if cls is Not:
            return not ev(f.child, env)
        if cls is And:
            return all(ev(c, env) for c in f.children)
        if cls is Or:
            return any(ev(c, env) for c in f.children)
        if cls is Implies:
            return (not ev(f.premise, env)) or ev(f.conclusion, env)
        if cls is Exists or cls is Forall:
            key = (f, tuple(sorted((v, env[v]) for v in free_variables(f))))
            hit = memo.get(key)
            if hit is not None:
                return hit
            if cls is Exists:
                scan = _exists_domain(tree, f.var, f.body, env)
            else:
                scan = _forall_domain(tree, f.var, f.body, env)
            if scan is None:
                scan = domain
            saved = env.pop(f.var, _UNBOUND)
            if cls is Exists:
                out = False
                for p in scan:
                    env[f.var] = p
                    if ev(f.body, env):
                        out = True
                        break
            else:
                out = True
                for p in scan:
                    env[f.var] = p
                    if not ev(f.body, env):
                        out = False
                        break
            if saved is _UNBOUND:
                env.pop(f.var, None)
            else:
                env[f.var] = saved
            memo[key] = out
            return out
        raise InputError(f"not a formula node: {f!r}")

    return ev


def model_check(
    tree: FiniteTree,
    formula: FoFormula,
    valuation: Optional[Mapping[str, str]] = None,
) -> bool:
    """Truth of the formula in the finite tree under the valuation.

    Quantifiers range over the tree's positions, except that a quantifier
    whose body is syntactically confined to a distance ball only scans
    that ball.
    """
    env = dict(valuation or {})
    missing = free_variables(formula) - env.keys()
    if missing:
        raise InputError(f"unbound free variables: {sorted(missing)}")
    for var, pos in env.items():
        if pos not in tree:
            raise InputError(f"valuation sends {var!r} outside the tree: {pos!r}")
    return _make_evaluator(tree)(formula, env)


def _check_at_positions(
    tree: FiniteTree, formula: FoFormula, var: str, candidates
) -> set:
    """Positions among `candidates` where the one-variable formula holds;
    one evaluator, so quantifier memo entries are shared across them."""
    ev = _make_evaluator(tree)
    return {u for u in candidates if ev(formula, {var: u})}


# -- locality ----------------------------------------------------------------------


def validate_local(formula: FoFormula, r: int) -> bool:
    """True iff every quantifier is syntactically guarded by a distance
    bound (radius at most r) to the single free variable, and the strict
    ancestor atom never appears (it is not expressible locally)."""
    fv = free_variables(formula)
    if len(fv) != 1:
        raise InputError(f"a local formula needs exactly one free variable, got {sorted(fv)}")
    (x,) = fv

    def guard_ok(g, var: str) -> bool:
        return isinstance(g, DistLE) and g.radius <= r and (
            (g.left == x and g.right == var) or (g.left == var and g.right == x)
        )

    def walk(f) -> bool:
        cls = type(f)
        if cls is Ancestor:
            return False
        if cls in _VAR_ATOMS:
            return True
        if cls is Not:
            return walk(f.child)
        if cls in (And, Or):
            return all(walk(c) for c in f.children)
        if cls is Implies:
            return walk(f.premise) and walk(f.conclusion)
        if cls is Exists:
            body = f.body
            conjuncts = body.children if isinstance(body, And) else (body,)
            if not any(guard_ok(g, f.var) for g in conjuncts):
                return False
            return all(walk(c) for c in conjuncts)
        if cls is Forall:
            body = f.body
            if isinstance(body, Implies) and guard_ok(body.premise, f.var):
                return walk(body.conclusion)
            if isinstance(body, Or):
                guards = [
                    c for c in body.children
                    if isinstance(c, Not) and guard_ok(c.child, f.var)
                ]
                if guards:
                    return all(
                        walk(c) for c in body.children if c not in guards
                    )
            return False
        raise InputError(f"not a formula node: {f!r}")

    return walk(formula)


def _the_free_variable(formula: FoFormula) -> str:
    fv = free_variables(formula)
    if len(fv) != 1:
        raise InputError(f"expected one free variable, got {sorted(fv)}")
    return next(iter(fv))


@lru_cache(maxsize=512)
def _witness_depths(formula: FoFormula, r: int, alphabet: tuple) -> frozenset:
    """Depths d <= r+1 at which some full tree of height 2r+1 satisfies the
    formula.  A witness anywhere in an infinite tree transplants to depth
    min(d, r+1) here (its radius-r ball moves whole, and at depth r+1 the
    ball already misses the root), so these depths decide satisfiability
    and root-formula status at once."""
    if not validate_local(formula, r):
        raise InputError(f"not a radius-{r} local formula: {formula!r}")
    x = _the_free_variable(formula)
    height = 2 * r + 1
    required = full_tree_count(len(alphabet), height)
    if required > DEFAULT_ENUMERATION_BUDGET:
        raise BudgetError(
            f"local satisfiability needs {required} trees of height {height}",
            required=required,
            budget=DEFAULT_ENUMERATION_BUDGET,
        )
    candidates = [p for p in positions_up_to(r + 1)]
    want = set(range(r + 2))
    found: set = set()
    for tree in enumerate_full_trees(alphabet, height, DEFAULT_ENUMERATION_BUDGET):
        todo = [u for u in candidates if len(u) not in found]
        for u in _check_at_positions(tree, formula, x, todo):
            found.add(len(u))
        if found == want:
            break
    return frozenset(found)


def is_satisfiable_local(formula: FoFormula, r: int, alphabet) -> bool:
    """True iff some node of some tree satisfies the radius-r formula."""
    return bool(_witness_depths(formula, r, tuple(alphabet)))


def is_root_formula(formula: FoFormula, r: int, alphabet) -> bool:
    """True iff every witness sits at depth below r (unsatisfiable counts
    as a root formula).  Decided by the absence of witnesses at depths r
    and r+1: any deeper witness transplants to depth r+1."""
    depths = _witness_depths(formula, r, tuple(alphabet))
    return not (depths & {r, r + 1})


# -- basic local sentences and their combinations -------------------------------------


@dataclass(frozen=True)
class BasicLocalSentence:
    """Asserts one witness per local formula, pairwise farther than 2r
    apart.  A declared radius 0 is lifted to 1 (a radius-0 formula is also
    radius-1 local, and radius 1 avoids the degenerate depth-below-0 root
    condition)."""

    alphabet: tuple[str, ...]
    radius: int
    locals: tuple[FoFormula, ...]

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "locals", tuple(self.locals))
        if not self.alphabet or len(set(self.alphabet)) != len(self.alphabet):
            raise InputError(f"alphabet must be non-empty without repeats: {self.alphabet}")
        if not isinstance(self.radius, int) or self.radius < 0:
            raise InputError(f"radius must be a natural number, got {self.radius!r}")
        if self.radius == 0:
            object.__setattr__(self, "radius", 1)
        for phi in self.locals:
            if not validate_local(phi, self.radius):
                raise InputError(
                    f"local formula is not radius-{self.radius} guarded: {phi!r}"
                )


@dataclass(frozen=True)
class LocalAtom:
    sentence: BasicLocalSentence


LocalCombination = Union[LocalAtom, BoolConstant, Negation, Conjunction, Disjunction]


def iter_local_atoms(formula: LocalCombination) -> Iterator[LocalAtom]:
    if isinstance(formula, LocalAtom):
        yield formula
    elif isinstance(formula, Negation):
        yield from iter_local_atoms(formula.child)
    elif isinstance(formula, (Conjunction, Disjunction)):
        for c in formula.children:
            yield from iter_local_atoms(c)
    elif not isinstance(formula, BoolConstant):
        raise InputError(f"not a combination node: {formula!r}")


def _evaluate_combination(formula: LocalCombination, truth) -> bool:
    if isinstance(formula, BoolConstant):
        return formula.value
    if isinstance(formula, LocalAtom):
        return truth[formula.sentence]
    if isinstance(formula, Negation):
        return not _evaluate_combination(formula.child, truth)
    if isinstance(formula, Conjunction):
        return all(_evaluate_combination(c, truth) for c in formula.children)
    if isinstance(formula, Disjunction):
        return any(_evaluate_combination(c, truth) for c in formula.children)
    raise InputError(f"not a combination node: {formula!r}")


def compute_reduction(sentence: BasicLocalSentence) -> FoFormula:
    """Measure-equivalent bounded formula for a basic local sentence.

    Witnesses for satisfiable non-root locals exist almost surely, deep
    and pairwise far apart, so they drop out.  What remains: false if any
    local is unsatisfiable or two locals force root witnesses (they could
    never sit farther than 2r apart), the trivially true sentence if no
    root formula remains, else the unique root formula localized to depth
    below its radius."""
    r = sentence.radius
    alphabet = sentence.alphabet
    root_locals = []
    for phi in sentence.locals:
        if not is_satisfiable_local(phi, r, alphabet):
            return FALSE_FORMULA
        if is_root_formula(phi, r, alphabet):
            root_locals.append(phi)
    if len(root_locals) >= 2:
        return FALSE_FORMULA
    if not root_locals:
        z = "_root"
        return Exists(z, Root(z))
    phi = root_locals[0]
    x = _the_free_variable(phi)
    z = _fresh_var("_root", all_variables(phi))
    return Exists(x, And((phi, Exists(z, And((Root(z), DistLE(r - 1, z, x)))))))


def _leaf_decision(sentence: BasicLocalSentence):
    """(constant bool, None) or (None, (root formula, its variable, depth
    bound)) telling how to evaluate the leaf on a finite tree."""
    r = sentence.radius
    root_locals = []
    for phi in sentence.locals:
        if not is_satisfiable_local(phi, r, sentence.alphabet):
            return False, None
        if is_root_formula(phi, r, sentence.alphabet):
            root_locals.append(phi)
    if len(root_locals) >= 2:
        return False, None
    if not root_locals:
        return True, None
    phi = root_locals[0]
    return None, (phi, _the_free_variable(phi), r - 1)


def compute_measure_fo(
    formula: LocalCombination, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> Fraction:
    """Uniform measure of the combination's tree language, as an exact
    rational: the fraction of full trees of height 2r+1 (r the largest
    leaf radius) satisfying every leaf's reduction."""
    sentences: list[BasicLocalSentence] = []
    for a in iter_local_atoms(formula):
        if a.sentence not in sentences:
            sentences.append(a.sentence)
    if not sentences:
        return Fraction(1) if _evaluate_combination(formula, {}) else Fraction(0)
    alphabets = {s.alphabet for s in sentences}
    if len(alphabets) > 1:
        raise InputError(f"leaves disagree on the alphabet: {sorted(alphabets)}")
    alphabet = alphabets.pop()

    decisions = {s: _leaf_decision(s) for s in sentences}
    r = max(s.radius for s in sentences)
    height = 2 * r + 1
    required = full_tree_count(len(alphabet), height)
    if required > budget:
        raise BudgetError(
            f"measure needs all {required} full trees of height {height}",
            required=required,
            budget=budget,
        )

    open_leaves = {s: d[1] for s, d in decisions.items() if d[0] is None}
    fixed = {s: d[0] for s, d in decisions.items() if d[0] is not None}
    candidates = {
        s: [p for p in positions_up_to(bound)]
        for s, (phi, var, bound) in open_leaves.items()
    }

    total = 0
    good = 0
    for tree in enumerate_full_trees(alphabet, height, budget):
        total += 1
        truth = dict(fixed)
        for s, (phi, var, bound) in open_leaves.items():
            truth[s] = bool(_check_at_positions(tree, phi, var, candidates[s]))
        if _evaluate_combination(formula, truth):
            good += 1
    return Fraction(good, total)
