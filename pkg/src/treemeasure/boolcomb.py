"""Boolean combinations of tree patterns and their uniform measure.

A formula is a tree of conjunctions, disjunctions, and negations over
pattern leaves and boolean constants.  Each satisfiable leaf can be
replaced by its rooted firm component without changing the measure (the
floating parts match almost surely), after which every leaf is decided by
a bounded-height tree prefix and the measure is an exact rational: the
fraction of full trees of height H (the largest root-pattern size) that
satisfy the combination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

from .cq import (
    Pattern,
    check_homomorphism,
    compile_pattern_to_safety,
    is_satisfiable,
    root_subpattern,
)
from .errors import BudgetError, InputError
from .safety import SafetyAutomaton
from .trees import DEFAULT_ENUMERATION_BUDGET, enumerate_full_trees


@dataclass(frozen=True)
class PatternAtom:
    pattern: Pattern


@dataclass(frozen=True)
class BoolConstant:
    value: bool


@dataclass(frozen=True)
class Negation:
    child: "BccqFormula"


@dataclass(frozen=True)
class Conjunction:
    children: tuple["BccqFormula", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Disjunction:
    children: tuple["BccqFormula", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


BccqFormula = Union[PatternAtom, BoolConstant, Negation, Conjunction, Disjunction]

TRUE = BoolConstant(True)
FALSE = BoolConstant(False)


def conj(*parts: BccqFormula) -> Conjunction:
    return Conjunction(tuple(parts))


def disj(*parts: BccqFormula) -> Disjunction:
    return Disjunction(tuple(parts))


def neg(part: BccqFormula) -> Negation:
    return Negation(part)


def atom(pattern: Pattern) -> PatternAtom:
    return PatternAtom(pattern)


def iter_atoms(formula: BccqFormula) -> Iterator[PatternAtom]:
    if isinstance(formula, PatternAtom):
        yield formula
    elif isinstance(formula, Negation):
        yield from iter_atoms(formula.child)
    elif isinstance(formula, (Conjunction, Disjunction)):
        for c in formula.children:
            yield from iter_atoms(c)
    elif not isinstance(formula, BoolConstant):
        raise InputError(f"not a formula node: {formula!r}")


def pattern_atoms(formula: BccqFormula) -> list[Pattern]:
    """Distinct leaf patterns in first-appearance order."""
    seen: dict[Pattern, None] = {}
    for a in iter_atoms(formula):
        seen.setdefault(a.pattern)
    return list(seen)


def formula_alphabet(formula: BccqFormula) -> tuple[str, ...] | None:
    """The alphabet shared by every leaf; None for constant formulas."""
    alphabets = {p.alphabet for p in pattern_atoms(formula)}
    if not alphabets:
        return None
    if len(alphabets) > 1:
        raise InputError(f"leaves disagree on the alphabet: {sorted(alphabets)}")
    return alphabets.pop()


def evaluate(formula: BccqFormula, truth: Mapping[Pattern, bool]) -> bool:
    if isinstance(formula, BoolConstant):
        return formula.value
    if isinstance(formula, PatternAtom):
        return truth[formula.pattern]
    if isinstance(formula, Negation):
        return not evaluate(formula.child, truth)
    if isinstance(formula, Conjunction):
        return all(evaluate(c, truth) for c in formula.children)
    if isinstance(formula, Disjunction):
        return any(evaluate(c, truth) for c in formula.children)
    raise InputError(f"not a formula node: {formula!r}")


def reduce_to_root_atoms(formula: BccqFormula) -> BccqFormula:
    """Replace every leaf by a constant or by its rooted firm component:
    unsatisfiable leaves are false, satisfiable leaves without a root
    component are true (they match almost every tree), and the rest keep
    only the component that decides their measure."""
    replacement: dict[Pattern, BccqFormula] = {}
    for p in pattern_atoms(formula):
        if not is_satisfiable(p):
            replacement[p] = FALSE
        else:
            sub = root_subpattern(p)
            replacement[p] = TRUE if sub is None else PatternAtom(sub)

    def rebuild(f: BccqFormula) -> BccqFormula:
        if isinstance(f, PatternAtom):
            return replacement[f.pattern]
        if isinstance(f, BoolConstant):
            return f
        if isinstance(f, Negation):
            return Negation(rebuild(f.child))
        if isinstance(f, Conjunction):
            return Conjunction(tuple(rebuild(c) for c in f.children))
        return Disjunction(tuple(rebuild(c) for c in f.children))

    return rebuild(formula)


def _joint_accept_measure(
    formula: BccqFormula,
    patterns: list[Pattern],
    automata: list[SafetyAutomaton],
    height: int,
) -> Fraction:
    """Exact measure through the safety engine: iterate the joint type
    distribution of all compiled automata at once (integer counts over
    |Γ|^e), then add up the mass of joint types satisfying the formula."""
    k = len(automata[0].alphabet)
    letters = automata[0].alphabet
    counts: dict[tuple, int] = {tuple(a.full_mask for a in automata): 1}
    exponent = 0
    for _ in range(height):
        items = list(counts.items())
        nxt: dict[tuple, int] = {}
        for a in letters:
            for tl, cl in items:
                for tr, cr in items:
                    key = tuple(
                        aut.delta_hat(a, ml, mr)
                        for aut, ml, mr in zip(automata, tl, tr)
                    )
                    nxt[key] = nxt.get(key, 0) + cl * cr
        counts = nxt
        exponent = 2 * exponent + 1

    initial_masks = [a.initial_mask for a in automata]
    total = 0
    for masks, c in counts.items():
        truth = {
            p: bool(m & im)
            for p, m, im in zip(patterns, masks, initial_masks)
        }
        if evaluate(formula, truth):
            total += c
    return Fraction(total, k**exponent)


def measure_bccq(
    formula: BccqFormula,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
    via_compile: bool = False,
) -> Fraction:
    """Uniform measure of the formula's tree language, as an exact
    rational.

    Leaves reduce to constants or rooted firm components; the result is
    the fraction of full trees of height H = max root-component size that
    satisfy the reduced combination.  `via_compile` counts through the
    safety engine instead of enumerating trees."""
    formula_alphabet(formula)  # validates the shared-alphabet invariant
    reduced = reduce_to_root_atoms(formula)
    roots = pattern_atoms(reduced)
    if not roots:
        return Fraction(1) if evaluate(reduced, {}) else Fraction(0)
    alphabet = roots[0].alphabet
    height = max(p.size for p in roots)

    if via_compile:
        automata = [compile_pattern_to_safety(p) for p in roots]
        return _joint_accept_measure(reduced, roots, automata, height)

    total = 0
    good = 0
    try:
        for tree in enumerate_full_trees(alphabet, height, budget=budget):
            total += 1
            truth = {p: check_homomorphism(tree, p) is not None for p in roots}
            if evaluate(reduced, truth):
                good += 1
    except BudgetError as e:
        raise BudgetError(
            f"{e} (compile mode avoids enumeration: pass via_compile=True)",
            required=e.required,
            budget=e.budget,
        ) from None
    return Fraction(good, total)
