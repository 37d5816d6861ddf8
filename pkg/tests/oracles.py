"""Independent reference implementations the engines are tested against.

Everything here is deliberately dumb and direct: explicit run search over
states instead of powerset masks, scalar recurrences iterated by hand,
exhaustive homomorphism search, and weight sums over enumerated trees.
None of it shares code with the engines beyond the FiniteTree container.
"""

from fractions import Fraction
from functools import lru_cache

from treemeasure.trees import FiniteTree, enumerate_full_trees
from treemeasure.safety import SafetyAutomaton


# -- safety oracles ----------------------------------------------------------


def run_exists(aut: SafetyAutomaton, tree: FiniteTree, state: str, pos: str = "") -> bool:
    """Search for an explicit partial run from `state` at `pos`; leaves
    accept unconditionally."""
    if pos + "L" not in tree:
        return True
    label = tree.label(pos)
    for (q, a, ql, qr) in aut.transitions:
        if q == state and a == label:
            if run_exists(aut, tree, ql, pos + "L") and run_exists(aut, tree, qr, pos + "R"):
                return True
    return False


def accepts_by_run_search(aut: SafetyAutomaton, tree: FiniteTree) -> bool:
    return any(run_exists(aut, tree, q) for q in aut.initial)


def states_admitting_run(aut: SafetyAutomaton, tree: FiniteTree) -> frozenset:
    return frozenset(q for q in aut.states if run_exists(aut, tree, q))


def measure_by_run_search(aut: SafetyAutomaton, height: int) -> Fraction:
    """Fraction of height-`height` trees accepted, found by explicit run
    search over every tree."""
    total = 0
    good = 0
    for tree in enumerate_full_trees(aut.alphabet, height):
        total += 1
        if accepts_by_run_search(aut, tree):
            good += 1
    return Fraction(good, total)


def type_histogram_by_run_search(aut: SafetyAutomaton, height: int) -> dict:
    """Empirical distribution of run-admitting state sets over all trees of
    the given height, keyed by frozenset of state names."""
    counts: dict = {}
    total = 0
    for tree in enumerate_full_trees(aut.alphabet, height):
        s = states_admitting_run(aut, tree)
        counts[s] = counts.get(s, 0) + 1
        total += 1
    return {s: Fraction(c, total) for s, c in counts.items()}


# -- scalar recurrences -------------------------------------------------------


@lru_cache(maxsize=None)
def ab_path_level_measure(depth: int) -> Fraction:
    """Probability that a height-`depth` tree over {a,b,c} still allows an
    infinite root path avoiding c: x' = (2/3)(2x - x^2) from x=1."""
    if depth == 0:
        return Fraction(1)
    x = ab_path_level_measure(depth - 1)
    return Fraction(2, 3) * (2 * x - x * x)


def even_block_fixpoint(iters: int = 200) -> float:
    """Iterate m <- 1/2 + m^4/8 from 1; converges to the automaton measure
    of the even-depth release language."""
    m = 1.0
    for _ in range(iters):
        m = 0.5 + m**4 / 8
    return m


# -- pattern oracles ------------------------------------------------------------


def _map_respects_pattern(tree: FiniteTree, pattern, h: dict) -> bool:
    for v in pattern.roots:
        if h[v] != "":
            return False
    for v, letter in pattern.labelling:
        if tree.label(h[v]) != letter:
            return False
    for src, kind, dst in pattern.edges:
        a, b = h[src], h[dst]
        if kind == "L" and b != a + "L":
            return False
        if kind == "R" and b != a + "R":
            return False
        if kind == "S" and not (len(b) == len(a) + 1 and b[:-1] == a):
            return False
        if kind == "D" and not (b != a and b.startswith(a)):
            return False
    return True


def homomorphism_by_product_search(tree: FiniteTree, pattern):
    """Try every tuple of positions as a vertex assignment; exponential in
    the vertex count, so only for tiny patterns."""
    from itertools import product

    positions = list(tree.positions())
    for combo in product(positions, repeat=len(pattern.vertices)):
        h = dict(zip(pattern.vertices, combo))
        if _map_respects_pattern(tree, pattern, h):
            return h
    return None


def pattern_measure_by_tree_search(pattern, height: int) -> Fraction:
    """Fraction of height-`height` trees admitting a homomorphism, each
    found by exhaustive product search."""
    total = 0
    good = 0
    for tree in enumerate_full_trees(pattern.alphabet, height):
        total += 1
        if homomorphism_by_product_search(tree, pattern) is not None:
            good += 1
    return Fraction(good, total)


def bccq_measure_by_tree_search(formula, hom=None) -> Fraction:
    """Fraction of height-H trees (H = largest leaf pattern size)
    satisfying the combination, with its own formula evaluator.  Leaves
    are taken as-is, so pass an already root-reduced formula.  `hom`
    defaults to the exhaustive product search; pass a faster checker for
    heights where that is too slow."""
    from treemeasure import boolcomb as bc

    if hom is None:
        hom = homomorphism_by_product_search
    patterns = []
    stack = [formula]
    while stack:
        f = stack.pop()
        if isinstance(f, bc.PatternAtom):
            if f.pattern not in patterns:
                patterns.append(f.pattern)
        elif isinstance(f, bc.Negation):
            stack.append(f.child)
        elif isinstance(f, (bc.Conjunction, bc.Disjunction)):
            stack.extend(f.children)

    def truth_of(f, values):
        if isinstance(f, bc.BoolConstant):
            return f.value
        if isinstance(f, bc.PatternAtom):
            return values[f.pattern]
        if isinstance(f, bc.Negation):
            return not truth_of(f.child, values)
        if isinstance(f, bc.Conjunction):
            return all(truth_of(c, values) for c in f.children)
        return any(truth_of(c, values) for c in f.children)

    if not patterns:
        return Fraction(1) if truth_of(formula, {}) else Fraction(0)
    height = max(p.size for p in patterns)
    alphabet = patterns[0].alphabet
    total = 0
    good = 0
    for tree in enumerate_full_trees(alphabet, height):
        total += 1
        values = {p: hom(tree, p) is not None for p in patterns}
        if truth_of(formula, values):
            good += 1
    return Fraction(good, total)


# -- finite-tree oracles ---------------------------------------------------------


def iter_finite_label_maps(alphabet, max_height: int, full_only: bool = True):
    """All prefix-closed position -> letter maps of height <= max_height,
    as plain dicts; `full_only` restricts to 0-or-2-children shapes."""
    if max_height == 0:
        for a in alphabet:
            yield {"": a}
        return
    subs = list(iter_finite_label_maps(alphabet, max_height - 1, full_only))
    for a in alphabet:
        yield {"": a}
        for lm in subs:
            for rm in subs:
                m = {"": a}
                m.update({"L" + p: s for p, s in lm.items()})
                m.update({"R" + p: s for p, s in rm.items()})
                yield m
        if not full_only:
            for side in "LR":
                for sm in subs:
                    yield {"": a, **{side + p: s for p, s in sm.items()}}


def finite_run_exists(aut, tree: FiniteTree, state: str, pos: str = "") -> bool:
    """Plain recursive run search for a finite-tree automaton: leaves use
    leaf transitions, anything with a child uses internal ones, and a
    missing side leaves its state unchecked."""
    has_l, has_r = pos + "L" in tree, pos + "R" in tree
    label = tree.label(pos)
    if not has_l and not has_r:
        return (state, label) in aut.leaves
    for q, a, ql, qr in aut.internal:
        if q != state or a != label:
            continue
        if (not has_l or finite_run_exists(aut, tree, ql, pos + "L")) and (
            not has_r or finite_run_exists(aut, tree, qr, pos + "R")
        ):
            return True
    return False


def finite_accepts_by_run_search(aut, tree: FiniteTree) -> bool:
    return any(finite_run_exists(aut, tree, q) for q in aut.accepting)


def discounted_measure_partial_sum(aut, max_height: int) -> Fraction:
    """Sum of (2n)^-nodes over accepted full-branching trees of height at
    most max_height: a lower bound converging to the discounted measure."""
    total = Fraction(0)
    weight = 2 * len(aut.alphabet)
    for labels in iter_finite_label_maps(aut.alphabet, max_height, full_only=True):
        tree = FiniteTree.from_map(aut.alphabet, labels)
        if finite_accepts_by_run_search(aut, tree):
            total += Fraction(1, weight ** len(labels))
    return total


# -- first-order oracles ---------------------------------------------------------


def fo_measure_by_tree_search(combination) -> Fraction:
    """Fraction of height-(2r+1) trees whose generic model check satisfies
    every leaf's reduced formula, combined by an evaluator written here.
    The engine's counting path (candidate-restricted witness checks) is
    bypassed: quantifiers scan the whole prefix domain."""
    from treemeasure import fo
    from treemeasure.boolcomb import BoolConstant, Conjunction, Disjunction, Negation

    sentences = []
    stack = [combination]
    while stack:
        f = stack.pop()
        if isinstance(f, fo.LocalAtom):
            if f.sentence not in sentences:
                sentences.append(f.sentence)
        elif isinstance(f, Negation):
            stack.append(f.child)
        elif isinstance(f, (Conjunction, Disjunction)):
            stack.extend(f.children)

    def truth_of(f, values):
        if isinstance(f, BoolConstant):
            return f.value
        if isinstance(f, fo.LocalAtom):
            return values[f.sentence]
        if isinstance(f, Negation):
            return not truth_of(f.child, values)
        if isinstance(f, Conjunction):
            return all(truth_of(c, values) for c in f.children)
        return any(truth_of(c, values) for c in f.children)

    if not sentences:
        return Fraction(1) if truth_of(combination, {}) else Fraction(0)
    reduced = {s: fo.compute_reduction(s) for s in sentences}
    r = max(s.radius for s in sentences)
    alphabet = sentences[0].alphabet
    total = 0
    good = 0
    for tree in enumerate_full_trees(alphabet, 2 * r + 1):
        total += 1
        values = {s: fo.model_check(tree, g) for s, g in reduced.items()}
        if truth_of(combination, values):
            good += 1
    return Fraction(good, total)


# -- SMT-LIB substitution oracle ---------------------------------------------------


def _sexp_tokens(text: str):
    for line in text.splitlines():
        line = line.split(";", 1)[0]
        for tok in line.replace("(", " ( ").replace(")", " ) ").split():
            yield tok


def parse_smt_script(text: str) -> list:
    """Nested-list form of every top-level S-expression, comments stripped."""
    stack = [[]]
    for tok in _sexp_tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced parentheses")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced parentheses")
    return stack[0]


def eval_smt_term(term, env: dict):
    """Value of a quantifier-free term over + * = >= <= with integer
    numerals; variables come from env."""
    if isinstance(term, str):
        if term in env:
            return env[term]
        return Fraction(term)
    op, *args = term
    vals = [eval_smt_term(a, env) for a in args]
    if op == "+":
        return sum(vals)
    if op == "*":
        out = vals[0]
        for v in vals[1:]:
            out = out * v
        return out
    if op == "=":
        return vals[0] == vals[1]
    if op == ">=":
        return vals[0] >= vals[1]
    if op == "<=":
        return vals[0] <= vals[1]
    raise ValueError(f"unsupported operator {op!r}")


def smt_asserts_hold(text: str, env: dict) -> bool:
    """True when every quantifier-free assert in the script is satisfied by
    env. Quantified asserts are skipped; they constrain other solutions."""
    for form in parse_smt_script(text):
        if not (isinstance(form, list) and form and form[0] == "assert"):
            continue
        body = form[1]
        if isinstance(body, list) and body and body[0] == "forall":
            continue
        if eval_smt_term(body, env) is not True:
            return False
    return True
