"""Measures of languages recognised by non-deterministic safety automata.

A safety automaton runs top-down on full infinite binary trees; a tree is
accepted when some run exists whose root state is initial.  Acceptance of
a tree only ever fails at finite depth, so the language is closed and its
uniform measure is the limit of a non-increasing sequence M_0 >= M_1 >= ...
where M_d is the probability that a uniformly random height-d tree still
admits a partial run.

The computation works with the *type* of a tree: the set of states from
which some run exists.  Types of the two children plus the root label
determine the type of the whole tree through the powerset transition
`delta_hat`, which is monotone in both child types.  Pushing the uniform
distribution of height-d types through one more level is the operator F
implemented by `apply_F`; M_d is the mass of types that intersect the
initial set.

State sets are bitmasks over the declared state order; mask order is the
canonical serialisation order.  Exact arithmetic stores the distribution
of height-d types as integer counts over the implicit denominator
|alphabet| ** (2**d - 1), which avoids normalising gigantic rationals when
iterating deep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

from .errors import DiagnosticBoundError, InputError, ResourceError
from .trees import (
    DEFAULT_ENUMERATION_BUDGET,
    FiniteTree,
    enumerate_full_trees,
    full_node_count,
)

try:  # pure-int fallback is correct, just slower on deep exact runs
    from gmpy2 import mpz as _bigint
except ImportError:  # pragma: no cover - exercised only without gmpy2
    def _bigint(x):
        return x

_POWERSET_STATE_CAP = 24

EXACT_STABILIZED = "exact-stabilized"
TOLERANCE_CONVERGED = "tolerance-converged"
ITERATION_CAPPED = "iteration-capped"


class SafetyAutomaton:
    """Top-down safety automaton ⟨alphabet, states, transitions, initial⟩.

    Transitions are (state, letter, left_state, right_state).  There are
    no explicit rejecting devices: a run gets stuck exactly when no
    transition matches, and acceptance happens at the root.
    """

    __slots__ = (
        "alphabet", "states", "transitions", "initial",
        "_state_index", "_by_letter", "_delta_memo", "_hash",
    )

    def __init__(
        self,
        alphabet: Iterable[str],
        states: Iterable[str],
        transitions: Iterable[tuple[str, str, str, str]],
        initial: Iterable[str],
    ):
        alphabet = tuple(alphabet)
        states = tuple(states)
        transitions = frozenset(transitions)
        initial = frozenset(initial)
        if not alphabet or len(set(alphabet)) != len(alphabet):
            raise InputError(f"alphabet must be non-empty without repeats: {alphabet}")
        if not states or len(set(states)) != len(states):
            raise InputError(f"states must be non-empty without repeats: {states}")
        index = {q: i for i, q in enumerate(states)}
        for t in transitions:
            q, a, ql, qr = t
            if q not in index or ql not in index or qr not in index:
                raise InputError(f"transition {t} uses an undeclared state")
            if a not in alphabet:
                raise InputError(f"transition {t} uses an undeclared letter")
        for q in initial:
            if q not in index:
                raise InputError(f"initial state {q} undeclared")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "transitions", transitions)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "_state_index", index)
        by_letter = {a: [] for a in alphabet}
        for q, a, ql, qr in sorted(transitions):
            by_letter[a].append((1 << index[q], index[ql], index[qr]))
        object.__setattr__(self, "_by_letter", {a: tuple(v) for a, v in by_letter.items()})
        object.__setattr__(self, "_delta_memo", {})
        object.__setattr__(self, "_hash", None)

    # -- masks -----------------------------------------------------------

    @property
    def state_count(self) -> int:
        return len(self.states)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.states)) - 1

    @property
    def initial_mask(self) -> int:
        return self.state_mask(self.initial)

    def state_mask(self, names: Iterable[str]) -> int:
        mask = 0
        for q in names:
            try:
                mask |= 1 << self._state_index[q]
            except KeyError:
                raise InputError(f"unknown state {q!r}") from None
        return mask

    def mask_states(self, mask: int) -> tuple[str, ...]:
        return tuple(q for i, q in enumerate(self.states) if mask >> i & 1)

    # -- transition structure ---------------------------------------------

    def delta_hat(self, letter: str, left_mask: int, right_mask: int) -> int:
        """Powerset transition: states that can fire on `letter` sending the
        left child into `left_mask` and the right child into `right_mask`."""
        key = (letter, left_mask, right_mask)
        memo = self._delta_memo
        hit = memo.get(key)
        if hit is not None:
            return hit
        try:
            triples = self._by_letter[letter]
        except KeyError:
            raise InputError(f"letter {letter!r} not in alphabet {self.alphabet}") from None
        out = 0
        for qbit, li, ri in triples:
            if left_mask >> li & 1 and right_mask >> ri & 1:
                out |= qbit
        memo[key] = out
        return out

    # -- value semantics ----------------------------------------------------

    def _key(self):
        return (self.alphabet, self.states, self.transitions, self.initial)

    def __eq__(self, other):
        if not isinstance(other, SafetyAutomaton):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(self._key()))
        return self._hash

    def __repr__(self):
        return (
            f"SafetyAutomaton({len(self.states)} states, {len(self.alphabet)} letters, "
            f"{len(self.transitions)} transitions)"
        )


def powerset_delta(aut: SafetyAutomaton, letter: str, left_mask: int, right_mask: int) -> int:
    return aut.delta_hat(letter, left_mask, right_mask)


def type_of(aut: SafetyAutomaton, tree: FiniteTree) -> int:
    """Type (mask of states admitting a partial run) of a full finite tree."""
    if not tree.is_full():
        raise InputError("type is defined on full trees only")
    if not set(tree.alphabet) <= set(aut.alphabet):
        raise InputError(
            f"tree alphabet {tree.alphabet} not contained in automaton alphabet {aut.alphabet}"
        )
    h = tree.height
    dense = tree.dense
    n = len(dense)
    first_leaf = (1 << h) - 1
    full = aut.full_mask
    masks = [0] * n
    dh = aut.delta_hat
    for i in range(n - 1, -1, -1):
        if i >= first_leaf:
            masks[i] = full
        else:
            masks[i] = dh(dense[i], masks[2 * i + 1], masks[2 * i + 2])
    return masks[0]


# -- distributions over types ------------------------------------------------


class TypeDistribution:
    """Sparse distribution over state-set masks.

    backend "exact" holds Fractions summing to exactly 1; backend "float"
    holds doubles whose sum stays within 1e-12 of 1.
    """

    __slots__ = ("n_states", "values", "backend")

    def __init__(self, n_states: int, values: Mapping[int, Fraction | float], backend: str = "exact"):
        if backend not in ("exact", "float"):
            raise InputError(f"unknown backend {backend!r}")
        if n_states > _POWERSET_STATE_CAP:
            raise ResourceError(
                f"powerset distributions capped at {_POWERSET_STATE_CAP} states, got {n_states}"
            )
        clean = {}
        top = 1 << n_states
        for mask, v in sorted(values.items()):
            if not 0 <= mask < top:
                raise InputError(f"mask {mask} out of range for {n_states} states")
            if v:
                clean[mask] = v
        total = sum(clean.values())
        if backend == "exact":
            if total != 1:
                raise InputError(f"exact distribution must sum to 1, got {total}")
        else:
            if abs(total - 1.0) > 1e-12:
                raise InputError(f"float distribution sums to {total!r}, off by more than 1e-12")
        self.n_states = n_states
        self.values = clean
        self.backend = backend

    @classmethod
    def point(cls, n_states: int, mask: int) -> "TypeDistribution":
        return cls(n_states, {mask: Fraction(1)}, "exact")

    def measure(self, initial_mask: int):
        """Mass of types intersecting the initial set: the M value."""
        zero = Fraction(0) if self.backend == "exact" else 0.0
        return sum((v for m, v in self.values.items() if m & initial_mask), zero)

    def to_float(self) -> "TypeDistribution":
        if self.backend == "float":
            return self
        return TypeDistribution(self.n_states, {m: float(v) for m, v in self.values.items()}, "float")

    def __eq__(self, other):
        if not isinstance(other, TypeDistribution):
            return NotImplemented
        return (self.n_states, self.backend, self.values) == (other.n_states, other.backend, other.values)

    def __repr__(self):
        body = ", ".join(f"{m:#x}: {v}" for m, v in self.values.items())
        return f"TypeDistribution[{self.backend}]({{{body}}})"


def initial_type_distribution(aut: SafetyAutomaton) -> TypeDistribution:
    """Distribution of types of height-0 trees: every single-node tree has
    the full state set as its type."""
    return TypeDistribution.point(aut.state_count, aut.full_mask)


def apply_F(aut: SafetyAutomaton, dist: TypeDistribution) -> TypeDistribution:
    """One level of the type evolution: the type distribution of a random
    tree one deeper, children drawn independently from `dist`."""
    if dist.n_states != aut.state_count:
        raise InputError("distribution and automaton disagree on state count")
    k = len(aut.alphabet)
    items = sorted(dist.values.items())
    acc: dict[int, Fraction | float] = {}
    dh = aut.delta_hat
    for a in aut.alphabet:
        for m_l, p_l in items:
            for m_r, p_r in items:
                m = dh(a, m_l, m_r)
                prod = p_l * p_r
                if m in acc:
                    acc[m] += prod
                else:
                    acc[m] = prod
    if dist.backend == "exact":
        scale = Fraction(1, k)
        vals = {m: v * scale for m, v in acc.items()}
    else:
        # renormalise so rounding drift never accumulates across levels
        total = sum(acc.values())
        vals = {m: v / total for m, v in acc.items()}
    return TypeDistribution(dist.n_states, vals, dist.backend)


@lru_cache(maxsize=8)
def upward_closed_families(n_states: int) -> tuple[frozenset[int], ...]:
    """All upward-closed collections of state-set masks, each given by its
    member masks.  Grows as the Dedekind numbers; callers bound n_states."""
    masks = sorted(range(1 << n_states), key=lambda m: (-bin(m).count("1"), -m))
    out: list[frozenset[int]] = []
    included: set[int] = set()

    def rec(i: int) -> None:
        if i == len(masks):
            out.append(frozenset(included))
            return
        m = masks[i]
        missing = [b for b in range(n_states) if not m >> b & 1]
        if all((m | 1 << b) in included for b in missing):
            included.add(m)
            rec(i + 1)
            included.discard(m)
        rec(i + 1)

    rec(0)
    return tuple(out)


def leq_distributions(alpha: TypeDistribution, beta: TypeDistribution, bound: int = 4) -> bool:
    """Order test: alpha(U) <= beta(U) for every upward-closed U.

    Diagnostic tool; refuses beyond `bound` states because the family
    count grows like the Dedekind numbers.
    """
    if alpha.n_states != beta.n_states:
        raise InputError("distributions disagree on state count")
    n = alpha.n_states
    if n > bound:
        raise DiagnosticBoundError(
            f"order check enumerates upward-closed families; bound is {bound} states, got {n}"
        )
    for fam in upward_closed_families(n):
        a = sum(v for m, v in alpha.values.items() if m in fam)
        b = sum(v for m, v in beta.values.items() if m in fam)
        if a > b:
            return False
    return True


# -- exact iteration over integer counts --------------------------------------


def _common_power(values, k: int) -> int:
    """Largest t with k**t dividing every value; fast path for k = 2,
    bounded probing otherwise (any t is sound, it only affects size)."""
    if k == 2:
        t = None
        for c in values:
            v = (int(c) & -int(c)).bit_length() - 1
            t = v if t is None else min(t, v)
            if t == 0:
                return 0
        return t or 0
    t = 0
    while t < 8 and all(c % k == 0 for c in values):
        values = [c // k for c in values]
        t += 1
    return t


def iter_exact_type_counts(aut: SafetyAutomaton) -> Iterator[tuple[int, dict[int, int], int]]:
    """Yields (depth, counts, den_exp) forever; the exact distribution of
    height-`depth` types is counts[mask] / |alphabet| ** den_exp.

    Counts stay integers so no gcd normalisation ever runs; common powers
    of |alphabet| are factored out (reflected in den_exp), which keeps
    stabilized or absorbing automata cheap at any depth.  Each pairwise
    product is computed once per level and reused across letters and
    argument orders.
    """
    k = len(aut.alphabet)
    counts: dict[int, int] = {aut.full_mask: _bigint(1)}
    den_exp = 0
    depth = 0
    dh = aut.delta_hat
    letters = aut.alphabet
    while True:
        yield depth, counts, den_exp
        items = sorted(counts.items())
        n = len(items)
        prods = [[None] * n for _ in range(n)]
        for i in range(n):
            c_i = items[i][1]
            prods[i][i] = c_i * c_i
            for j in range(i + 1, n):
                p = c_i * items[j][1]
                prods[i][j] = p
                prods[j][i] = p
        nxt: dict[int, int] = {}
        for a in letters:
            for i in range(n):
                m_l = items[i][0]
                row = prods[i]
                for j in range(n):
                    m = dh(a, m_l, items[j][0])
                    if m in nxt:
                        nxt[m] += row[j]
                    else:
                        nxt[m] = row[j]
        den_exp = 2 * den_exp + 1
        t = _common_power(list(nxt.values()), k)
        if t:
            nxt = {m: c // (k**t) for m, c in nxt.items()}
            den_exp -= t
        counts = nxt
        depth += 1


def _counts_to_distribution(aut: SafetyAutomaton, counts: dict[int, int], den_exp: int) -> TypeDistribution:
    den = len(aut.alphabet) ** den_exp
    return TypeDistribution(
        aut.state_count, {m: Fraction(int(c), den) for m, c in counts.items()}, "exact"
    )


def exact_depth_measure(aut: SafetyAutomaton, depth: int) -> Fraction:
    """M_depth as an exact rational: mass of height-`depth` trees whose type
    meets the initial set.  A certified upper bound on the true measure."""
    if depth < 0:
        raise InputError("depth must be non-negative")
    it = iter_exact_type_counts(aut)
    for d, counts, den_exp in it:
        if d == depth:
            imask = aut.initial_mask
            num = sum(c for m, c in counts.items() if m & imask)
            return Fraction(int(num), len(aut.alphabet) ** den_exp)
    raise AssertionError("unreachable")


def exact_type_distribution(aut: SafetyAutomaton, depth: int) -> TypeDistribution:
    """Exact distribution of types of uniformly random height-`depth` trees."""
    if depth < 0:
        raise InputError("depth must be non-negative")
    for d, counts, den_exp in iter_exact_type_counts(aut):
        if d == depth:
            return _counts_to_distribution(aut, counts, den_exp)
    raise AssertionError("unreachable")


def brute_force_depth_measure(
    aut: SafetyAutomaton,
    depth: int,
    budget: int = DEFAULT_ENUMERATION_BUDGET,
) -> tuple[Fraction, dict[int, Fraction]]:
    """M_depth by enumerating every height-`depth` tree and computing its
    type bottom-up.  Returns (measure, empirical type distribution); the
    independent check against `exact_depth_measure` and `apply_F`."""
    counts: dict[int, int] = {}
    total = 0
    imask = aut.initial_mask
    accepted = 0
    for tree in enumerate_full_trees(aut.alphabet, depth, budget=budget):
        m = type_of(aut, tree)
        counts[m] = counts.get(m, 0) + 1
        if m & imask:
            accepted += 1
        total += 1
    dist = {m: Fraction(c, total) for m, c in sorted(counts.items())}
    return Fraction(accepted, total), dist


def _support_trajectory(aut: SafetyAutomaton, max_depth: int) -> list[frozenset[int]]:
    """Supports of the type distributions by pure set dynamics (no counts)."""
    dh = aut.delta_hat
    sup = frozenset([aut.full_mask])
    out = [sup]
    for _ in range(max_depth):
        sup = frozenset(
            dh(a, l, r) for a in aut.alphabet for l in sup for r in sup
        )
        out.append(sup)
    return out


def verify_monotone_descent(
    aut: SafetyAutomaton,
    max_depth: int = 25,
    order_depth: int = 10,
    order_bound: int = 4,
) -> tuple[bool, int | None]:
    """Check M_{d+1} <= M_d exactly for d <= max_depth and the distribution
    order alpha_{d+1} below alpha_d for d <= order_depth.

    Returns (ok, first bad depth or None).  Two sound shortcuts keep the
    exact big-integer work to the depths where M actually moves: iteration
    stops once the distribution hits an exact fixpoint (all later levels
    equal), and once the support trajectory shows every later level has M
    identically 1 (every support mask meets the initial set) or identically
    0 (none does).
    """
    imask = aut.initial_mask
    k = len(aut.alphabet)
    sups = _support_trajectory(aut, max_depth + 1)

    def uniform(sup):
        pattern = [bool(m & imask) for m in sup] or [False]
        if all(pattern):
            return 1
        if not any(pattern):
            return 0
        return None

    last = uniform(sups[-1])
    flat_from = max_depth + 2
    if last is not None:
        flat_from = max_depth + 1
        for d in range(max_depth, -1, -1):
            if uniform(sups[d]) == last:
                flat_from = d
            else:
                break

    check_order = aut.state_count <= order_bound
    prev = None
    prev_dist = None
    for d, counts, den_exp in iter_exact_type_counts(aut):
        if check_order and d <= order_depth + 1:
            dist = _counts_to_distribution(aut, counts, den_exp)
            if prev_dist is not None and not leq_distributions(dist, prev_dist, order_bound):
                return False, d
            prev_dist = dist
        acc = sum(c for m, c in counts.items() if m & imask)
        if prev is not None:
            p_acc, p_exp, p_counts = prev
            common = max(p_exp, den_exp)
            if int(acc) * k ** (common - den_exp) > int(p_acc) * k ** (common - p_exp):
                return False, d
            if den_exp == p_exp and counts == p_counts:
                return True, None  # exact fixpoint: every later level equal
        if d >= flat_from and d > order_depth + 1:
            return True, None  # M constant (0 or 1) at every remaining level
        prev = (acc, den_exp, counts)
        if d == max_depth:
            break
    # Final comparison M_{max_depth+1} <= M_{max_depth} without building the
    # whole next distribution: its accept mass is sum_l c_l * g_l where g_l
    # adds up the partner counts whose joint image meets the initial set, so
    # one multiplication per support mask replaces the full convolution.
    dh = aut.delta_hat
    masks = sorted(counts)
    last_acc = 0
    for m_l in masks:
        g = 0
        for a in aut.alphabet:
            for m_r in masks:
                if dh(a, m_l, m_r) & imask:
                    g += counts[m_r]
        if g:
            last_acc += counts[m_l] * g
    if int(last_acc) > int(acc) * k ** (den_exp + 1):
        return False, max_depth + 1
    return True, None


# -- fixpoint iteration ---------------------------------------------------


@dataclass
class MeasureEstimate:
    """Outcome of iterating M_d.  Every trace entry is an upper bound on the
    true measure (exact backend: certified; float backend: up to rounding),
    and the trace never increases."""

    value: Fraction | float
    status: str
    trace: list = field(repr=False)
    exact: bool = True

    @property
    def iterations(self) -> int:
        return len(self.trace) - 1

    @property
    def last_delta(self):
        if len(self.trace) < 2:
            return None
        return abs(self.trace[-1] - self.trace[-2])


def iterate_measure(
    aut: SafetyAutomaton,
    tolerance: float = 1e-9,
    max_iters: int = 10**6,
    mode: str = "float",
    exact_bit_cap: int = 1 << 23,
) -> MeasureEstimate:
    """Iterate the type evolution from the height-0 distribution, recording
    M_d, until the distribution repeats exactly (exact mode), consecutive
    distributions differ by less than `tolerance` in total variation, or
    `max_iters` levels are done.

    The tolerance test runs on whole distributions, not on M alone: M can
    plateau for a level while the distribution still moves (the constraint
    of an automaton may bite only every second depth), and the masks
    meeting the initial set form an upward-closed family, so a total
    variation gap below `tolerance` still guarantees the consecutive M
    values are within `tolerance` of each other.

    Exact mode carries integer counts whose bit length doubles per level;
    once the denominator would exceed `exact_bit_cap` bits the run stops
    with the iteration-capped status instead of exhausting memory.  Long
    non-stabilizing runs belong to float mode.
    """
    if mode not in ("exact", "float"):
        raise InputError(f"unknown mode {mode!r}")
    if max_iters < 1:
        raise InputError("max_iters must be at least 1")
    k = len(aut.alphabet)
    imask = aut.initial_mask

    if mode == "exact":
        bits_per_unit = max(1, (k - 1).bit_length())
        gen = iter_exact_type_counts(aut)
        _, counts, den_exp = next(gen)
        trace = [Fraction(int(sum(c for m, c in counts.items() if m & imask)), k**den_exp)]
        tol = Fraction(tolerance) if tolerance > 0 else None
        for _ in range(max_iters):
            if (2 * den_exp + 1) * bits_per_unit > exact_bit_cap:
                return MeasureEstimate(trace[-1], ITERATION_CAPPED, trace, exact=True)
            _, nxt_counts, nxt_exp = next(gen)
            trace.append(
                Fraction(int(sum(c for m, c in nxt_counts.items() if m & imask)), k**nxt_exp)
            )
            # common powers of k may have been factored out, so bring both
            # levels to a shared exponent before comparing
            common = max(den_exp, nxt_exp)
            f_old = k ** (common - den_exp)
            f_new = k ** (common - nxt_exp)
            if nxt_counts.keys() == counts.keys() and all(
                nxt_counts[m] * f_new == counts[m] * f_old for m in counts
            ):
                return MeasureEstimate(trace[-1], EXACT_STABILIZED, trace, exact=True)
            if tol is not None:
                # total-variation gap between consecutive levels; masks whose
                # types meet I form an upward-closed family, so this implies
                # |M_d - M_{d+1}| < tolerance as well
                gap = sum(
                    abs(nxt_counts.get(m, 0) * f_new - counts.get(m, 0) * f_old)
                    for m in counts.keys() | nxt_counts.keys()
                )
                if int(gap) < 2 * tol * k**common:
                    return MeasureEstimate(trace[-1], TOLERANCE_CONVERGED, trace, exact=True)
            counts, den_exp = nxt_counts, nxt_exp
        return MeasureEstimate(trace[-1], ITERATION_CAPPED, trace, exact=True)

    dist = initial_type_distribution(aut).to_float()
    trace_f = [dist.measure(imask)]
    for _ in range(max_iters):
        nxt = apply_F(aut, dist)
        trace_f.append(nxt.measure(imask))
        if tolerance > 0:
            gap = 0.5 * sum(
                abs(nxt.values.get(m, 0.0) - dist.values.get(m, 0.0))
                for m in dist.values.keys() | nxt.values.keys()
            )
            if gap < tolerance:
                return MeasureEstimate(trace_f[-1], TOLERANCE_CONVERGED, trace_f, exact=False)
        dist = nxt
    return MeasureEstimate(trace_f[-1], ITERATION_CAPPED, trace_f, exact=False)
