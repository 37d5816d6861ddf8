"""Real-arithmetic certificates for safety-automaton measures.

The measure of a safety language is the mass the largest fixpoint of the
type evolution puts on state sets meeting the initial set.  That
characterisation is first-order over the reals: one variable per state
set, quadratic fixpoint equations, and a universally quantified clause
saying every other fixpoint distribution lies below in the stochastic
order over upward-closed families (families encoded by 0/1 indicator
variables).  This module serializes that formula as an SMT-LIB 2 script
in nonlinear real arithmetic and validates candidate solutions by direct
substitution; solving is left to external tools.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Mapping

from .errors import InputError, ResourceError
from .safety import SafetyAutomaton

DEFAULT_EMISSION_BOUND = 4096


def _product_terms(aut: SafetyAutomaton) -> list[dict[tuple[int, int], int]]:
    """For each target mask, the (left, right) child-mask pairs reaching it
    and over how many letters they do."""
    n_masks = 1 << aut.state_count
    out: list[dict[tuple[int, int], int]] = [dict() for _ in range(n_masks)]
    for a in aut.alphabet:
        for left in range(n_masks):
            for right in range(n_masks):
                target = out[aut.delta_hat(a, left, right)]
                target[(left, right)] = target.get((left, right), 0) + 1
    return out


def _sum_expr(parts: list[str]) -> str:
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    return "(+ " + " ".join(parts) + ")"


def _fixpoint_equations(aut: SafetyAutomaton, stem: str) -> list[str]:
    """One equation per mask: k * stem_S = sum of child products landing on S."""
    k = len(aut.alphabet)
    equations = []
    for mask, pairs in enumerate(_product_terms(aut)):
        parts = []
        for (left, right), coeff in sorted(pairs.items()):
            head = f"{coeff} " if coeff > 1 else ""
            parts.append(f"(* {head}{stem}_{left} {stem}_{right})")
        equations.append(f"(= (* {k} {stem}_{mask}) {_sum_expr(parts)})")
    return equations


def emit_real_formula(aut: SafetyAutomaton, bound: int = DEFAULT_EMISSION_BOUND) -> str:
    """SMT-LIB 2 script pinning m to the measure of the automaton's language.

    Variables x_0..x_{N-1} (N = 2^states, indexed by state-set bitmask)
    carry the limiting type distribution; m is its mass on sets meeting
    the initial states.  The quantified maximality assertion makes the
    intended fixpoint the unique solution.
    """
    n_masks = 1 << aut.state_count
    if n_masks > bound:
        raise ResourceError(
            f"certificate needs {n_masks} distribution variables, bound is {bound}"
        )
    imask = aut.initial_mask
    lines = [
        f"; measure certificate: {aut.state_count} states, {len(aut.alphabet)} letters",
        f"; x_i is the limit probability of the state set with bitmask i",
        "(set-logic NRA)",
        "(declare-const m Real)",
    ]
    for i in range(n_masks):
        lines.append(f"(declare-const x_{i} Real)")
    for i in range(n_masks):
        lines.append(f"(assert (>= x_{i} 0))")
    lines.append(f"(assert (= {_sum_expr([f'x_{i}' for i in range(n_masks)])} 1))")
    for eq in _fixpoint_equations(aut, "x"):
        lines.append(f"(assert {eq})")
    measured = [f"x_{i}" for i in range(n_masks) if i & imask]
    lines.append(f"(assert (= m {_sum_expr(measured)}))")

    quant = [f"(y_{i} Real)" for i in range(n_masks)] + [
        f"(u_{i} Real)" for i in range(n_masks)
    ]
    premise = [f"(>= y_{i} 0)" for i in range(n_masks)]
    premise.append(f"(= {_sum_expr([f'y_{i}' for i in range(n_masks)])} 1)")
    premise.extend(_fixpoint_equations(aut, "y"))
    # indicators pick an upward-closed family of masks: 0/1 valued and
    # monotone along single-bit insertions
    premise.extend(f"(= (* u_{i} u_{i}) u_{i})" for i in range(n_masks))
    for i in range(n_masks):
        for b in range(aut.state_count):
            if not i >> b & 1:
                premise.append(f"(<= u_{i} u_{i | 1 << b})")
    weighted_y = _sum_expr([f"(* u_{i} y_{i})" for i in range(n_masks)])
    weighted_x = _sum_expr([f"(* u_{i} x_{i})" for i in range(n_masks)])
    lines.append(
        "(assert (forall ("
        + " ".join(quant)
        + ") (=> (and "
        + " ".join(premise)
        + f") (<= {weighted_y} {weighted_x}))))"
    )
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def check_solution(
    aut: SafetyAutomaton,
    values: Mapping[int, Fraction | float],
    m: Fraction | float | None = None,
):
    """Largest absolute residual of the unquantified certificate
    constraints under the substitution x_i = values.get(i, 0).

    Exact inputs give exact residuals (0 means the assertions hold
    verbatim); float inputs measure how far the candidate is from solving
    the system.  The quantified maximality clause is out of scope here:
    it speaks about all other fixpoints, not about the candidate.
    """
    n_masks = 1 << aut.state_count
    k = len(aut.alphabet)
    bad = [mask for mask in values if not 0 <= mask < n_masks]
    if bad:
        raise InputError(f"mask {bad[0]} out of range for {aut.state_count} states")
    zero = Fraction(0) if all(isinstance(v, Fraction) for v in values.values()) else 0.0
    x = [values.get(i, zero) for i in range(n_masks)]
    residual = max((-v for v in x), default=zero)
    residual = max(residual, abs(sum(x) - 1))
    for mask, pairs in enumerate(_product_terms(aut)):
        rhs = sum((c * x[l] * x[r] for (l, r), c in pairs.items()), zero)
        residual = max(residual, abs(k * x[mask] - rhs))
    if m is not None:
        measured = sum((x[i] for i in range(n_masks) if i & aut.initial_mask), zero)
        residual = max(residual, abs(m - measured))
    return residual
