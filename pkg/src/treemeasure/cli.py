"""Command-line front end: parse fixture files, dispatch to engines,
render results, and cross-check against independent oracles.

Exit codes: 0 success, 1 oracle disagreement, 2 parse error, 3 budget or
emission-bound error, 4 resource error.
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction

import click

from .boolcomb import measure_bccq
from .certificate import DEFAULT_EMISSION_BOUND, emit_real_formula
from .cq import measure_cq
from .errors import BudgetError, InputError, ParseError, ResourceError
from .finite import accepts_nonfull_tree, lift_automaton, measure_finite_language
from .fo import (
    BoolConstant,
    Conjunction,
    Disjunction,
    LocalAtom,
    Negation,
    compute_measure_fo,
    compute_reduction,
    iter_local_atoms,
    model_check,
)
from .formats import (
    parse_automaton,
    parse_bccq,
    parse_finite_automaton,
    parse_fo,
    parse_pattern,
)
from .safety import (
    EXACT_STABILIZED,
    MeasureEstimate,
    brute_force_depth_measure,
    exact_depth_measure,
    iterate_measure,
)
from .trees import DEFAULT_ENUMERATION_BUDGET, enumerate_full_trees

KINDS = ("automaton", "cq", "bccq", "fo", "finite")
FORMATS = ("rational", "decimal", "json")


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ParseError(f"cannot read input: {e}", source=path) from e


def _load(kind: str, path: str):
    text = _read(path)
    if kind == "automaton":
        return parse_automaton(text, source=path)
    if kind == "finite":
        aut = parse_finite_automaton(text, source=path)
        if accepts_nonfull_tree(aut):
            click.echo(
                "warning: language contains a tree with a one-child node; "
                "such trees never arise as projections and add no measure",
                err=True,
            )
        return aut
    if kind == "cq":
        return parse_pattern(text, source=path)
    if kind == "bccq":
        return parse_bccq(text, source=path, base_dir=os.path.dirname(os.path.abspath(path)))
    return parse_fo(text, source=path)


def _render_exact(value: Fraction, fmt: str) -> str:
    if fmt == "rational":
        return str(value)
    if fmt == "decimal":
        return f"value={float(value):.6f} status=exact"
    return json.dumps(
        {"value": float(value), "rational": str(value), "status": "exact", "trace": []}
    )


def _render_estimate(est: MeasureEstimate, fmt: str) -> str:
    exact_fraction = est.value if est.exact and est.status == EXACT_STABILIZED else None
    if fmt == "rational" and exact_fraction is not None:
        return str(exact_fraction)
    delta = est.last_delta
    if fmt == "json":
        return json.dumps(
            {
                "value": float(est.value),
                "rational": str(exact_fraction) if exact_fraction is not None else None,
                "status": est.status,
                "iterations": est.iterations,
                "last_delta": None if delta is None else float(delta),
                "trace": [float(v) for v in est.trace],
            }
        )
    delta_s = "n/a" if delta is None else f"{float(delta):.3e}"
    return (
        f"value={float(est.value):.6f} status={est.status}"
        f" iterations={est.iterations} last_delta={delta_s}"
    )


def _combination_truth(formula, truth) -> bool:
    if isinstance(formula, BoolConstant):
        return formula.value
    if isinstance(formula, LocalAtom):
        return truth[formula.sentence]
    if isinstance(formula, Negation):
        return not _combination_truth(formula.child, truth)
    if isinstance(formula, Conjunction):
        return all(_combination_truth(c, truth) for c in formula.children)
    if isinstance(formula, Disjunction):
        return any(_combination_truth(c, truth) for c in formula.children)
    raise InputError(f"not a combination node: {formula!r}")


def _fo_oracle_measure(formula, budget: int) -> Fraction:
    """Measure by model-checking each sentence's reduction on every tree of
    height 2r+1; independent of the candidate-depth counting path."""
    sentences = sorted({a.sentence for a in iter_local_atoms(formula)}, key=repr)
    if not sentences:
        return Fraction(1) if _combination_truth(formula, {}) else Fraction(0)
    reduced = {s: compute_reduction(s) for s in sentences}
    r = max(s.radius for s in sentences)
    alphabet = sentences[0].alphabet
    total = 0
    good = 0
    for tree in enumerate_full_trees(alphabet, 2 * r + 1, budget=budget):
        total += 1
        truth = {s: model_check(tree, g) for s, g in reduced.items()}
        if _combination_truth(formula, truth):
            good += 1
    return Fraction(good, total)


def _exit_for(err: Exception) -> int:
    if isinstance(err, ParseError) or isinstance(err, InputError):
        return 2
    if isinstance(err, BudgetError):
        return 3
    return 4


@click.group(context_settings={"auto_envvar_prefix": "TREEMEASURE"})
@click.version_option(package_name="treemeasure")
def main():
    """Uniform measure of regular sets of infinite labelled binary trees."""


@main.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.argument("path", type=click.Path())
@click.option("--tol", type=float, default=1e-9, show_default=True, help="Iteration stopping tolerance.")
@click.option("--max-iters", type=int, default=10**6, show_default=True, help="Iteration cap.")
@click.option("--mode", type=click.Choice(("exact", "float")), default="float", show_default=True)
@click.option("--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET, show_default=True, help="Tree enumeration cap.")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="rational", show_default=True)
def measure(kind, path, tol, max_iters, mode, budget, fmt):
    """Measure of the language in PATH, interpreted per KIND."""
    try:
        obj = _load(kind, path)
        if kind == "automaton":
            out = _render_estimate(iterate_measure(obj, tol, max_iters, mode), fmt)
        elif kind == "finite":
            out = _render_estimate(measure_finite_language(obj, tol, max_iters, mode), fmt)
        elif kind == "cq":
            out = _render_exact(measure_cq(obj, budget), fmt)
        elif kind == "bccq":
            out = _render_exact(measure_bccq(obj, budget), fmt)
        else:
            out = _render_exact(compute_measure_fo(obj, budget), fmt)
    except (ParseError, InputError, BudgetError, ResourceError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(_exit_for(e))
    click.echo(out)


@main.command()
@click.argument("kind", type=click.Choice(KINDS))
@click.argument("path", type=click.Path())
@click.option("--oracle-depth", type=int, default=2, show_default=True, help="Depth for exact automaton cross-checks.")
@click.option("--budget", type=int, default=DEFAULT_ENUMERATION_BUDGET, show_default=True)
def oracle(kind, path, oracle_depth, budget):
    """Cross-check the engine against an independent computation.

    Automata compare the powerset depth-d value against brute-force tree
    enumeration; patterns and Boolean combinations compare the counting
    path against the compiled-automaton path; sentence combinations
    compare candidate-depth counting against whole-tree model checking.
    The TREEMEASURE_ORACLE_PERTURB environment variable offsets the
    oracle value (negative control for the comparison itself).
    """
    try:
        obj = _load(kind, path)
        if kind == "automaton":
            engine = exact_depth_measure(obj, oracle_depth)
            reference = brute_force_depth_measure(obj, oracle_depth, budget)[0]
        elif kind == "finite":
            lifted = lift_automaton(obj)
            engine = exact_depth_measure(lifted, oracle_depth)
            reference = brute_force_depth_measure(lifted, oracle_depth, budget)[0]
        elif kind == "cq":
            engine = measure_cq(obj, budget)
            reference = measure_cq(obj, budget, via_compile=True)
        elif kind == "bccq":
            engine = measure_bccq(obj, budget)
            reference = measure_bccq(obj, budget, via_compile=True)
        else:
            engine = compute_measure_fo(obj, budget)
            reference = _fo_oracle_measure(obj, budget)
        perturb = os.environ.get("TREEMEASURE_ORACLE_PERTURB")
        if perturb:
            reference = reference + Fraction(float(perturb))
    except (ParseError, InputError, BudgetError, ResourceError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(_exit_for(e))
    click.echo(f"engine={engine}")
    click.echo(f"oracle={reference}")
    if engine == reference:
        click.echo("EQUAL")
    else:
        click.echo("DIFFER")
        sys.exit(1)


@main.command("emit-smt")
@click.argument("path", type=click.Path())
@click.argument("out_path", type=click.Path())
@click.option("--emit-bound", type=int, default=DEFAULT_EMISSION_BOUND, show_default=True, help="Largest allowed variable count 2^states.")
def emit_smt(path, out_path, emit_bound):
    """Write the real-arithmetic certificate for the automaton in PATH."""
    try:
        aut = parse_automaton(_read(path), source=path)
        text = emit_real_formula(aut, bound=emit_bound)
    except (ParseError, InputError) as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(2)
    except ResourceError as e:
        # the emission bound is a size budget on the output, so it maps to
        # the budget exit code rather than the resource one
        click.echo(f"error: {e}", err=True)
        sys.exit(3)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)
    click.echo(f"variables={1 << aut.state_count} measure-symbol=m")


if __name__ == "__main__":
    main()
