"""Uniform measure of regular sets of infinite labelled binary trees.

Engines: safety-automaton fixpoint iteration, conjunctive-query patterns,
their Boolean combinations, local first-order sentences, finite-tree
languages via flat-terminated encodings, and SMT certificates for the
computed values.
"""

from .boolcomb import (
    BccqFormula,
    BoolConstant,
    Conjunction,
    Disjunction,
    Negation,
    PatternAtom,
    measure_bccq,
    reduce_to_root_atoms,
)
from .certificate import DEFAULT_EMISSION_BOUND, check_solution, emit_real_formula
from .cq import (
    EDGE_KINDS,
    Pattern,
    check_homomorphism,
    compile_pattern_to_safety,
    firm_decomposition,
    is_satisfiable,
    measure_cq,
    root_subpattern,
)
from .errors import (
    BudgetError,
    DiagnosticBoundError,
    InputError,
    ParseError,
    ResourceError,
    TreeMeasureError,
    TruncationError,
)
from .finite import (
    ExtendedAlphabet,
    FiniteTreeAutomaton,
    accepts_nonfull_tree,
    embed_finite_tree,
    extend_alphabet,
    finite_accepts,
    lift_automaton,
    measure_finite_language,
    project,
)
from .fo import (
    BasicLocalSentence,
    LocalCombination,
    LocalAtom,
    compute_measure_fo,
    compute_reduction,
    is_root_formula,
    is_satisfiable_local,
    model_check,
    validate_local,
)
from .formats import (
    parse_automaton,
    parse_bccq,
    parse_finite_automaton,
    parse_fo,
    parse_pattern,
    parse_tree,
)
from .safety import (
    EXACT_STABILIZED,
    ITERATION_CAPPED,
    TOLERANCE_CONVERGED,
    MeasureEstimate,
    SafetyAutomaton,
    TypeDistribution,
    exact_depth_measure,
    iterate_measure,
    leq_distributions,
)
from .trees import DEFAULT_ENUMERATION_BUDGET, FiniteTree, enumerate_full_trees

__version__ = "0.1.0"

__all__ = [
    "BccqFormula",
    "BoolConstant",
    "Conjunction",
    "Disjunction",
    "Negation",
    "PatternAtom",
    "measure_bccq",
    "reduce_to_root_atoms",
    "DEFAULT_EMISSION_BOUND",
    "check_solution",
    "emit_real_formula",
    "EDGE_KINDS",
    "Pattern",
    "check_homomorphism",
    "compile_pattern_to_safety",
    "firm_decomposition",
    "is_satisfiable",
    "measure_cq",
    "root_subpattern",
    "BudgetError",
    "DiagnosticBoundError",
    "InputError",
    "ParseError",
    "ResourceError",
    "TreeMeasureError",
    "TruncationError",
    "ExtendedAlphabet",
    "FiniteTreeAutomaton",
    "accepts_nonfull_tree",
    "embed_finite_tree",
    "extend_alphabet",
    "finite_accepts",
    "lift_automaton",
    "measure_finite_language",
    "project",
    "BasicLocalSentence",
    "LocalCombination",
    "LocalAtom",
    "compute_measure_fo",
    "compute_reduction",
    "is_root_formula",
    "is_satisfiable_local",
    "model_check",
    "validate_local",
    "parse_automaton",
    "parse_bccq",
    "parse_finite_automaton",
    "parse_fo",
    "parse_pattern",
    "parse_tree",
    "EXACT_STABILIZED",
    "ITERATION_CAPPED",
    "TOLERANCE_CONVERGED",
    "MeasureEstimate",
    "SafetyAutomaton",
    "TypeDistribution",
    "exact_depth_measure",
    "iterate_measure",
    "leq_distributions",
    "DEFAULT_ENUMERATION_BUDGET",
    "FiniteTree",
    "enumerate_full_trees",
]
