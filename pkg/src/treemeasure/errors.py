"""Error taxonomy shared by every engine and the CLI.

The CLI maps these onto exit codes: ParseError -> 2, BudgetError -> 3,
ResourceError -> 4.  InputError signals a violated precondition (bad
position, malformed automaton, non-firm pattern handed to the compiler)
and surfaces as an ordinary failure.
"""


class TreeMeasureError(Exception):
    """Base class for all library errors."""


class InputError(TreeMeasureError):
    """A precondition on operation inputs was violated."""


class ParseError(TreeMeasureError):
    """A fixture file is malformed.  Carries 1-based line and column."""

    def __init__(self, message: str, line: int = 1, column: int = 1, source: str = "<string>"):
        self.line = line
        self.column = column
        self.source = source
        super().__init__(f"{source}:{line}:{column}: {message}")


class BudgetError(TreeMeasureError):
    """An enumeration would exceed the configured budget.

    `required` names the exact number of objects the enumeration needs,
    so callers can decide whether raising the budget is sane.
    """

    def __init__(self, message: str, required: int, budget: int):
        self.required = required
        self.budget = budget
        super().__init__(message)


class ResourceError(TreeMeasureError):
    """A computation exceeded a structural resource bound (state count,
    powerset width), as opposed to an enumeration budget."""


class DiagnosticBoundError(ResourceError):
    """A diagnostic-only check (distribution order test) was asked to run
    beyond the state-count bound it is meant for."""


class TruncationError(TreeMeasureError):
    """A finite prefix is too shallow to determine the projection image."""
