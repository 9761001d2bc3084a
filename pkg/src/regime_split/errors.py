"""Exception hierarchy shared by the library and the CLI.

Each class carries a short ``kind`` label and the process exit code the CLI
uses when the error escapes a command.
"""


class RegimeSplitError(Exception):
    kind = "error"
    exit_code = 1


class InputError(RegimeSplitError):
    """Problems with files or their contents."""

    kind = "io"
    exit_code = 2


class SchemaError(InputError):
    kind = "schema"


class ContinuityError(InputError):
    kind = "continuity"


class ParseError(InputError):
    kind = "parse"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EstimationError(RegimeSplitError):
    kind = "estimation"
    exit_code = 3


class SingularDesignError(EstimationError):
    kind = "singular-design"

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class RankError(EstimationError):
    kind = "rank"


class DegenerateSplitError(EstimationError):
    kind = "degenerate-split"


class InsufficientDataError(EstimationError):
    kind = "insufficient-data"


class SingularityError(EstimationError):
    kind = "singular"


class IterationCapError(EstimationError):
    """Raised when alternating estimation does not settle; keeps the best fit seen."""

    kind = "iteration-cap"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class DomainError(RegimeSplitError):
    kind = "domain"
    exit_code = 4


class ContractError(RegimeSplitError):
    kind = "contract"
    exit_code = 4
