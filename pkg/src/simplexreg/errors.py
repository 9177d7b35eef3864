"""Exception hierarchy shared by all modules."""


class SimplexRegError(Exception):
    """Base class for errors raised by simplexreg."""


class DomainError(SimplexRegError, ValueError):
    """An argument lies outside the domain of the operation."""


class ParameterError(SimplexRegError, ValueError):
    """An option or tuning parameter is invalid for the given data."""


class LookupFailure(SimplexRegError, KeyError):
    """A part, covariate or column label is not known."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DegenerateDataError(SimplexRegError, ValueError):
    """The data carry no information for the requested quantity.

    Raised for all-zero rows, parts that are zero everywhere, zero-variance
    configurations and undefined directions.
    """


class GroupingError(SimplexRegError, ValueError):
    """Group labels do not define the required two non-trivial groups."""


class CollinearityError(SimplexRegError, ValueError):
    """The design matrix is rank deficient.

    ``dependent`` lists the columns that are linear combinations of the
    columns before them.
    """

    def __init__(self, message, dependent=()):
        super().__init__(message)
        self.dependent = list(dependent)


class OptimizationError(SimplexRegError, RuntimeError):
    """The optimizer could not make progress from a finite point.

    The last valid iterate is kept in ``last_point``.
    """

    def __init__(self, message, last_point=None):
        super().__init__(message)
        self.last_point = last_point


class SchemaError(SimplexRegError, ValueError):
    """Input file does not match the declared column layout."""


class ParseError(SimplexRegError, ValueError):
    """A cell of an input file could not be parsed."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column
