"""errors: Exceptions raised by sieve_sgd.

Argument problems subclass ValueError, numeric failures subclass
ArithmeticError, and everything derives from SieveSgdError so callers can
catch the whole family at once.

Example:

    try:
        data = validate_dataset(X, y)
    except DatasetValidationError as err:
        for violation in err.violations:
            print(violation.code, violation)

"""

# Imports from other packages
from dataclasses import dataclass


class SieveSgdError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(SieveSgdError, ValueError):
    """A configuration value is outside its admissible range."""


class DimensionMismatchError(SieveSgdError, ValueError):
    """Array shapes passed to an operation do not agree."""


class NormalizationError(SieveSgdError, ValueError):
    """The numeraire coefficient is numerically zero."""


class CsvParseError(SieveSgdError, ValueError):
    """A CSV input file could not be parsed.

    Attributes:
        line (int): The 1-based line of the file where parsing failed, or None
            when the problem is not tied to one line.

    """

    def __init__(self, message, line=None):
        super().__init__(message)
        self.line = line


# Dataset violations, one dataclass per breached invariant
@dataclass(frozen=True)
class NonBinaryOutcome:
    """An outcome that is not exactly 0 or 1."""

    row: int
    code: str = "non_binary_outcome"

    def __str__(self):
        return "y at row {} is not 0 or 1".format(self.row)


@dataclass(frozen=True)
class NonFiniteEntry:
    """A NaN or infinite value in X or y. column is None for y."""

    row: int
    column: object = None
    code: str = "non_finite_entry"

    def __str__(self):
        where = "y" if self.column is None else "X column {}".format(self.column)
        return "non-finite value in {} at row {}".format(where, self.row)


@dataclass(frozen=True)
class ConstantColumn:
    """A regressor that takes a single value."""

    index: int
    code: str = "constant_column"

    def __str__(self):
        return ("X column {} is constant; the sieve intercept already absorbs "
                "location").format(self.index)


@dataclass(frozen=True)
class TooFewObservations:
    """Fewer than p + 1 observations."""

    n: int
    p: int
    code: str = "too_few_observations"

    def __str__(self):
        return "need n >= p + 1, got n = {} with p = {}".format(self.n, self.p)


@dataclass(frozen=True)
class ShapeMismatch:
    """X and y disagree on the number of rows, or X is not a matrix."""

    detail: str
    code: str = "shape_mismatch"

    def __str__(self):
        return self.detail


class DatasetValidationError(SieveSgdError, ValueError):
    """Raw arrays breach one or more Dataset invariants.

    Attributes:
        violations (tuple): One violation object per breach, in row order.

    Args:
        describe (callable): Renders one violation for the message; file
            readers pass one that names file lines instead of rows.

    """

    def __init__(self, violations, describe=str):
        self.violations = tuple(violations)
        lines = "; ".join(describe(v) for v in self.violations[:10])
        if len(self.violations) > 10:
            lines += "; ... {} more".format(len(self.violations) - 10)
        super().__init__("invalid dataset: {}".format(lines))

    @property
    def codes(self):
        """The distinct violation codes, in first-seen order."""
        return tuple(dict.fromkeys(v.code for v in self.violations))


class NumericalError(SieveSgdError, ArithmeticError):
    """A computation produced a non-finite or unusable value.

    Attributes:
        iteration (int): Outer iteration index where it happened, if known.
        row (int): Observation index where it happened, if known.

    """

    def __init__(self, message, iteration=None, row=None):
        if iteration is not None:
            message = "{} (iteration {})".format(message, iteration)
        super().__init__(message)
        self.iteration = iteration
        self.row = row

    def with_iteration(self, iteration):
        """Tag this error with an iteration index, unless already tagged."""
        if self.iteration is None:
            self.iteration = iteration
            self.args = ("{} (iteration {})".format(self.args[0], iteration),
                    ) + self.args[1:]
        return self


class NumericOverflowError(NumericalError):
    """An inner product or gradient overflowed."""


class QuadratureError(NumericalError):
    """Adaptive quadrature for the loss did not converge."""


class DegenerateIndexError(NumericalError):
    """The index sample has zero variance, so no sieve basis exists."""


class RankDeficientBasisError(NumericalError):
    """The polynomial basis loses rank on the index sample.

    Attributes:
        achievable_order (int): The largest order whose basis has full rank.

    """

    def __init__(self, message, achievable_order, iteration=None):
        super().__init__(message, iteration=iteration)
        self.achievable_order = achievable_order


class NonInvertibleError(NumericalError):
    """A matrix that must be inverted is numerically singular.

    Attributes:
        rcond (float): Reciprocal condition number of the matrix.

    """

    def __init__(self, message, rcond=None, iteration=None):
        super().__init__(message, iteration=iteration)
        self.rcond = rcond


class MonteCarloFailure(SieveSgdError):
    """Too many Monte Carlo replications failed.

    Attributes:
        report (McReport): The report built from the replications that ran.

    """

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report
