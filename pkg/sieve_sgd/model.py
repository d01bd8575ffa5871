"""model: Data model, convex loss and gradient for binary threshold models.

The model is y = 1{x'beta0 > eps} with eps distributed by the CDF g. For a
nondecreasing g with antiderivative G, the loss

    zeta(beta; (x, y)) = G(x'beta) - y * x'beta

is convex in beta and its gradient is (g(x'beta) - y) * x. Only the gradient
is used by the estimators; the loss value exists for diagnostics and tests.

Example:

    data = validate_dataset(X, y)
    link = logistic_link()
    grad = loss_gradient(np.zeros(data.p), data.X[0], data.y[0], link)
    value = loss_value(np.zeros(data.p), data.X[0], data.y[0], link)

"""

# Imports from other packages
from dataclasses import dataclass, field
import logging
from typing import Callable, Optional
import numpy as np
from scipy import integrate, special, stats
# Imports from this package
from .errors import (
    ConfigurationError,
    ConstantColumn,
    DatasetValidationError,
    DimensionMismatchError,
    NonBinaryOutcome,
    NonFiniteEntry,
    NumericOverflowError,
    QuadratureError,
    ShapeMismatch,
    TooFewObservations,
)
from .helpers import row_weighted_sum

_logger = logging.getLogger(__name__)


def _frozen(array):
    """Return a float64 copy of array that cannot be written to."""
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """Estimation input: an n x p regressor matrix and binary outcomes.

    Build instances with validate_dataset(), which checks the invariants.

    Attributes:
        X (np.ndarray): Regressors, shape (n, p).
        y (np.ndarray): Outcomes in {0, 1}, length n.
        columns (tuple): Regressor names, defaults to x1..xp.

    """

    X: np.ndarray
    y: np.ndarray
    columns: tuple = ()

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def scaled(self, factor):
        """Return the dataset with X multiplied by a positive factor."""
        return Dataset(_frozen(self.X * factor), self.y, self.columns)


@dataclass(frozen=True)
class LinkFunction:
    """A CDF g of the error term, used when g is known.

    Attributes:
        g (callable): Vectorized CDF, maps index values into [0, 1].
        lipschitz_J (float): Bound J with 0 <= g(b) - g(a) <= J(b - a).
        name (str): Label written to reports.
        density (callable): Vectorized derivative g', optional. Needed only
            for inference on the known-g route.

    """

    g: Callable
    lipschitz_J: float
    name: str = "custom"
    density: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if not (self.lipschitz_J > 0):
            raise ValueError("lipschitz_J must be positive, got {}".format(
                    self.lipschitz_J))

    def __call__(self, z):
        return self.g(z)

    def check(self, grid, atol=1e-12):
        """Spot check monotonicity and the Lipschitz bound on a grid.

        Args:
            grid (array): Index values to evaluate g at.
            atol (float): Slack allowed for rounding. Defaults to 1e-12.

        Returns:
            True if both properties hold on the sorted grid, else False.

        """

        z = np.sort(np.asarray(grid, dtype=float))
        values = np.asarray(self.g(z), dtype=float)
        steps = np.diff(values)
        # Nondecreasing and never steeper than J
        monotone = bool(np.all(steps >= -atol))
        lipschitz = bool(np.all(steps <= self.lipschitz_J * np.diff(z) + atol))
        in_range = bool(np.all((values >= -atol) & (values <= 1 + atol)))
        return monotone and lipschitz and in_range


def logistic_link():
    """Standard logistic CDF, J = 1/4."""
    return LinkFunction(special.expit, 0.25, "logistic",
            density=lambda z: stats.logistic.pdf(z))


def normal_link():
    """Standard normal CDF, J = 1/sqrt(2 pi)."""
    return LinkFunction(special.ndtr, 1.0 / np.sqrt(2.0 * np.pi), "normal",
            density=stats.norm.pdf)


def cauchy_link():
    """Standard Cauchy CDF, J = 1/pi."""
    return LinkFunction(stats.cauchy.cdf, 1.0 / np.pi, "cauchy",
            density=stats.cauchy.pdf)


LINKS = {
    "logistic": logistic_link,
    "normal": normal_link,
    "cauchy": cauchy_link,
}


def get_link(name):
    """Look up one of the named links.

    Args:
        name (str): One of "logistic", "normal", "cauchy".

    Returns:
        A LinkFunction.

    """

    try:
        return LINKS[name]()
    except KeyError:
        raise ConfigurationError("unknown link {!r}, choose from {}".format(
                name, sorted(LINKS))) from None


def as_beta(values, p=None):
    """Validate a coefficient vector.

    Args:
        values (array): The coefficients.
        p (int): Expected length, optional.

    Returns:
        A read-only float vector.

    """

    beta = np.array(values, dtype=float).reshape(-1)
    if p is not None and beta.shape[0] != p:
        raise DimensionMismatchError("beta has length {}, expected {}".format(
                beta.shape[0], p))
    if not np.all(np.isfinite(beta)):
        raise ValueError("beta has non-finite entries: {}".format(beta))
    beta.setflags(write=False)
    return beta


def validate_dataset(X, y, columns=None):
    """Check raw arrays against the Dataset invariants.

    Args:
        X (array): Regressor matrix, shape (n, p).
        y (array): Outcomes, length n.
        columns (list): Regressor names, optional.

    Returns:
        A Dataset.

    Raises:
        DatasetValidationError: Listing every breach found.

    """

    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)

    # Shape problems make the other checks meaningless
    if X.ndim != 2:
        raise DatasetValidationError([ShapeMismatch(
                "X must be a matrix, got {} dimensions".format(X.ndim))])
    n, p = X.shape
    if y.shape[0] != n:
        raise DatasetValidationError([ShapeMismatch(
                "X has {} rows but y has {} entries".format(n, y.shape[0]))])

    violations = []
    if n < p + 1:
        violations.append(TooFewObservations(n, p))

    # Outcomes
    for row in np.flatnonzero(~np.isfinite(y)):
        violations.append(NonFiniteEntry(int(row)))
    finite_y = np.isfinite(y)
    for row in np.flatnonzero(finite_y & (y != 0) & (y != 1)):
        violations.append(NonBinaryOutcome(int(row)))

    # Regressors
    rows, cols = np.nonzero(~np.isfinite(X))
    for row, col in zip(rows, cols):
        violations.append(NonFiniteEntry(int(row), int(col)))
    for col in range(p):
        values = X[:, col]
        finite = values[np.isfinite(values)]
        if n > 1 and finite.size and np.all(finite == finite[0]):
            violations.append(ConstantColumn(col))

    if violations:
        raise DatasetValidationError(violations)

    if columns is None:
        columns = tuple("x{}".format(j + 1) for j in range(p))
    return Dataset(_frozen(X), _frozen(y), tuple(columns))


def _check_pair(beta, x):
    """Validate one (beta, x) pair and return both as float vectors."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    x = np.asarray(x, dtype=float).reshape(-1)
    if beta.shape != x.shape:
        raise DimensionMismatchError("beta has length {} but x has length {}".format(
                beta.shape[0], x.shape[0]))
    return beta, x


def loss_gradient(beta, x, y, link, row=None):
    """Gradient of the loss for one observation.

    Args:
        beta (array): Coefficients, length p.
        x (array): Regressors of the observation, length p.
        y (float): Outcome, 0 or 1.
        link (LinkFunction): The CDF g.
        row (int): Observation index, used in error messages. Optional.

    Returns:
        The length-p vector (g(x'beta) - y) * x.

    """

    beta, x = _check_pair(beta, x)
    with np.errstate(over="ignore", invalid="ignore"):
        index = float(x @ beta)
    if not np.isfinite(index):
        msg = "non-finite index x'beta"
        if row is not None:
            msg += " at row {}".format(row)
        raise NumericOverflowError(msg, row=row)
    return (float(link(index)) - y) * x


def antiderivative(u, link):
    """G(u), the integral of g from 0 to u, by adaptive quadrature.

    Args:
        u (float): Upper limit.
        link (LinkFunction): The CDF g.

    Returns:
        The integral as a float.

    """

    if u == 0.0:
        return 0.0
    out = integrate.quad(lambda t: float(link(t)), 0.0, u, epsabs=1e-13,
            epsrel=1e-12, limit=200, full_output=1)
    # quad appends a message to its output when it fails to converge
    if len(out) > 3:
        raise QuadratureError("quadrature of g on [0, {}] failed: {}".format(
                u, out[3]))
    return out[0]


def loss_value(beta, x, y, link):
    """The loss G(x'beta) - y * x'beta for one observation.

    Args:
        beta (array): Coefficients, length p.
        x (array): Regressors, length p.
        y (float): Outcome, 0 or 1.
        link (LinkFunction): The CDF g.

    Returns:
        A finite float.

    """

    beta, x = _check_pair(beta, x)
    index = float(x @ beta)
    return antiderivative(index, link) - y * index


def empirical_loss(beta, data, link):
    """Sample mean of the loss over a Dataset. Quadrature per row, so slow."""
    return float(np.mean([loss_value(beta, data.X[i], data.y[i], link)
            for i in range(data.n)]))


def mean_gradient(beta, X, y, cdf, deterministic=True):
    """Mean gradient (1/n) sum_i (cdf(x_i'beta) - y_i) x_i over a sample.

    Args:
        beta (array): Coefficients, length p.
        X (np.ndarray): Regressors, shape (n, p).
        y (np.ndarray): Outcomes, length n.
        cdf (callable): Vectorized CDF evaluator.
        deterministic (bool): Use the fixed pairwise reduction. Defaults to
            True.

    Returns:
        A length-p vector.

    """

    if X.shape[1] != np.shape(beta)[0]:
        raise DimensionMismatchError("beta has length {} but X has {} columns".format(
                np.shape(beta)[0], X.shape[1]))
    residual = np.asarray(cdf(X @ beta), dtype=float) - y
    return row_weighted_sum(X, residual, deterministic) / X.shape[0]
