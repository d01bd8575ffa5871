"""inference: Sandwich covariance and confidence intervals for the averaged estimator.

The averaged Sieve-SGD estimator is asymptotically normal with covariance
Sigma2^-1 Sigma1 Sigma2^-T / n, where

    Sigma1 = E g(z)(1 - g(z)) x x'
    Sigma2 = E g'(z) x x' - f

and f corrects for the link being estimated by the sieve. Plug-in versions
use the fitted sieve CDF and its analytic derivative at z_i = x_i'beta. A
second, index-corrected form of the two matrices is available with
form="index".

Example:

    fit = fit_series_logit(data.X @ result.beta_avg, data.y, q=3)
    vcov = sandwich_vcov(data, result.beta_avg, fit)
    intervals = confidence_intervals(result, vcov, 0.95)

"""

# Imports from other packages
from collections import namedtuple
from dataclasses import dataclass, field
import logging
import numpy as np
from scipy import stats
# Imports from this package
from .errors import ConfigurationError, DimensionMismatchError, NonInvertibleError
from .estimator import FitResult, normalize_scale
from .sieve import SieveFit, fit_series_logit, sieve_cdf, sieve_density

_logger = logging.getLogger(__name__)

RCOND_MIN = 1e-12
FORMS = ("main", "index")
# Rows per tile in the O(n^2) double loop
TILE = 512


@dataclass(frozen=True)
class SandwichVcov:
    """Plug-in sandwich covariance.

    Attributes:
        sigma1_hat (np.ndarray): The meat, p x p.
        sigma2_hat (np.ndarray): The bread, p x p.
        vcov (np.ndarray): Sigma2^-1 Sigma1 Sigma2^-T / n.
        n (int): Sample size.
        f_correction_included (bool): Whether the bread carries f.
        form (str): "main" or "index".
        whitened (bool): Whether the index form used whitened regressors.
        rcond (float): Reciprocal condition number of the bread.
        sigma1_min_eigenvalue (float): Smallest eigenvalue of the meat.

    """

    sigma1_hat: np.ndarray = field(compare=False)
    sigma2_hat: np.ndarray = field(compare=False)
    vcov: np.ndarray = field(compare=False)
    n: int
    f_correction_included: bool
    form: str = "main"
    whitened: bool = False
    rcond: float = 1.0
    sigma1_min_eigenvalue: float = 0.0

    @property
    def standard_errors(self):
        return np.sqrt(np.diag(self.vcov))


ConfidenceIntervals = namedtuple("ConfidenceIntervals",
        ["estimate", "std_err", "lower", "upper", "level"])


def _index(data, beta):
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if beta.shape[0] != data.p:
        raise DimensionMismatchError("beta has length {}, data has p = {}".format(
                beta.shape[0], data.p))
    return data.X @ beta


def _probabilities(fit, z):
    """g_hat(z) from a sieve fit or a known link."""
    if isinstance(fit, SieveFit):
        return sieve_cdf(fit, z)
    return np.clip(np.asarray(fit.g(z), dtype=float), 0.0, 1.0)


def _densities(fit, z):
    """g_hat'(z) from a sieve fit or a known link."""
    if isinstance(fit, SieveFit):
        return sieve_density(fit, z)
    if fit.density is None:
        raise ConfigurationError("link {!r} has no density; cannot build the "
                "bread".format(fit.name))
    return np.asarray(fit.density(z), dtype=float) * np.ones_like(z)


def _weighted_moment(X, weights):
    """(1/n) sum_i w_i x_i x_i'."""
    return (X * weights[:, None]).T @ X / X.shape[0]


def _symmetric(A):
    return (A + A.T) / 2.0


def estimate_sigma1(data, beta, fit):
    """Sample analog of Sigma1 = E g(z)(1 - g(z)) x x'.

    Args:
        data (Dataset): The sample.
        beta (array): Coefficients defining z_i = x_i'beta.
        fit (SieveFit or LinkFunction): Source of g_hat.

    Returns:
        A symmetric p x p matrix.

    """

    g = _probabilities(fit, _index(data, beta))
    return _symmetric(_weighted_moment(data.X, g * (1.0 - g)))


def f_correction(data, beta, fit, method="factored"):
    """Sample analog of the link-estimation correction f.

    f_hat = (1/n^2) sum_k sum_i x_k R(z_k)' R'(z_i) g_hat'(z_i) x_i'

    Args:
        data (Dataset): The sample.
        beta (array): Coefficients defining the index.
        fit (SieveFit): Fit whose basis supplies R and R'.
        method (str): "factored" accumulates the two sample means once, in
            O(n q p). "double_loop" sums over all (k, i) pairs in tiles, in
            O(n^2), and is kept as a check on the factored path.

    Returns:
        A p x p matrix.

    """

    z = _index(data, beta)
    X = data.X
    n = data.n
    R = fit.basis.design(z)
    R_prime = fit.basis.design_derivative(z) * sieve_density(fit, z)[:, None]

    if method == "factored":
        left = X.T @ R / n
        right = R_prime.T @ X / n
        return left @ right
    if method != "double_loop":
        raise ConfigurationError("unknown method {!r}".format(method))

    total = np.zeros((data.p, data.p))
    for k0 in range(0, n, TILE):
        rows_k = slice(k0, k0 + TILE)
        for i0 in range(0, n, TILE):
            rows_i = slice(i0, i0 + TILE)
            # s_ki = R(z_k)' R'(z_i) g'(z_i)
            s = R[rows_k] @ R_prime[rows_i].T
            total += X[rows_k].T @ s @ X[rows_i]
    return total / n ** 2


def _check_invertible(matrix, what):
    cond = np.linalg.cond(matrix)
    rcond = 0.0 if not np.isfinite(cond) else 1.0 / cond
    if rcond < RCOND_MIN:
        raise NonInvertibleError("{} is numerically singular (reciprocal "
                "condition {:.3g})".format(what, rcond), rcond=rcond)
    return rcond


def estimate_sigma2(data, beta, fit, include_f=True):
    """Sample analog of Sigma2 = E g'(z) x x' - f.

    Args:
        data (Dataset): The sample.
        beta (array): Coefficients defining the index.
        fit (SieveFit or LinkFunction): Source of g_hat'. The f correction
            needs a SieveFit; it is skipped for a known link.
        include_f (bool): Subtract the f correction. Defaults to True.

    Returns:
        A p x p matrix.

    Raises:
        NonInvertibleError: The bread is numerically singular.

    """

    z = _index(data, beta)
    bread = _weighted_moment(data.X, _densities(fit, z))
    if include_f and isinstance(fit, SieveFit):
        bread = bread - f_correction(data, beta, fit)
    _check_invertible(bread, "Sigma2")
    return bread


def _matrix_power(M, power):
    """Power of a symmetric positive-definite matrix through its eigenbasis."""
    values, vectors = np.linalg.eigh(_symmetric(M))
    if values.min() <= 0:
        raise NonInvertibleError("second-moment matrix of x is not positive "
                "definite", rcond=0.0)
    return (vectors * values ** power) @ vectors.T


def _index_form(data, beta, fit, whitened):
    """Meat and bread with the x'beta * l correction terms."""
    beta = np.asarray(beta, dtype=float).reshape(-1)
    X = data.X
    z = _index(data, beta)
    if whitened:
        M = X.T @ X / data.n
        W = _matrix_power(M, -0.5)
        anchor = _matrix_power(M, 0.5) @ beta
    else:
        W = np.eye(data.p)
        anchor = beta
    if np.any(np.abs(anchor) <= 1e-10):
        raise NonInvertibleError("the index-corrected form needs every "
                "coefficient to be nonzero")
    l = 1.0 / anchor

    g = _probabilities(fit, z)
    V = X @ W.T + z[:, None] * l
    meat = _symmetric(_weighted_moment(V, g * (1.0 - g)))
    bread = (np.eye(data.p) + np.outer(l, beta)) @ W @ _weighted_moment(X,
            _densities(fit, z))
    return meat, bread


def sandwich_vcov(data, beta, fit, include_f=True, form="main", whitened=False):
    """Plug-in sandwich covariance of the averaged estimator.

    Args:
        data (Dataset): The sample.
        beta (array): Centering estimate (the averaged iterate).
        fit (SieveFit or LinkFunction): Link estimate at that index.
        include_f (bool): Include the f correction in the main form.
        form (str): "main" (Sigma1, Sigma2 - f) or "index" (index-corrected
            meat and bread). Defaults to "main".
        whitened (bool): In the index form, whiten x by its second-moment
            matrix. Defaults to False.

    Returns:
        A SandwichVcov.

    """

    if form not in FORMS:
        raise ConfigurationError("form must be one of {}, got {!r}".format(
                FORMS, form))
    if form == "main":
        meat = estimate_sigma1(data, beta, fit)
        bread = estimate_sigma2(data, beta, fit, include_f)
        f_included = bool(include_f and isinstance(fit, SieveFit))
    else:
        meat, bread = _index_form(data, beta, fit, whitened)
        f_included = False

    rcond = _check_invertible(bread, "Sigma2")
    bread_inv = np.linalg.inv(bread)
    vcov = _symmetric(bread_inv @ meat @ bread_inv.T) / data.n
    min_eig = float(np.linalg.eigvalsh(meat).min())
    if min_eig < -1e-8:
        _logger.warning("Sigma1 has a negative eigenvalue %.3g", min_eig)
    if not f_included and form == "main" and isinstance(fit, SieveFit):
        _logger.info("sandwich built without the f correction")
    return SandwichVcov(meat, bread, vcov, data.n, f_included, form,
            bool(whitened and form == "index"), rcond, min_eig)


def _check_level(level):
    if not (0 < level < 1):
        raise ConfigurationError("level must lie in (0, 1), got {}".format(level))
    return stats.norm.ppf((1.0 + level) / 2.0)


def _estimate_of(result):
    if isinstance(result, FitResult):
        return np.asarray(result.beta_avg, dtype=float)
    return np.asarray(result, dtype=float).reshape(-1)


def _covariance_of(vcov):
    return vcov.vcov if isinstance(vcov, SandwichVcov) else np.asarray(vcov, dtype=float)


def confidence_intervals(result, vcov, level=0.95):
    """Per-coefficient Wald intervals beta_j +- z sqrt(vcov_jj).

    Args:
        result (FitResult or array): Centered on result.beta_avg for a
            FitResult, or on the given vector.
        vcov (SandwichVcov or array): The covariance.
        level (float): Coverage level in (0, 1). Defaults to 0.95.

    Returns:
        A ConfidenceIntervals tuple of arrays.

    """

    crit = _check_level(level)
    estimate = _estimate_of(result)
    std_err = np.sqrt(np.diag(_covariance_of(vcov)))
    return ConfidenceIntervals(estimate, std_err, estimate - crit * std_err,
            estimate + crit * std_err, level)


def _unit(direction, p):
    direction = np.asarray(direction, dtype=float).reshape(-1)
    if direction.shape[0] != p:
        raise DimensionMismatchError("direction has length {}, expected {}".format(
                direction.shape[0], p))
    norm = np.linalg.norm(direction)
    if norm == 0:
        raise ConfigurationError("direction must be nonzero")
    return direction / norm


def directional_interval(result, vcov, direction, level=0.95):
    """Wald interval for the linear combination s'beta, with ||s|| = 1.

    Args:
        result (FitResult or array): The estimate.
        vcov (SandwichVcov or array): The covariance.
        direction (array): The direction s; rescaled to unit length.
        level (float): Coverage level in (0, 1).

    Returns:
        A ConfidenceIntervals tuple of floats.

    """

    crit = _check_level(level)
    estimate = _estimate_of(result)
    s = _unit(direction, estimate.shape[0])
    center = float(s @ estimate)
    std_err = float(np.sqrt(s @ _covariance_of(vcov) @ s))
    return ConfidenceIntervals(center, std_err, center - crit * std_err,
            center + crit * std_err, level)


def studentized_statistic(result, truth, vcov, direction):
    """s'(beta_hat - beta0) / sqrt(s' V s), asymptotically N(0, 1).

    Args:
        result (FitResult or array): The estimate.
        truth (array): The hypothesized beta0.
        vcov (SandwichVcov or array): The covariance (already divided by n).
        direction (array): The direction s.

    Returns:
        A float.

    """

    estimate = _estimate_of(result)
    s = _unit(direction, estimate.shape[0])
    diff = estimate - np.asarray(truth, dtype=float).reshape(-1)
    return float(s @ diff / np.sqrt(s @ _covariance_of(vcov) @ s))


def normalized_confidence_intervals(result, vcov, level=0.95, numeraire=0):
    """Delta-method intervals for beta_j / beta_numeraire.

    Args:
        result (FitResult or array): The estimate.
        vcov (SandwichVcov or array): Covariance of the raw coefficients.
        level (float): Coverage level in (0, 1).
        numeraire (int): Index of the numeraire coefficient.

    Returns:
        A ConfidenceIntervals tuple for the p - 1 ratios.

    """

    crit = _check_level(level)
    estimate = _estimate_of(result)
    ratios = normalize_scale(estimate, numeraire)
    base = estimate[numeraire]
    others = [j for j in range(estimate.shape[0]) if j != numeraire]

    # Jacobian of beta_j / beta_m with respect to beta
    jacobian = np.zeros((len(others), estimate.shape[0]))
    for row, j in enumerate(others):
        jacobian[row, j] = 1.0 / base
        jacobian[row, numeraire] = -estimate[j] / base ** 2
    cov = jacobian @ _covariance_of(vcov) @ jacobian.T
    std_err = np.sqrt(np.diag(cov))
    return ConfidenceIntervals(ratios, std_err, ratios - crit * std_err,
            ratios + crit * std_err, level)


def link_for_inference(data, result, q=None, beta=None):
    """The link estimate inference should use for a fit.

    For the sieve routes the series logit is refitted at the index of the
    averaged estimate; for the known-g route the caller's link is used.

    Args:
        data (Dataset): The sample.
        result (FitResult): A sieve-route fit.
        q (int): Sieve order. Defaults to the order of result.sieve_fit.
        beta (array): Index coefficients. Defaults to result.beta_avg.

    Returns:
        A SieveFit.

    """

    if result.sieve_fit is None:
        raise ConfigurationError("{} fits carry no sieve; pass the known link "
                "instead".format(result.estimator))
    q = result.sieve_fit.order_q if q is None else q
    beta = result.beta_avg if beta is None else np.asarray(beta, dtype=float)
    return fit_series_logit(data.X @ beta, data.y, q,
            pi0=result.sieve_fit.pi if q == result.sieve_fit.order_q else None)
