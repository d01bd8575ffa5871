"""estimator: SGD with a known link, Sieve-SGD, and its averaged version.

Three estimators of the index coefficients in y = 1{x'beta0 > eps}:

  * run_sgd_known_g: one observation per step, g known,
        beta_k = beta_{k-1} - gamma_k C (g(x_k'beta_{k-1}) - y_k) x_k
  * run_ssgd_group: full-sample steps with g replaced by a series logit fit
    refreshed on the current index after every update
  * run_ssgd_average: the same path, reporting the mean of the iterates

with gamma_k = gamma1 * k^-gamma.

Example:

    config = SsgdConfig(gamma1=2.0, gamma=0.8, q=3)
    result = run_ssgd_average(data, config)
    print(result.beta_avg, result.beta_normalized)

"""

# Imports from other packages
from collections import deque
from dataclasses import dataclass, field, replace
import logging
import math
import numpy as np
from scipy import special
# Imports from this package
from .config import admissible_window
from .errors import (
    ConfigurationError,
    DegenerateIndexError,
    NormalizationError,
    NumericalError,
    RankDeficientBasisError,
)
from .helpers import get_time
from .model import as_beta, loss_gradient, mean_gradient
from .sieve import fit_series_logit, plain_logit, sieve_cdf

_logger = logging.getLogger(__name__)

ESTIMATORS = ("known-g", "group", "average")


@dataclass(frozen=True)
class IteratePath:
    """The iterates of one fit.

    Attributes:
        betas (np.ndarray): Shape (K + 1, p); row 0 is the starting value.
        gradient_norms (np.ndarray): Euclidean norm of the conditioned
            gradient C * grad of each of the K updates. The sieve routes
            record it in column-scaled units when standardize is on.
        sieve_fits (tuple): The latest retained sieve fits, oldest first.

    """

    betas: np.ndarray = field(compare=False)
    gradient_norms: np.ndarray = field(compare=False)
    sieve_fits: tuple = ()

    @property
    def K(self):
        return self.betas.shape[0] - 1

    def average(self, trim_t=0):
        """Mean of iterates 1 .. K - trim_t."""
        return np.mean(self.betas[1:self.K - trim_t + 1], axis=0)


@dataclass(frozen=True)
class FitResult:
    """Output of one estimation run.

    Attributes:
        estimator (str): "known-g", "group" or "average".
        beta_final (np.ndarray): Last iterate.
        beta_avg (np.ndarray): Mean of iterates 1 .. K - trim_t.
        beta_normalized (np.ndarray): The headline estimate relative to the
            numeraire coefficient, length p - 1 (empty when p = 1).
        numeraire (int): Index of the numeraire coefficient.
        sieve_fit (SieveFit): Sieve fit at the final iterate. None for known-g,
            and when every refit met a constant index.
        path (IteratePath): The iterate path.
        trim_t (int): Trim used for the average.
        seconds (float): Wall-clock time of the fit.
        vcov (SandwichVcov): Filled in by the inference module, optional.
        warnings (tuple): Diagnostics collected during the fit.
        config (dict): Echo of the settings used.
        window (tuple): Admissible K window for the sample size.

    """

    estimator: str
    beta_final: np.ndarray = field(compare=False)
    beta_avg: np.ndarray = field(compare=False)
    beta_normalized: np.ndarray = field(compare=False)
    numeraire: int
    sieve_fit: object
    path: IteratePath
    trim_t: int
    seconds: float
    vcov: object = None
    warnings: tuple = ()
    config: dict = field(default_factory=dict, compare=False)
    window: tuple = ()

    @property
    def beta_hat(self):
        """The estimate this estimator reports: the average or the last iterate."""
        return self.beta_avg if self.estimator == "average" else self.beta_final

    @property
    def K(self):
        return self.path.K

    def with_vcov(self, vcov):
        """Return a copy carrying a sandwich covariance."""
        return replace(self, vcov=vcov)


def learning_rate(k, config):
    """Step size gamma_k = gamma1 * k^-gamma.

    Args:
        k (int): Iteration, starting at 1.
        config (SsgdConfig): Supplies gamma1 and gamma.

    Returns:
        A positive float.

    """

    if k < 1:
        raise ConfigurationError("iterations are counted from 1, got k = {}".format(k))
    return config.gamma1 * float(k) ** (-config.gamma)


def default_tuning(n, p, gamma):
    """Tuning-rule defaults for K and the sieve order.

    K = n, the choice the distribution theory is stated for. The sieve order
    grows like n^(1/5) (so q^3/n -> 0), kept between 3 and 8.

    Args:
        n (int): Sample size, at least 10.
        p (int): Number of regressors.
        gamma (float): Learning-rate exponent.

    Returns:
        A dict with K, q, window (admissible K interval), the high-dimension
        ratio p * K^-gamma, and a list of warnings.

    """

    if n < 10:
        raise ConfigurationError("tuning rules need n >= 10, got {}".format(n))
    if not (0.5 < gamma <= 1):
        raise ConfigurationError("gamma must lie in (0.5, 1], got {}".format(gamma))
    K = int(n)
    q = min(8, max(3, int(math.floor(round(n ** 0.2, 9)))))
    window = admissible_window(n, gamma)
    ratio = p * K ** (-gamma)
    notes = []
    if ratio > 0.5:
        notes.append("p * K^-gamma = {:.3f} exceeds 0.5; too many regressors "
                "for this sample size".format(ratio))
        _logger.warning(notes[-1])
    return {"K": K, "q": q, "window": window, "dimension_ratio": ratio,
            "warnings": notes}


def normalize_scale(beta, numeraire=0):
    """Express coefficients relative to a numeraire coefficient.

    Args:
        beta (array): Coefficients, length p.
        numeraire (int): Index of the coefficient fixed to 1. Defaults to 0.

    Returns:
        The length p - 1 vector beta_j / beta_numeraire for j != numeraire.

    """

    beta = np.asarray(beta, dtype=float).reshape(-1)
    if not (0 <= numeraire < beta.shape[0]):
        raise NormalizationError("numeraire index {} out of range for p = {}".format(
                numeraire, beta.shape[0]))
    base = beta[numeraire]
    if abs(base) <= 1e-10:
        raise NormalizationError("coefficient {} is numerically zero ({:g}); pick "
                "another numeraire index".format(numeraire, base))
    return np.delete(beta, numeraire) / base


def _safe_normalize(beta, numeraire, notes):
    try:
        return normalize_scale(beta, numeraire)
    except NormalizationError as err:
        notes.append(str(err))
        _logger.warning(str(err))
        return np.full(beta.shape[0] - 1, np.nan)


def group_update(beta_prev, data, cdf_prev, k, config, C=None):
    """One full-sample Sieve-SGD step.

    beta_k = beta_{k-1} - gamma_k C (1/n) sum_i (g_hat(x_i'beta_{k-1}) - y_i) x_i

    Args:
        beta_prev (array): Current coefficients.
        data (Dataset): The sample.
        cdf_prev (callable): Fitted CDF evaluator from the previous step.
        k (int): Iteration number, from 1.
        config (SsgdConfig): Learning rate and conditioning.
        C (np.ndarray): Conditioning matrix to use instead of
            config.conditioning(p). Optional.

    Returns:
        The updated coefficient vector.

    """

    C = config.conditioning(data.p) if C is None else C
    grad = mean_gradient(beta_prev, data.X, data.y, cdf_prev, config.deterministic)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite mean gradient", iteration=k)
    return beta_prev - learning_rate(k, config) * (C @ grad)


def run_sgd_known_g(data, link, config, beta0=None):
    """SGD with a known link, one observation per iteration.

    Rows are visited once, in the order of a seeded shuffle.

    Args:
        data (Dataset): The sample.
        link (LinkFunction): The known CDF g.
        config (SsgdConfig): Settings; K defaults to n and may not exceed it.
        beta0 (array): Starting value. Defaults to zeros.

    Returns:
        A FitResult with estimator "known-g".

    """

    start_time = get_time()
    n, p = data.n, data.p
    K = config.iterations(n, p)
    if K > n:
        raise ConfigurationError("known-g SGD consumes one observation per "
                "iteration; K = {} exceeds n = {}".format(K, n))
    if config.trim_t >= K:
        raise ConfigurationError("trim_t = {} must be smaller than K = {}".format(
                config.trim_t, K))
    C = config.conditioning(p)
    beta = np.zeros(p) if beta0 is None else np.array(as_beta(beta0, p))

    # One seeded shuffle, then sequential consumption
    order = np.random.default_rng(config.seed).permutation(n)
    betas = np.empty((K + 1, p))
    betas[0] = beta
    grad_norms = np.empty(K)
    _logger.info("known-g SGD: n=%d p=%d K=%d link=%s", n, p, K, link.name)

    for k in range(1, K + 1):
        row = int(order[k - 1])
        try:
            grad = loss_gradient(beta, data.X[row], data.y[row], link, row=row)
        except NumericalError as err:
            raise err.with_iteration(k)
        beta = beta - learning_rate(k, config) * (C @ grad)
        if not np.all(np.isfinite(beta)):
            raise NumericalError("iterate became non-finite at row {}".format(row),
                    iteration=k, row=row)
        betas[k] = beta
        grad_norms[k - 1] = np.linalg.norm(C @ grad)

    path = IteratePath(_readonly(betas), _readonly(grad_norms))
    notes = []
    beta_avg = path.average(config.trim_t)
    return FitResult("known-g", _readonly(beta), _readonly(beta_avg),
            _readonly(_safe_normalize(beta, config.numeraire, notes)),
            config.numeraire, None, path, config.trim_t, get_time() - start_time,
            warnings=tuple(notes), config=config.to_dict(),
            window=admissible_window(n, config.gamma))


def _readonly(array):
    array = np.asarray(array, dtype=float)
    array.setflags(write=False)
    return array


def _fit_sieve(z, y, q, pi0, notes, k):
    """Sieve fit that falls back to the achievable order on rank loss."""
    try:
        return fit_series_logit(z, y, q, pi0=pi0)
    except RankDeficientBasisError as err:
        if err.achievable_order < 1:
            raise err.with_iteration(k)
        msg = "iteration {}: sieve order reduced from {} to {}".format(
                k, q, err.achievable_order)
        notes.append(msg)
        _logger.warning(msg)
        return fit_series_logit(z, y, err.achievable_order)
    except NumericalError as err:
        raise err.with_iteration(k)


def _starting_value(X, y, config, beta0, notes):
    """Initial iterate for the sieve routes, in the working (scaled) units."""
    p = X.shape[1]
    if beta0 is not None:
        return np.array(beta0, dtype=float)
    if config.start == "zero":
        return np.zeros(p)
    solution = plain_logit(X, y)
    if not solution.gradient_ok or not np.all(np.isfinite(solution.coef)):
        notes.append("logit warm start did not converge; using its last iterate")
        _logger.warning(notes[-1])
    return solution.coef


def run_ssgd_group(data, config, beta0=None, estimator="group"):
    """Sieve-SGD group estimator.

    Starts from beta0 (default: plain logit MLE on X) with the standard
    logistic CDF, then for k = 1..K takes a group_update with the previous
    fitted CDF, recomputes the index z = X beta_k, and refits the series
    logit on it.

    Args:
        data (Dataset): The sample.
        config (SsgdConfig): Settings.
        beta0 (array): Starting value on the raw scale. Optional.
        estimator (str): Label for the result. Defaults to "group".

    Returns:
        A FitResult whose beta_final is the last iterate.

    """

    start_time = get_time()
    n, p = data.n, data.p
    K = config.iterations(n, p)
    if config.trim_t >= K:
        raise ConfigurationError("trim_t = {} must be smaller than K = {}".format(
                config.trim_t, K))
    notes = []

    q = config.q
    if q > n - 2:
        q = max(1, n - 2)
        notes.append("sieve order reduced from {} to {} for n = {}".format(
                config.q, q, n))
        _logger.warning(notes[-1])

    # Column scaling: working coefficients are beta * scales
    scales = data.X.std(axis=0) if config.standardize else np.ones(p)
    X = data.X / scales
    y = data.y
    working = replace(data, X=X)
    C = config.conditioning(p)
    start = None if beta0 is None else as_beta(beta0, p) * scales
    beta = _starting_value(X, y, config, start, notes)

    betas = np.empty((K + 1, p))
    betas[0] = beta / scales
    grad_norms = np.empty(K)
    retained = deque(maxlen=config.retain_fits) if config.retain_fits else None
    cdf = special.expit
    fit = None
    separations = 0
    degenerate = 0
    refit = None
    _logger.info("%s SSGD: n=%d p=%d K=%d q=%d", estimator, n, p, K, q)

    steps = K
    for k in range(1, K + 1):
        beta_prev = beta
        try:
            beta = group_update(beta_prev, working, cdf, k, config, C=C)
        except NumericalError as err:
            raise err.with_iteration(k)
        grad_norms[k - 1] = np.linalg.norm((beta_prev - beta)
                / learning_rate(k, config))
        betas[k] = beta / scales

        # Refresh the link estimate on the new index
        if (k - 1) % config.refit_every == 0 or fit is None:
            z = X @ beta
            try:
                refit = _fit_sieve(z, y, q, None if fit is None
                        or fit.order_q != q else fit.pi, notes, k)
            except DegenerateIndexError:
                # Constant index: keep the previous link estimate
                degenerate += 1
                _logger.debug("iteration %d: constant index, link kept", k)
                refit = None
        if refit is not None:
            fit, refit = refit, None
            q = fit.order_q
            if fit.separation_suspected:
                separations += 1
            if retained is not None:
                retained.append(fit)
            current = fit
            cdf = lambda index, current=current: sieve_cdf(current, index)
            if k % 100 == 0:
                _logger.debug("iteration %d: loglik %.6f, %d Newton steps", k,
                        fit.loglik, fit.newton_iters)

        if (config.early_stop_tol is not None
                and np.linalg.norm(beta - beta_prev) < config.early_stop_tol):
            steps = k
            _logger.info("early stop at iteration %d", k)
            break

    if degenerate:
        notes.append("index had zero variance at {} sieve refits; kept the "
                "previous link estimate".format(degenerate))
        _logger.warning(notes[-1])
    if separations:
        notes.append("series logit separation suspected in {} of the sieve "
                "fits".format(separations))
        _logger.warning(notes[-1])

    betas = betas[:steps + 1]
    grad_norms = grad_norms[:steps]
    trim_t = min(config.trim_t, steps - 1)
    beta_final = betas[-1]
    path = IteratePath(_readonly(betas), _readonly(grad_norms),
            tuple(retained) if retained is not None else ())
    beta_avg = path.average(trim_t)

    # The sieve fit refers to the working index, which equals the raw index
    headline = beta_avg if estimator == "average" else beta_final
    return FitResult(estimator, _readonly(beta_final), _readonly(beta_avg),
            _readonly(_safe_normalize(headline, config.numeraire, notes)),
            config.numeraire, fit, path, trim_t, get_time() - start_time,
            warnings=tuple(notes), config=config.to_dict(),
            window=admissible_window(n, config.gamma))


def run_ssgd_average(data, config, beta0=None):
    """Sieve-SGD average estimator.

    Same iterate path as run_ssgd_group, reporting the mean of iterates
    1 .. K - trim_t. The averaging theory needs gamma < 1.

    Args:
        data (Dataset): The sample.
        config (SsgdConfig): Settings; gamma must be below 1.
        beta0 (array): Starting value, optional.

    Returns:
        A FitResult with estimator "average".

    """

    if config.gamma >= 1:
        raise ConfigurationError("the averaged estimator needs gamma < 1, got "
                "{}".format(config.gamma))
    return run_ssgd_group(data, config, beta0, estimator="average")


def run_estimator(name, data, config, link=None, beta0=None):
    """Dispatch to one of the three estimators by name."""
    if name == "known-g":
        if link is None:
            raise ConfigurationError("the known-g estimator needs a link")
        return run_sgd_known_g(data, link, config, beta0)
    if name == "group":
        return run_ssgd_group(data, config, beta0)
    if name == "average":
        return run_ssgd_average(data, config, beta0)
    raise ConfigurationError("unknown estimator {!r}, choose from {}".format(
            name, ESTIMATORS))
