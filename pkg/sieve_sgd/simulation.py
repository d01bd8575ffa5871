"""simulation: Data-generating processes and the Monte Carlo harness.

Draws samples from y = 1{x'beta0 > eps} with normal, Cauchy or logistic
errors, runs an estimator over many independently seeded replications in
parallel, and summarizes the normalized estimates by bias, RMSE, median bias,
median absolute deviation and, optionally, confidence-interval coverage.

Example:

    spec = reference_spec("normal", n=5000, seed=1)
    config = SsgdConfig(q=3)
    report = run_monte_carlo(spec, config, replications=100, estimator="group")
    print(report.rmse)

"""

# Imports from other packages
from dataclasses import dataclass, field, replace
import logging
import math
import numpy as np
from joblib import Parallel, delayed
# Imports from this package
from .errors import ConfigurationError, MonteCarloFailure, SieveSgdError
from .estimator import ESTIMATORS, normalize_scale, run_estimator
from .helpers import get_time, spawn_seeds, worker_count
from .inference import (
    link_for_inference,
    normalized_confidence_intervals,
    sandwich_vcov,
)
from .model import get_link, validate_dataset

_logger = logging.getLogger(__name__)

ERROR_DISTS = ("normal", "cauchy", "logistic")
X_DISTS = ("normal", "uniform")
REFERENCE_BETA0 = (1.0, 1.0, 2.0, 4.0, 5.0, -1.0, -2.0, -4.0, -5.0)
REFERENCE_SIZES = (5000, 10000)
MAX_FAILURE_SHARE = 0.05

# Reference bias and RMSE of the normalized Sieve-SGD estimates, coefficients
# 2..9 relative to coefficient 1, keyed by (error distribution, n)
REFERENCE_TABLES = {
    ("normal", 5000): {
        "bias": (-0.00245, -0.00528, -0.00383, -0.00334,
                 0.001095, 0.00202, 0.001222, 0.003662),
        "rmse": (0.074159, 0.116748, 0.215743, 0.264365,
                 0.073209, 0.119057, 0.214129, 0.263349),
    },
    ("normal", 10000): {
        "bias": (-0.00431, -0.00543, -0.01637, -0.02086,
                 0.003431, 0.008036, 0.016845, 0.018584),
        "rmse": (0.051545, 0.085119, 0.156179, 0.194141,
                 0.051931, 0.086456, 0.158186, 0.19901),
    },
    ("cauchy", 5000): {
        "bias": (0.009164, 0.011969, 0.028555, 0.046395,
                 -0.01341, -0.00424, -0.03135, -0.04541),
        "rmse": (0.141747, 0.230573, 0.422073, 0.532154,
                 0.14509, 0.228275, 0.419305, 0.530584),
    },
    ("cauchy", 10000): {
        "bias": (0.007211, 0.010308, 0.0264, 0.028414,
                 -0.00531, -0.01507, -0.02808, -0.02518),
        "rmse": (0.102666, 0.167794, 0.289527, 0.359989,
                 0.103166, 0.161979, 0.295145, 0.371865),
    },
}


@dataclass(frozen=True)
class DgpSpec:
    """A data-generating process.

    Attributes:
        beta0 (tuple): True coefficients.
        error_dist (str): "normal", "cauchy" (location 0, scale 1) or
            "logistic".
        x_dist (str): Regressor law, i.i.d. per column: "normal" (standard
            normal) or "uniform" (on [-sqrt 3, sqrt 3], unit variance).
        n (int): Sample size.
        seed (int): Root seed.

    """

    beta0: tuple
    error_dist: str = "normal"
    x_dist: str = "normal"
    n: int = 5000
    seed: int = 0

    def __post_init__(self):
        beta0 = tuple(float(b) for b in np.asarray(self.beta0, dtype=float).reshape(-1))
        object.__setattr__(self, "beta0", beta0)
        if not all(math.isfinite(b) for b in beta0) or not beta0:
            raise ConfigurationError("beta0 must be a nonempty finite vector")
        if self.error_dist not in ERROR_DISTS:
            raise ConfigurationError("error_dist must be one of {}, got {!r}".format(
                    ERROR_DISTS, self.error_dist))
        if self.x_dist not in X_DISTS:
            raise ConfigurationError("x_dist must be one of {}, got {!r}".format(
                    X_DISTS, self.x_dist))
        if self.n < len(beta0) + 1:
            raise ConfigurationError("n = {} is too small for p = {}".format(
                    self.n, len(beta0)))

    @property
    def p(self):
        return len(self.beta0)

    def to_dict(self):
        return {"beta0": list(self.beta0), "error_dist": self.error_dist,
                "x_dist": self.x_dist, "n": self.n, "seed": self.seed}


def reference_spec(error_dist, n=5000, seed=0):
    """The nine-regressor reference design, normal regressors."""
    return DgpSpec(REFERENCE_BETA0, error_dist, "normal", n, seed)


def generate(spec):
    """Draw a Dataset from a DgpSpec.

    Args:
        spec (DgpSpec): The process; its seed fixes the draw.

    Returns:
        A Dataset with y = 1{X beta0 > eps}.

    """

    rng = np.random.default_rng(spec.seed)
    shape = (spec.n, spec.p)
    if spec.x_dist == "normal":
        X = rng.standard_normal(shape)
    else:
        X = rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), shape)
    if spec.error_dist == "normal":
        eps = rng.standard_normal(spec.n)
    elif spec.error_dist == "cauchy":
        eps = rng.standard_cauchy(spec.n)
    else:
        eps = rng.logistic(0.0, 1.0, spec.n)
    y = (X @ np.asarray(spec.beta0) > eps).astype(float)
    return validate_dataset(X, y)


@dataclass(frozen=True)
class ReplicationRecord:
    """Outcome of one replication."""

    index: int
    seed: int
    estimate: tuple = ()
    seconds: float = 0.0
    covered: tuple = ()
    error: str = ""

    @property
    def failed(self):
        return bool(self.error)


@dataclass(frozen=True)
class McReport:
    """Summary of a Monte Carlo run over normalized estimates.

    Attributes:
        truth (np.ndarray): Normalized true coefficients.
        bias (np.ndarray): Mean of estimate - truth per coefficient.
        rmse (np.ndarray): Root mean squared error per coefficient.
        median_bias (np.ndarray): Median of estimate - truth.
        mad (np.ndarray): Median absolute deviation around the median estimate.
        coverage (np.ndarray): Share of intervals covering the truth, or None.
        replications (int): Replications requested.
        failures (int): Replications that raised.
        total_seconds (float): Sum of per-fit wall-clock time.
        mean_seconds (float): Mean per-fit wall-clock time.
        estimator (str): Estimator name.
        spec (dict): Echo of the DgpSpec.
        config (dict): Echo of the SsgdConfig.
        records (tuple): Per-replication records, ordered by index.
        reference (dict): Reference bias/RMSE for this design, if any.

    """

    truth: np.ndarray = field(compare=False)
    bias: np.ndarray = field(compare=False)
    rmse: np.ndarray = field(compare=False)
    median_bias: np.ndarray = field(compare=False)
    mad: np.ndarray = field(compare=False)
    coverage: object = field(default=None, compare=False)
    replications: int = 0
    failures: int = 0
    total_seconds: float = 0.0
    mean_seconds: float = 0.0
    estimator: str = ""
    spec: dict = field(default_factory=dict, compare=False)
    config: dict = field(default_factory=dict, compare=False)
    records: tuple = ()
    reference: object = field(default=None, compare=False)

    @property
    def n(self):
        return self.spec.get("n")

    @property
    def rmse_ratio(self):
        """RMSE relative to the reference table, or None."""
        if self.reference is None:
            return None
        return self.rmse / np.asarray(self.reference["rmse"])


def _run_replication(index, seed, spec, config, estimator, level, numeraire):
    """Generate one sample and fit it. Errors are recorded, not raised."""
    data_seed, fit_seed = spawn_seeds(seed, 2)
    start = get_time()
    try:
        data = generate(replace(spec, seed=data_seed))
        run_config = config.with_updates(seed=fit_seed % 2**63)
        link = get_link(spec.error_dist) if estimator == "known-g" else None
        result = run_estimator(estimator, data, run_config, link=link)
        estimate = normalize_scale(result.beta_hat, numeraire)
        covered = ()
        if level is not None:
            fit = link if link is not None else link_for_inference(data, result,
                    beta=result.beta_hat)
            vcov = sandwich_vcov(data, result.beta_hat, fit)
            intervals = normalized_confidence_intervals(result.beta_hat, vcov,
                    level, numeraire)
            truth = normalize_scale(spec.beta0, numeraire)
            covered = tuple(bool(c) for c in
                    (intervals.lower <= truth) & (truth <= intervals.upper))
    except (SieveSgdError, np.linalg.LinAlgError, FloatingPointError) as err:
        _logger.warning("replication %d failed: %s", index, err)
        return ReplicationRecord(index, seed, seconds=get_time() - start,
                error="{}: {}".format(type(err).__name__, err))
    seconds = get_time() - start
    _logger.info("replication %d done in %.2fs", index, seconds)
    return ReplicationRecord(index, seed, tuple(float(v) for v in estimate),
            seconds, covered)


def _exact_mean(columns):
    """Column means with exact summation, so record order cannot matter."""
    return np.array([math.fsum(col) / len(col) for col in columns.T])


def summarize(records, spec, config, estimator, numeraire=0, replications=None):
    """Aggregate replication records into an McReport.

    Args:
        records (list): ReplicationRecord objects, in any order.
        spec (DgpSpec): The process the records were drawn from.
        config (SsgdConfig): The estimator settings.
        estimator (str): Estimator name.
        numeraire (int): Numeraire index used for normalization.
        replications (int): Replications requested. Defaults to len(records).

    Returns:
        An McReport.

    """

    records = tuple(sorted(records, key=lambda r: r.index))
    ok = [r for r in records if not r.failed]
    truth = normalize_scale(spec.beta0, numeraire)
    width = truth.shape[0]
    if ok:
        estimates = np.array([r.estimate for r in ok], dtype=float)
        errors = estimates - truth
        bias = _exact_mean(errors)
        rmse = np.sqrt(_exact_mean(errors ** 2))
        median_bias = np.median(errors, axis=0)
        mad = np.median(np.abs(estimates - np.median(estimates, axis=0)), axis=0)
        covered = [r.covered for r in ok if r.covered]
        coverage = _exact_mean(np.array(covered, dtype=float)) if covered else None
    else:
        bias = rmse = median_bias = mad = np.full(width, np.nan)
        coverage = None
    seconds = [r.seconds for r in records]
    reference = REFERENCE_TABLES.get((spec.error_dist, spec.n))
    if reference is not None and (tuple(spec.beta0) != REFERENCE_BETA0 or numeraire != 0):
        reference = None
    return McReport(truth, bias, rmse, median_bias, mad, coverage,
            replications if replications is not None else len(records),
            len(records) - len(ok), math.fsum(seconds),
            math.fsum(seconds) / max(1, len(seconds)), estimator, spec.to_dict(),
            config.to_dict(), records, reference)


def run_monte_carlo(spec, config, replications, estimator="group", level=None,
        n_jobs=None):
    """Run replicated estimations and summarize them.

    Replication i draws its data and fit seeds from the i-th child of the
    root seed spec.seed (numpy SeedSequence spawning), so results do not
    depend on worker count or scheduling.

    Args:
        spec (DgpSpec): The process.
        config (SsgdConfig): Estimator settings.
        replications (int): Number of replications, at least 2.
        estimator (str): "group", "average" or "known-g".
        level (float): If set, also record coverage of normalized intervals
            at this level.
        n_jobs (int): Parallel workers; capped by SSGD_THREADS.

    Returns:
        An McReport.

    Raises:
        MonteCarloFailure: More than 5% of replications failed.

    """

    if replications < 2:
        raise ConfigurationError("need at least 2 replications, got {}".format(
                replications))
    if estimator not in ESTIMATORS:
        raise ConfigurationError("unknown estimator {!r}, choose from {}".format(
                estimator, ESTIMATORS))
    numeraire = config.numeraire
    if not 0 <= numeraire < spec.p:
        raise ConfigurationError("numeraire index {} out of range for p = {}".format(
                numeraire, spec.p))
    seeds = spawn_seeds(spec.seed, replications)
    workers = worker_count(n_jobs)
    _logger.info("Monte Carlo: %d replications of %s, n=%d, %s errors, %d workers",
            replications, estimator, spec.n, spec.error_dist, workers)

    records = Parallel(n_jobs=workers)(
            delayed(_run_replication)(i, seed, spec, config, estimator, level,
                    numeraire)
            for i, seed in enumerate(seeds))
    report = summarize(records, spec, config, estimator, numeraire, replications)

    if report.failures:
        _logger.warning("%d of %d replications failed", report.failures,
                replications)
    if report.failures > MAX_FAILURE_SHARE * replications:
        raise MonteCarloFailure("{} of {} replications failed (limit {:.0%})".format(
                report.failures, replications, MAX_FAILURE_SHARE), report)
    return report
