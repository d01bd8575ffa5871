"""sieve_sgd: Sieve-SGD estimation of semiparametric binary choice models.

Example:

    # Create the estimator with the default learning rate 2 k^-0.8
    estimator = SieveSGD(q=3, seed=7)
    # Fit y = 1{x'beta > eps} with the link estimated by a series logit
    result = estimator.fit(X, y)
    # Coefficients relative to the first one
    print(result.beta_normalized)
    # 95% sandwich intervals for the averaged estimate
    intervals = estimator.confidence_intervals()
    # A short text summary
    print(estimator.summary())

"""

# Imports from other packages
import logging
# Imports from this package
from .config import SsgdConfig, admissible_window
from .errors import (
    ConfigurationError,
    CsvParseError,
    DatasetValidationError,
    DimensionMismatchError,
    MonteCarloFailure,
    NormalizationError,
    NumericalError,
    SieveSgdError,
)
from .estimator import (
    FitResult,
    default_tuning,
    learning_rate,
    normalize_scale,
    run_estimator,
    run_sgd_known_g,
    run_ssgd_average,
    run_ssgd_group,
)
from .inference import (
    confidence_intervals,
    link_for_inference,
    normalized_confidence_intervals,
    sandwich_vcov,
)
from .model import (
    Dataset,
    LinkFunction,
    cauchy_link,
    get_link,
    logistic_link,
    normal_link,
    validate_dataset,
)
from .sieve import fit_series_logit, sieve_cdf, sieve_density
from .simulation import DgpSpec, generate, reference_spec, run_monte_carlo

_logger = logging.getLogger(__name__)


class SieveSGD:
    """Sieve-SGD estimator object for fitting one dataset and reporting on it.

    Attributes:
        config (SsgdConfig): The validated settings.
        estimator (str): "average", "group" or "known-g".
        link (LinkFunction): The known link for "known-g", otherwise None.
        data (Dataset): The data of the last fit. Defaults to None.
        result (FitResult): The last fit. Defaults to None.

    """

    def __init__(self, estimator="average", link=None, **settings):
        """Initialize a SieveSGD instance.

        Args:
            estimator (str): "average", "group" or "known-g". Defaults to
                "average".
            link (LinkFunction or str): The known link, required for
                "known-g". A name is looked up with get_link().
            **settings: SsgdConfig fields, such as gamma1, gamma, q or seed.

        Returns:
            None

        """

        self.config = SsgdConfig(**settings)
        self.estimator = estimator
        self.link = get_link(link) if isinstance(link, str) else link
        if estimator == "known-g" and self.link is None:
            raise ConfigurationError("the known-g estimator needs a link")
        self.data = None
        self.result = None


    def fit(self, X, y=None, beta0=None):
        """Validate the data and run the estimator.

        Args:
            X (array or Dataset): Regressors, shape (n, p), or a validated
                Dataset when y is omitted.
            y (array): Binary outcomes, length n.
            beta0 (array): Starting value. Optional.

        Returns:
            The FitResult, also kept as self.result.

        """

        self.data = X if isinstance(X, Dataset) and y is None else validate_dataset(X, y)
        self.result = run_estimator(self.estimator, self.data, self.config,
                link=self.link, beta0=beta0)
        return self.result


    def __check_fitted(self):
        if self.result is None:
            raise ValueError("call fit() first")


    def vcov(self, include_f=True, form="main"):
        """Sandwich covariance at the averaged iterate, attached to self.result."""
        self.__check_fitted()
        fit = self.link if self.link is not None else link_for_inference(
                self.data, self.result)
        vcov = sandwich_vcov(self.data, self.result.beta_avg, fit,
                include_f=include_f, form=form)
        self.result = self.result.with_vcov(vcov)
        return vcov


    def confidence_intervals(self, level=0.95, normalized=False):
        """Sandwich confidence intervals for the averaged estimate.

        Args:
            level (float): Coverage level. Defaults to 0.95.
            normalized (bool): Intervals for the coefficients relative to the
                numeraire instead of the raw coefficients.

        Returns:
            A ConfidenceIntervals tuple.

        """

        self.__check_fitted()
        vcov = self.result.vcov if self.result.vcov is not None else self.vcov()
        if normalized:
            return normalized_confidence_intervals(self.result, vcov, level,
                    self.config.numeraire)
        return confidence_intervals(self.result, vcov, level)


    def summary(self):
        """A short text description of the last fit."""
        self.__check_fitted()
        result = self.result
        lines = [
            "estimator: {} (n = {}, p = {}, K = {})".format(result.estimator,
                    self.data.n, self.data.p, result.K),
            "beta_hat: {}".format(", ".join("{:.6g}".format(b)
                    for b in result.beta_hat)),
            "normalized: {}".format(", ".join("{:.6g}".format(b)
                    for b in result.beta_normalized)),
            "seconds: {:.3f}".format(result.seconds),
        ]
        if result.vcov is not None:
            lines.append("std errors: {}".format(", ".join("{:.4g}".format(s)
                    for s in result.vcov.standard_errors)))
        lines.extend("warning: {}".format(note) for note in result.warnings)
        return "\n".join(lines)
