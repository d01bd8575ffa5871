"""Test suite for the sandwich covariance and confidence intervals."""

# Imports from other packages
import numpy as np
import pytest
from scipy import special, stats
import statsmodels.api as sm
# Imports from this package
from sieve_sgd.config import SsgdConfig
from sieve_sgd.errors import (
    ConfigurationError,
    DimensionMismatchError,
    NonInvertibleError,
)
from sieve_sgd.estimator import run_sgd_known_g, run_ssgd_average
from sieve_sgd.inference import (
    confidence_intervals,
    directional_interval,
    estimate_sigma1,
    estimate_sigma2,
    f_correction,
    link_for_inference,
    normalized_confidence_intervals,
    sandwich_vcov,
    studentized_statistic,
)
from sieve_sgd.model import Dataset, LinkFunction, logistic_link, validate_dataset
from sieve_sgd.sieve import SieveFit, build_basis, fit_series_logit, sieve_cdf


def _logistic_data(n, beta0, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, len(beta0)))
    y = (rng.uniform(size=n) < special.expit(X @ np.asarray(beta0))).astype(float)
    return validate_dataset(X, y)


@pytest.fixture
def data():
    """700 logistic observations with beta0 = (1, -0.5)."""

    return _logistic_data(700, [1.0, -0.5], seed=31)


@pytest.fixture
def sieve_fit(data):
    """Cubic sieve fit at the true index."""

    return fit_series_logit(data.X @ np.array([1.0, -0.5]), data.y, 3)


def test_sigma1_constant_link():
    """g = 0.5 on rows (1, 0), (0, 1) gives 0.125 I."""

    # Two rows for two regressors, so the arrays are used as they are
    data = Dataset(np.eye(2), np.array([0.0, 1.0]))
    half = LinkFunction(lambda z: np.full(np.shape(z), 0.5), 1.0)

    sigma1 = estimate_sigma1(data, np.array([0.3, 0.2]), half)
    assert np.allclose(sigma1, 0.125 * np.eye(2), rtol=0, atol=1e-15)


def test_sigma1_degenerate_link(data):
    """g in {0, 1} gives a zero meat."""

    step = LinkFunction(lambda z: (np.asarray(z) > 0).astype(float), 1.0)
    assert np.array_equal(estimate_sigma1(data, np.array([1.0, 0.0]), step),
            np.zeros((2, 2)))


def test_sigma1_matches_direct_sum(data, sieve_fit):
    """The meat equals a row-by-row sum."""

    beta = np.array([1.0, -0.5])
    g = sieve_cdf(sieve_fit, data.X @ beta)
    oracle = np.zeros((2, 2))
    for i in range(data.n):
        oracle += g[i] * (1 - g[i]) * np.outer(data.X[i], data.X[i])
    oracle /= data.n

    sigma1 = estimate_sigma1(data, beta, sieve_fit)
    assert np.max(np.abs(sigma1 - oracle)) < 1e-12
    assert np.array_equal(sigma1, sigma1.T)
    assert np.linalg.eigvalsh(sigma1).min() >= -1e-8


def test_sigma2_constant_density(data):
    """A constant g' without f gives c times the second moment of X."""

    flat = LinkFunction(special.expit, 0.25, "flat", density=lambda z: 0.3)
    sigma2 = estimate_sigma2(data, np.array([1.0, -0.5]), flat, include_f=False)
    assert np.allclose(sigma2, 0.3 * data.X.T @ data.X / data.n, rtol=1e-12)


@pytest.mark.parametrize("q", [1, 3])
def test_f_factored_matches_double_loop(data, q):
    """The factored f equals the tiled double loop."""

    beta = np.array([1.0, -0.5])
    fit = fit_series_logit(data.X @ beta, data.y, q)

    factored = f_correction(data, beta, fit)
    looped = f_correction(data, beta, fit, method="double_loop")
    assert np.max(np.abs(factored - looped)) < 1e-10


def test_f_vanishes_on_mirrored_design():
    """f is zero when R' g' is orthogonal in sample to x."""

    a = np.array([0.3, 0.9, 1.4, 2.2])
    X = np.array([[s * v, t] for v in a for s in (1.0, -1.0) for t in (1.0, -1.0)])
    y = np.tile([0.0, 1.0], X.shape[0] // 2)
    data = validate_dataset(X, y)

    # An odd index function through the logistic
    z = X[:, 0]
    fit = SieveFit(np.array([0.0, 0.7]), build_basis(z, 1), 0.0, 0, True)
    f = f_correction(data, np.array([1.0, 0.0]), fit)
    assert np.max(np.abs(f)) < 1e-12


def test_f_bad_method(data, sieve_fit):
    """Unknown f methods are rejected."""

    with pytest.raises(ConfigurationError):
        f_correction(data, np.array([1.0, -0.5]), sieve_fit, method="bootstrap")


def test_sandwich_one_regressor_logit_variance():
    """With one regressor the sandwich approaches the logit variance."""

    data = _logistic_data(20000, [1.0], seed=41)
    z = data.X[:, 0]
    fit = fit_series_logit(z, data.y, 1)
    vcov = sandwich_vcov(data, np.array([1.0]), fit, include_f=False)

    # Inverse Fisher information of the logit slope
    L = special.expit(z)
    oracle = 1.0 / (data.n * np.mean(L * (1 - L) * z ** 2))
    assert 0.7 <= vcov.vcov[0, 0] / oracle <= 1.4
    assert not vcov.f_correction_included


def test_sandwich_known_link_matches_logit(data):
    """With the true link the sandwich is close to the logit MLE covariance."""

    vcov = sandwich_vcov(data, np.array([1.0, -0.5]), logistic_link())
    oracle = sm.Logit(data.y, data.X).fit(disp=0).cov_params()

    ratio = np.diag(vcov.vcov) / np.diag(oracle)
    assert np.all((ratio > 0.8) & (ratio < 1.25))
    # f does not apply to a known link
    assert not vcov.f_correction_included


def test_sandwich_properties(data, sieve_fit):
    """The meat is PSD and the covariance symmetric."""

    vcov = sandwich_vcov(data, np.array([1.0, -0.5]), sieve_fit)
    assert vcov.f_correction_included
    assert vcov.form == "main"
    assert vcov.n == data.n
    assert np.max(np.abs(vcov.vcov - vcov.vcov.T)) < 1e-10
    assert vcov.sigma1_min_eigenvalue >= -1e-8
    assert 0 < vcov.rcond <= 1
    assert np.all(vcov.standard_errors > 0)


def test_sandwich_singular_bread():
    """Duplicate regressors make the bread singular."""

    rng = np.random.default_rng(5)
    x = rng.standard_normal(100)
    data = Dataset(np.column_stack([x, x]), (x > 0).astype(float))

    with pytest.raises(NonInvertibleError) as err:
        sandwich_vcov(data, np.array([1.0, 1.0]), logistic_link())
    assert err.value.rcond < 1e-12


def test_sandwich_index_form(data, sieve_fit):
    """The index form uses (I + l beta') W E[g' x x'] as bread."""

    beta = np.array([1.0, -0.5])
    vcov = sandwich_vcov(data, beta, sieve_fit, form="index")
    sigma2 = estimate_sigma2(data, beta, sieve_fit, include_f=False)
    l = 1.0 / beta

    assert vcov.form == "index" and not vcov.whitened
    assert np.allclose(vcov.sigma2_hat, (np.eye(2) + np.outer(l, beta)) @ sigma2,
            rtol=1e-12, atol=1e-14)
    assert np.max(np.abs(vcov.vcov - vcov.vcov.T)) < 1e-10


def test_sandwich_index_form_whitened(data, sieve_fit):
    """The whitened index form runs and is flagged."""

    vcov = sandwich_vcov(data, np.array([1.0, -0.5]), sieve_fit, form="index",
            whitened=True)
    assert vcov.whitened
    assert np.all(np.isfinite(vcov.vcov))


def test_sandwich_index_form_zero_coefficient(data, sieve_fit):
    """The index form needs nonzero coefficients."""

    with pytest.raises(NonInvertibleError):
        sandwich_vcov(data, np.array([1.0, 0.0]), sieve_fit, form="index")


def test_sandwich_bad_form(data, sieve_fit):
    """Unknown forms are rejected."""

    with pytest.raises(ConfigurationError):
        sandwich_vcov(data, np.array([1.0, -0.5]), sieve_fit, form="robust")


def test_sandwich_dimension_mismatch(data, sieve_fit):
    """beta must match the number of regressors."""

    with pytest.raises(DimensionMismatchError):
        estimate_sigma1(data, np.ones(3), sieve_fit)


def test_intervals_unit_variance():
    """vcov = I / n gives half-width z / sqrt(n)."""

    n = 400
    intervals = confidence_intervals(np.array([1.0, -2.0]), np.eye(2) / n, 0.95)
    half = (intervals.upper - intervals.lower) / 2

    assert np.allclose(half, stats.norm.ppf(0.975) / np.sqrt(n), rtol=1e-14)
    assert abs(half[0] - 1.96 / 20) < 1e-4
    assert np.array_equal(intervals.estimate, np.array([1.0, -2.0]))


def test_direction_matches_coordinate():
    """A unit coordinate direction gives the per-coefficient interval."""

    estimate = np.array([0.5, 1.5, -1.0])
    V = np.array([[0.04, 0.01, 0.0], [0.01, 0.09, 0.02], [0.0, 0.02, 0.01]])
    intervals = confidence_intervals(estimate, V, 0.9)
    single = directional_interval(estimate, V, [0.0, 2.0, 0.0], 0.9)

    assert single.estimate == estimate[1]
    assert abs(single.lower - intervals.lower[1]) < 1e-15
    assert abs(single.upper - intervals.upper[1]) < 1e-15


@pytest.mark.parametrize("level", [0.0, 1.0, 1.5, -0.1])
def test_level_outside_unit_interval(level):
    """Levels outside (0, 1) are rejected."""

    with pytest.raises(ConfigurationError):
        confidence_intervals(np.zeros(2), np.eye(2), level)


def test_studentized_statistic():
    """The statistic is s'(beta - beta0) / sqrt(s' V s)."""

    estimate = np.array([1.0, 2.0])
    assert studentized_statistic(estimate, np.zeros(2), np.eye(2), [1.0, 0.0]) == 1.0
    value = studentized_statistic(estimate, np.zeros(2), np.eye(2), [1.0, 1.0])
    assert abs(value - 3.0 / np.sqrt(2.0)) < 1e-14
    with pytest.raises(ConfigurationError):
        studentized_statistic(estimate, np.zeros(2), np.eye(2), [0.0, 0.0])


def test_normalized_intervals_delta_method():
    """Delta-method variance of beta_2 / beta_1."""

    estimate = np.array([2.0, 4.0])
    V = np.diag([0.01, 0.04])
    intervals = normalized_confidence_intervals(estimate, V, 0.95)

    # Gradient of b2 / b1 is (-b2 / b1^2, 1 / b1) = (-1, 0.5)
    assert np.allclose(intervals.estimate, [2.0])
    assert np.allclose(intervals.std_err, [np.sqrt(0.02)], rtol=1e-14)


def test_link_for_inference(data):
    """Sieve fits are refitted at the averaged index; known-g fits are not."""

    config = SsgdConfig(K=40)
    result = run_ssgd_average(data, config)
    fit = link_for_inference(data, result)
    assert fit.order_q == result.sieve_fit.order_q

    known = run_sgd_known_g(data, logistic_link(), config)
    with pytest.raises(ConfigurationError):
        link_for_inference(data, known)


def test_confidence_intervals_from_result(data):
    """Intervals for a FitResult are centered on the averaged estimate."""

    result = run_ssgd_average(data, SsgdConfig(K=40))
    vcov = sandwich_vcov(data, result.beta_avg, link_for_inference(data, result))
    intervals = confidence_intervals(result.with_vcov(vcov), vcov)

    assert np.array_equal(intervals.estimate, result.beta_avg)
    assert np.all(intervals.lower < result.beta_avg)
    assert np.all(intervals.upper > result.beta_avg)
