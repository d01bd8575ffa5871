"""Test suite for the polynomial sieve basis and the series logit fit."""

# Imports from other packages
import numpy as np
import pytest
from scipy import special
import statsmodels.api as sm
# Imports from this package
from sieve_sgd.errors import DegenerateIndexError, RankDeficientBasisError
from sieve_sgd.sieve import (
    PROB_CLIP,
    SieveFit,
    build_basis,
    fit_series_logit,
    newton_logit,
    plain_logit,
    sieve_cdf,
    sieve_density,
)


@pytest.fixture
def rng():
    """A seeded generator."""

    return np.random.default_rng(777)


def _logit_sample(rng, n, a=0.0, b=1.0):
    """Index draws and outcomes from a logistic model a + b z."""
    z = rng.standard_normal(n)
    y = (rng.uniform(size=n) < special.expit(a + b * z)).astype(float)
    return z, y


def _second_moment(basis, z):
    B = basis.design(z)
    return B.T @ B / z.shape[0]


def test_basis_order_one_standardizes(rng):
    """With one power the column is the standardized index."""

    z = 3.0 + 2.0 * rng.standard_normal(40)
    basis = build_basis(z, 1)
    column = basis.design(z)[:, 0]

    assert abs(column.mean()) < 1e-8
    assert abs(np.mean(column ** 2) - 1.0) < 1e-8
    assert np.allclose(column, (z - z.mean()) / z.std(), atol=1e-10)


def test_basis_order_two_on_grid():
    """On a symmetric grid the quadratic column is orthogonal to the linear one."""

    z = np.linspace(-1, 1, 21)
    B = build_basis(z, 2).design(z)
    correlation = np.corrcoef(B[:, 0], B[:, 1])[0, 1]
    assert abs(correlation) < 1e-10


def test_basis_order_three_small_sample(rng):
    """Three powers on ten points have an identity second-moment matrix."""

    z = rng.uniform(-2, 2, 10)
    basis = build_basis(z, 3)
    assert basis.design(z).shape == (10, 3)
    assert np.linalg.norm(_second_moment(basis, z) - np.eye(3)) < 1e-8
    # The transform is upper triangular
    assert np.array_equal(basis.orthonormalizer, np.triu(basis.orthonormalizer))


def test_basis_orthonormal_many_samples(rng):
    """Centered, orthonormal columns for every order up to 8."""

    for trial in range(100):
        q = 1 + trial % 8
        n = 50 if trial % 2 == 0 else 400
        z = rng.normal(rng.uniform(-2, 2), rng.uniform(0.5, 3), n)
        basis = build_basis(z, q)
        B = basis.design(z)
        assert np.max(np.abs(B.mean(axis=0))) < 1e-8
        assert np.linalg.norm(B.T @ B / n - np.eye(q)) < 1e-6
        assert np.isfinite(basis.condition_number)
        assert basis.iota > 0


def test_basis_zero_variance():
    """A constant index has no basis."""

    with pytest.raises(DegenerateIndexError):
        build_basis(np.full(20, 1.5), 2)


def test_basis_rank_deficient_names_order():
    """Two distinct index values support only one power."""

    z = np.tile([0.0, 1.0], 10)
    with pytest.raises(RankDeficientBasisError) as err:
        build_basis(z, 3)
    assert err.value.achievable_order == 1


def test_basis_too_few_points():
    """n must exceed q + 1."""

    with pytest.raises(RankDeficientBasisError) as err:
        build_basis(np.array([0.1, 0.5, 0.9, 1.3]), 3)
    assert err.value.achievable_order == 2


def test_basis_derivative(rng):
    """design_derivative is the slope of design."""

    z = rng.standard_normal(60)
    basis = build_basis(z, 4)
    at = np.array([-0.7, 0.2, 1.1])
    h = 1e-6
    numeric = (basis.design(at + h) - basis.design(at - h)) / (2 * h)
    assert np.allclose(basis.design_derivative(at), numeric, rtol=1e-6, atol=1e-6)


def test_series_logit_recovers_coefficients(rng):
    """A large logistic sample recovers (0, sd(z)) in basis units."""

    z, y = _logit_sample(rng, 100000)
    fit = fit_series_logit(z, y, 1)

    assert fit.converged
    assert abs(fit.pi[0]) < 0.05
    assert abs(fit.pi[1] - z.std()) < 0.05


def test_series_logit_order_one_is_plain_logit(rng):
    """With one power the fit is the logit of y on (1, z)."""

    for _ in range(50):
        a, b = rng.uniform(-1, 1), rng.uniform(0.5, 2)
        z, y = _logit_sample(rng, 500, a, b)
        fit = fit_series_logit(z, y, 1)

        # Map the basis coefficients back to an intercept and slope on z
        basis = fit.basis
        t = basis.orthonormalizer[0, 0]
        slope = fit.pi[1] * t / basis.scale
        intercept = fit.pi[0] - fit.pi[1] * t * (basis.center / basis.scale
                + basis.monomial_means[0])

        oracle = sm.Logit(y, sm.add_constant(z)).fit(method="newton", tol=1e-12,
                maxiter=200, disp=0)
        assert np.allclose([intercept, slope], oracle.params, rtol=0, atol=1e-8)


def test_series_logit_constant_outcome():
    """All outcomes equal to 1 flag separation with a monotone path."""

    z = np.linspace(-2, 2, 30)
    fit = fit_series_logit(z, np.ones(30), 2)

    assert fit.separation_suspected
    assert not fit.converged
    assert np.all(np.diff(fit.loglik_path) >= 0)


def test_series_logit_perfect_separation():
    """Outcomes split by the index flag separation."""

    z = np.linspace(-2, 2, 40)
    y = (z > 0).astype(float)
    fit = fit_series_logit(z, y, 1)

    assert fit.separation_suspected
    assert not fit.converged
    assert np.all(np.isfinite(fit.pi))


def test_series_logit_ordered_by_curved_index():
    """y ordered by a quadratic in the index is separation at q = 2."""

    z = np.linspace(-2, 2, 60)
    y = (np.abs(z) > 1).astype(float)
    fit = fit_series_logit(z, y, 2)

    assert fit.separation_suspected
    assert not fit.converged


def test_series_logit_overlapping_outcomes_not_flagged(rng):
    """Noisy outcomes on a smooth link converge without a separation flag."""

    z = rng.standard_normal(500)
    y = (rng.uniform(size=500) < special.expit(z)).astype(float)
    fit = fit_series_logit(z, y, 2)

    assert fit.converged
    assert not fit.separation_suspected


def test_newton_polishes_past_tolerance(rng):
    """The returned score sits well below the stopping tolerance."""

    D = np.hstack([np.ones((300, 1)), rng.standard_normal((300, 2))])
    y = (rng.uniform(size=300) < special.expit(D @ np.array([0.3, 1.0, -0.7]))
            ).astype(float)
    solution = newton_logit(D, y)

    assert solution.gradient_ok
    assert solution.gradient_norm < 1e-12
    assert np.all(np.diff(solution.loglik_path) >= 0)


def test_newton_ascent_monotone(rng):
    """The log-likelihood never decreases along the Newton path."""

    for _ in range(20):
        D = np.hstack([np.ones((80, 1)), rng.standard_normal((80, 3))])
        y = rng.integers(0, 2, 80).astype(float)
        solution = newton_logit(D, y, init=rng.standard_normal(4) * 3)
        assert np.all(np.diff(solution.loglik_path) >= 0)


def test_plain_logit_without_intercept(rng):
    """plain_logit without a constant matches an independent solver."""

    X = rng.standard_normal((400, 2))
    y = (rng.uniform(size=400) < special.expit(X @ np.array([1.0, -0.5]))
            ).astype(float)
    solution = plain_logit(X, y)
    oracle = sm.Logit(y, X).fit(method="newton", tol=1e-12, maxiter=200, disp=0)

    assert solution.gradient_ok
    assert np.allclose(solution.coef, oracle.params, rtol=0, atol=1e-8)


def test_sieve_cdf_zero_coefficients(rng):
    """pi = 0 gives one half everywhere."""

    z = rng.standard_normal(30)
    basis = build_basis(z, 3)
    fit = SieveFit(np.zeros(4), basis, 0.0, 0, True)
    assert np.array_equal(sieve_cdf(fit, np.array([-5.0, 0.0, 3.0])),
            np.full(3, 0.5))


def test_sieve_cdf_monotone_order_one(rng):
    """An order-one fit on increasing data is increasing in z."""

    z, y = _logit_sample(rng, 2000, 0.0, 2.0)
    fit = fit_series_logit(z, y, 1)
    grid = np.linspace(-3, 3, 200)

    assert fit.pi[1] > 0
    assert np.all(np.diff(sieve_cdf(fit, grid)) >= 0)


def test_sieve_cdf_reproduces_fitted(rng):
    """At the training index sieve_cdf returns the solver's fitted values."""

    z, y = _logit_sample(rng, 500)
    fit = fit_series_logit(z, y, 3)
    solver = np.clip(special.expit(fit.basis.full_design(z) @ fit.pi),
            PROB_CLIP, 1 - PROB_CLIP)

    assert np.max(np.abs(sieve_cdf(fit, z) - fit.fitted)) < 1e-12
    assert np.max(np.abs(solver - fit.fitted)) < 1e-12


def test_sieve_cdf_out_of_range(rng):
    """Far outside the training range the CDF stays finite and inside (0, 1)."""

    z, y = _logit_sample(rng, 300)
    fit = fit_series_logit(z, y, 3)
    values = sieve_cdf(fit, np.array([-1e3, -50.0, 50.0, 1e3]))

    assert np.all(np.isfinite(values))
    assert np.all((values > 0) & (values < 1))


def test_sieve_density_is_slope(rng):
    """The analytic density matches a finite difference of the CDF."""

    z, y = _logit_sample(rng, 1000)
    fit = fit_series_logit(z, y, 3)
    at = np.array([-1.0, -0.2, 0.4, 1.3])
    h = 1e-6
    numeric = (sieve_cdf(fit, at + h) - sieve_cdf(fit, at - h)) / (2 * h)
    assert np.allclose(sieve_density(fit, at), numeric, rtol=1e-5, atol=1e-8)
