"""sieve: Polynomial sieve basis and the series logit estimator.

The unknown CDF g of the error term is approximated by L(pi0 + R(z)'pi),
where L is the logistic CDF and R(z) holds q polynomial terms in the index z.
The terms are the monomials of the standardized index, centered and
orthonormalized against the training sample, so that the columns have sample
mean 0 and identity second-moment matrix. Raw powers and orthonormal columns
span the same space, so fitted probabilities do not depend on the choice.

Example:

    # Fit the sieve on the current index and evaluate it elsewhere
    fit = fit_series_logit(X @ beta, y, q=3)
    probs = sieve_cdf(fit, X_new @ beta)
    slopes = sieve_density(fit, X_new @ beta)

"""

# Imports from other packages
from collections import namedtuple
from dataclasses import dataclass, field
import logging
import numpy as np
from scipy import linalg, special
# Imports from this package
from .errors import DegenerateIndexError, NumericalError, RankDeficientBasisError

_logger = logging.getLogger(__name__)

# Probabilities are kept this far from 0 and 1 before anything takes logs
PROB_CLIP = 1e-12
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 100
HESSIAN_RIDGE = 1e-8
SEPARATION_LOGLIK = 1e-6
# Relative size of an R diagonal entry below which a column is dependent
RANK_TOL = 1e-9


@dataclass(frozen=True)
class SieveBasis:
    """Orthonormalized polynomial basis over a scalar index.

    Attributes:
        order_q (int): Number of non-constant columns.
        center (float): Sample mean of the training index.
        scale (float): Sample standard deviation of the training index.
        monomial_means (np.ndarray): Training means of u, u^2, .., u^q.
        orthonormalizer (np.ndarray): q x q upper-triangular map from the
            centered monomials to orthonormal columns.
        condition_number (float): Condition number of the orthonormalizer.
        iota (float): Largest row norm of the basis on the training sample.
        includes_intercept (bool): Always True; the intercept is pi[0].

    """

    order_q: int
    center: float
    scale: float
    monomial_means: np.ndarray = field(compare=False)
    orthonormalizer: np.ndarray = field(compare=False)
    condition_number: float = 1.0
    iota: float = 0.0
    includes_intercept: bool = True

    def _standardize(self, z):
        z = np.asarray(z, dtype=float)
        if not np.all(np.isfinite(z)):
            raise NumericalError("sieve basis evaluated at a non-finite index")
        return (z - self.center) / self.scale

    def design(self, z):
        """The n x q matrix of non-constant basis columns at z."""
        u = self._standardize(z)
        powers = u[:, None] ** np.arange(1, self.order_q + 1)
        return (powers - self.monomial_means) @ self.orthonormalizer

    def design_derivative(self, z):
        """The n x q matrix of d/dz of each basis column at z."""
        u = self._standardize(z)
        orders = np.arange(1, self.order_q + 1)
        slopes = orders * u[:, None] ** (orders - 1) / self.scale
        return slopes @ self.orthonormalizer

    def full_design(self, z):
        """Intercept column followed by design(z)."""
        B = self.design(z)
        return np.hstack([np.ones((B.shape[0], 1)), B])


def _signed_qr(A):
    """Thin QR with a positive diagonal in R."""
    _, R = linalg.qr(A, mode="economic")
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    return signs[:, None] * R


def build_basis(z, q):
    """Build the orthonormal polynomial basis for an index sample.

    The index is standardized, raised to powers 1..q, centered, and
    orthonormalized by two passes of a triangular (QR) transform, the second
    pass cleaning up the rounding left by the first.

    Args:
        z (array): Index sample, length n.
        q (int): Number of polynomial powers.

    Returns:
        A SieveBasis.

    Raises:
        DegenerateIndexError: z has zero sample variance.
        RankDeficientBasisError: The monomials are linearly dependent on the
            sample; achievable_order says how many powers are usable.

    """

    z = np.asarray(z, dtype=float).reshape(-1)
    n = z.shape[0]
    if not np.all(np.isfinite(z)):
        raise NumericalError("index sample has non-finite values")
    center = float(np.mean(z))
    scale = float(np.std(z))
    if not (scale > 0):
        raise DegenerateIndexError("index sample has zero variance")
    if n <= q + 1:
        raise RankDeficientBasisError("need n > q + 1 observations for q = {}, "
                "got n = {}".format(q, n), achievable_order=max(0, n - 2))

    u = (z - center) / scale
    powers = u[:, None] ** np.arange(1, q + 1)
    means = powers.mean(axis=0)
    centered = powers - means
    root_n = np.sqrt(n)

    # First pass, with a rank check against each column's own size
    R = _signed_qr(centered / root_n)
    column_norms = np.linalg.norm(centered, axis=0) / root_n
    relative = np.abs(np.diag(R)) / np.where(column_norms > 0, column_norms, 1.0)
    dependent = np.flatnonzero(relative < RANK_TOL)
    if dependent.size:
        achievable = int(dependent[0])
        raise RankDeficientBasisError("polynomial basis of order {} is rank "
                "deficient on this index sample ({} distinct values); highest "
                "achievable order is {}".format(q, np.unique(z).size, achievable),
                achievable_order=achievable)
    T = linalg.solve_triangular(R, np.eye(q), lower=False)

    # Reorthogonalize
    R2 = _signed_qr(centered @ T / root_n)
    T = T @ linalg.solve_triangular(R2, np.eye(q), lower=False)
    T = np.triu(T)

    B = centered @ T
    iota = float(np.max(np.linalg.norm(B, axis=1)))
    T.setflags(write=False)
    means.setflags(write=False)
    return SieveBasis(q, center, scale, means, T, float(np.linalg.cond(T)), iota)


LogitSolution = namedtuple("LogitSolution", ["coef", "loglik", "loglik_path",
        "iterations", "gradient_norm", "gradient_ok", "eta"])


def _loglik(eta, y):
    """Mean logit log-likelihood, stable for large |eta|."""
    return float(np.mean(y * eta - np.logaddexp(0.0, eta)))


def _score(D, y, mu):
    return D.T @ (y - mu) / D.shape[0]


def _newton_step(D, mu, grad, ridge):
    """Newton direction on the ridged observed information."""
    weights = mu * (1.0 - mu)
    hessian = (D * weights[:, None]).T @ D / D.shape[0] + ridge * np.eye(D.shape[1])
    try:
        return linalg.solve(hessian, grad, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        return np.linalg.lstsq(hessian, grad, rcond=None)[0]


def newton_logit(D, y, init=None, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER,
        ridge=HESSIAN_RIDGE):
    """Maximize the mean logit log-likelihood by Newton with step halving.

    A step is only accepted when it does not lower the log-likelihood, so the
    recorded path is nondecreasing. Once the score is below tol a single
    polishing step is taken, which brings the coefficients to the level of
    rounding rather than of tol.

    Args:
        D (np.ndarray): Design matrix, shape (n, m).
        y (np.ndarray): Outcomes in {0, 1}.
        init (array): Starting coefficients. Defaults to zeros.
        tol (float): Stop when the gradient's max norm is below this.
        max_iter (int): Newton step cap.
        ridge (float): Added to the Hessian diagonal.

    Returns:
        A LogitSolution.

    """

    m = D.shape[1]
    coef = np.zeros(m) if init is None else np.array(init, dtype=float)
    if coef.shape != (m,) or not np.all(np.isfinite(coef)):
        coef = np.zeros(m)
    eta = D @ coef
    loglik = _loglik(eta, y)
    path = [loglik]
    iterations = 0

    while True:
        mu = special.expit(eta)
        grad = _score(D, y, mu)
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol or iterations >= max_iter:
            break

        step = _newton_step(D, mu, grad, ridge)

        # Halve until the log-likelihood does not drop
        accepted = False
        t = 1.0
        for _ in range(60):
            candidate = coef + t * step
            eta_candidate = D @ candidate
            loglik_candidate = _loglik(eta_candidate, y)
            if np.isfinite(loglik_candidate) and loglik_candidate >= loglik:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break

        coef, eta, loglik = candidate, eta_candidate, loglik_candidate
        path.append(loglik)
        iterations += 1

    # One more full step once the score is below tol. Its likelihood gain is
    # below rounding, so it is accepted on the score instead
    if grad_norm < tol and iterations < max_iter:
        candidate = coef + _newton_step(D, special.expit(eta), grad, ridge)
        eta_candidate = D @ candidate
        candidate_norm = float(np.max(np.abs(_score(D, y,
                special.expit(eta_candidate)))))
        if np.all(np.isfinite(candidate)) and candidate_norm <= grad_norm:
            coef, eta, grad_norm = candidate, eta_candidate, candidate_norm
            loglik = _loglik(eta, y)
            iterations += 1
            if loglik >= path[-1]:
                path.append(loglik)

    return LogitSolution(coef, loglik, tuple(path), iterations, grad_norm,
            grad_norm < tol, eta)


def plain_logit(X, y, intercept=False, init=None):
    """Plain logit MLE of y on the columns of X.

    Args:
        X (np.ndarray): Regressors, shape (n, p).
        y (np.ndarray): Outcomes in {0, 1}.
        intercept (bool): Prepend a constant column. Defaults to False.
        init (array): Starting coefficients, optional.

    Returns:
        A LogitSolution; coef[0] is the intercept when one is included.

    """

    D = np.hstack([np.ones((X.shape[0], 1)), X]) if intercept else X
    return newton_logit(D, np.asarray(y, dtype=float), init=init)


@dataclass(frozen=True)
class SieveFit:
    """Series logit fit of y on the sieve basis of an index.

    Attributes:
        pi (np.ndarray): Intercept followed by q basis coefficients.
        basis (SieveBasis): The basis the coefficients refer to.
        loglik (float): Mean log-likelihood at pi.
        newton_iters (int): Accepted Newton steps.
        converged (bool): Gradient below tolerance and no separation.
        separation_suspected (bool): The likelihood looks unbounded.
        gradient_norm (float): Max norm of the score at pi.
        loglik_path (tuple): Log-likelihood after each accepted step.
        fitted (np.ndarray): Clipped fitted probabilities on the training index.

    """

    pi: np.ndarray = field(compare=False)
    basis: SieveBasis
    loglik: float
    newton_iters: int
    converged: bool
    separation_suspected: bool = False
    gradient_norm: float = 0.0
    loglik_path: tuple = ()
    fitted: np.ndarray = field(default=None, compare=False, repr=False)

    @property
    def order_q(self):
        return self.basis.order_q


def _linear_index(fit, z):
    return fit.pi[0] + fit.basis.design(z) @ fit.pi[1:]


def sieve_cdf(fit, z_new):
    """Evaluate the fitted CDF L(pi0 + R(z)'pi) at new index values.

    Args:
        fit (SieveFit): The series logit fit.
        z_new (array): Index values.

    Returns:
        Probabilities clipped to [1e-12, 1 - 1e-12].

    """

    z_new = np.atleast_1d(np.asarray(z_new, dtype=float))
    return np.clip(special.expit(_linear_index(fit, z_new)), PROB_CLIP,
            1.0 - PROB_CLIP)


def sieve_density(fit, z_new):
    """Analytic derivative of the fitted CDF with respect to the index.

    Chain rule through the logistic and the polynomial basis, never finite
    differences. The unclipped probabilities are used.

    Args:
        fit (SieveFit): The series logit fit.
        z_new (array): Index values.

    Returns:
        The derivative at each index value. Not guaranteed to be
        nonnegative, since the polynomial is unconstrained.

    """

    z_new = np.atleast_1d(np.asarray(z_new, dtype=float))
    mu = special.expit(_linear_index(fit, z_new))
    slope = fit.basis.design_derivative(z_new) @ fit.pi[1:]
    return mu * (1.0 - mu) * slope


def fit_series_logit(z, y, q, pi0=None):
    """Fit the series logit estimator on an index sample.

    Args:
        z (array): Index values x_i'beta, length n.
        y (array): Outcomes in {0, 1}, length n.
        q (int): Number of polynomial powers.
        pi0 (array): Warm start for pi, length q + 1. Optional.

    Returns:
        A SieveFit. A non-converged fit with separation_suspected set is
        returned, not raised, when the likelihood looks unbounded.

    """

    y = np.asarray(y, dtype=float).reshape(-1)
    basis = build_basis(z, q)
    D = basis.full_design(z)
    solution = newton_logit(D, y, init=pi0)

    # The accepted-step rule makes this hold; a failure is a solver bug
    path = np.asarray(solution.loglik_path)
    assert np.all(np.diff(path) >= 0), "log-likelihood decreased"

    pi = solution.coef.copy()
    pi.setflags(write=False)
    fit = SieveFit(pi, basis, solution.loglik, solution.iterations, False,
            loglik_path=solution.loglik_path,
            gradient_norm=solution.gradient_norm)
    fitted = sieve_cdf(fit, z)

    # Each of these puts the likelihood maximum at infinity
    ones, zeros = solution.eta[y == 1], solution.eta[y == 0]
    ordered = ones.size > 0 and zeros.size > 0 and ones.min() > zeros.max()
    saturated = solution.loglik > -SEPARATION_LOGLIK
    separated = bool(ones.size == 0 or zeros.size == 0 or ordered or saturated
            or not solution.gradient_ok)
    if separated:
        _logger.debug("series logit: separation suspected after %d Newton steps",
                solution.iterations)
    fitted.setflags(write=False)
    return SieveFit(pi, basis, solution.loglik, solution.iterations,
            solution.gradient_ok and not separated, separated,
            solution.gradient_norm, solution.loglik_path, fitted)
