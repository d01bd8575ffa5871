"""config: Validated settings for the SGD and Sieve-SGD estimators.

Example:

    # Default settings: gamma_k = 2 k^-0.8, three sieve powers
    config = SsgdConfig(gamma1=2.0, gamma=0.8, q=3, seed=7)
    # Fill in K for a sample of 5000 observations with 9 regressors
    K = config.iterations(5000, 9)
    # The conditioning matrix, rescaled to unit spectral norm
    C = config.conditioning(9)

"""

# Imports from other packages
from dataclasses import dataclass, field, replace
import logging
import math
from typing import Optional
import warnings
import numpy as np
# Imports from this package
from .errors import ConfigurationError, DimensionMismatchError

_logger = logging.getLogger(__name__)

STARTS = ("logit", "zero")


@dataclass(frozen=True)
class SsgdConfig:
    """Settings shared by all three estimators.

    Attributes:
        gamma1 (float): Learning-rate scale, must exceed 1.
        gamma (float): Learning-rate exponent in (0.5, 1].
        C (array): p x p symmetric positive-definite conditioning matrix.
            None means the identity.
        K (int): Iteration count. None means the tuning rule (K = n).
        q (int): Number of polynomial powers in the sieve, z^1 .. z^q.
        trim_t (int): Iterates dropped from the end of the average.
        seed (int): Seed for the observation shuffle of the known-g route.
        refit_every (int): Refit the sieve every this many iterations.
        early_stop_tol (float): Stop when an update moves beta by less than
            this. None disables early stopping.
        start (str): Initial beta for the sieve routes, "logit" or "zero".
        deterministic (bool): Sum gradients with the fixed pairwise tree.
        retain_fits (int): How many of the latest sieve fits to keep.
        normalize_conditioning (bool): Rescale C to unit spectral norm.
        standardize (bool): Run the sieve routes on column-scaled regressors.
        numeraire (int): Coefficient the others are reported relative to.

    """

    gamma1: float = 2.0
    gamma: float = 0.8
    C: Optional[np.ndarray] = field(default=None, compare=False)
    K: Optional[int] = None
    q: int = 3
    trim_t: int = 0
    seed: int = 0
    refit_every: int = 1
    early_stop_tol: Optional[float] = None
    start: str = "logit"
    deterministic: bool = True
    retain_fits: int = 0
    normalize_conditioning: bool = True
    standardize: bool = True
    numeraire: int = 0

    def __post_init__(self):
        if not (self.gamma1 > 1):
            raise ConfigurationError("gamma1 must be > 1, got {}".format(self.gamma1))
        if not (0.5 < self.gamma <= 1):
            raise ConfigurationError("gamma must lie in (0.5, 1], got {}".format(
                    self.gamma))
        if self.K is not None and (int(self.K) != self.K or self.K < 1):
            raise ConfigurationError("K must be a positive integer, got {}".format(
                    self.K))
        if int(self.q) != self.q or self.q < 1:
            raise ConfigurationError("q must be a positive integer, got {}".format(
                    self.q))
        if int(self.trim_t) != self.trim_t or self.trim_t < 0:
            raise ConfigurationError("trim_t must be a nonnegative integer, got {}"
                    .format(self.trim_t))
        if self.K is not None and self.trim_t >= self.K:
            raise ConfigurationError("trim_t = {} must be smaller than K = {}".format(
                    self.trim_t, self.K))
        if int(self.refit_every) != self.refit_every or self.refit_every < 1:
            raise ConfigurationError("refit_every must be a positive integer")
        if self.early_stop_tol is not None and not (self.early_stop_tol > 0):
            raise ConfigurationError("early_stop_tol must be positive")
        if self.start not in STARTS:
            raise ConfigurationError("start must be one of {}, got {!r}".format(
                    STARTS, self.start))
        if self.retain_fits < 0:
            raise ConfigurationError("retain_fits must be nonnegative")
        if self.numeraire < 0:
            raise ConfigurationError("numeraire must be a nonnegative index")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigurationError("seed must fit in 64 unsigned bits")
        if self.C is not None:
            C = np.array(self.C, dtype=float)
            _check_conditioning(C)
            C.setflags(write=False)
            object.__setattr__(self, "C", C)

    def with_updates(self, **changes):
        """Return a copy with some fields replaced (validated again)."""
        return replace(self, **changes)

    def conditioning(self, p):
        """The p x p conditioning matrix used in the updates.

        Args:
            p (int): Number of regressors.

        Returns:
            C, rescaled to spectral norm 1 unless normalize_conditioning is off.

        """

        if self.C is None:
            return np.eye(p)
        if self.C.shape != (p, p):
            raise DimensionMismatchError("C has shape {}, expected ({}, {})".format(
                    self.C.shape, p, p))
        if not self.normalize_conditioning:
            return self.C.copy()
        return self.C / np.linalg.norm(self.C, 2)

    def iterations(self, n, p):
        """Resolve K for a sample, warning when it leaves the admissible window.

        Args:
            n (int): Sample size.
            p (int): Number of regressors.

        Returns:
            The iteration count K.

        """

        if self.K is None:
            return n
        lower, upper = admissible_window(n, self.gamma)
        if not (lower <= self.K <= upper):
            msg = ("K = {} is outside the admissible window [{}, {}] for n = {}, "
                    "gamma = {}").format(self.K, lower, upper, n, self.gamma)
            _logger.warning(msg)
            warnings.warn(msg, UserWarning, stacklevel=2)
        return int(self.K)

    def to_dict(self):
        """Plain-Python view for reports."""
        out = {name: getattr(self, name) for name in self.__dataclass_fields__}
        out["C"] = None if self.C is None else self.C.tolist()
        return out


def _check_conditioning(C):
    """Raise ConfigurationError unless C is symmetric positive definite."""
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ConfigurationError("C must be a square matrix, got shape {}".format(
                C.shape))
    if not np.all(np.isfinite(C)):
        raise ConfigurationError("C has non-finite entries")
    if not np.allclose(C, C.T, rtol=0, atol=1e-12 * max(1.0, np.abs(C).max())):
        raise ConfigurationError("C must be symmetric")
    eigenvalues = np.linalg.eigvalsh(C)
    if eigenvalues.min() <= 0:
        raise ConfigurationError("C must be positive definite, smallest "
                "eigenvalue is {}".format(eigenvalues.min()))


def _exponent(n, power):
    """n ** power with rounding noise removed before ceil/floor."""
    return round(n ** power, 9)


def admissible_window(n, gamma):
    """Iteration window [ceil(n^(1/(2 gamma))), floor(n^(1/gamma))].

    Args:
        n (int): Sample size.
        gamma (float): Learning-rate exponent.

    Returns:
        A (lower, upper) tuple of ints.

    """

    lower = math.ceil(_exponent(n, 1.0 / (2.0 * gamma)))
    upper = math.floor(_exponent(n, 1.0 / gamma))
    return lower, upper
