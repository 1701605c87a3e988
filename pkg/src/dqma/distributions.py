"""Densities and samplers used by the Gibbs kernels.

The asymmetric Laplace (ALD) working likelihood is written as a Gaussian
location-scale mixture::

    xi | omega ~ N(lambda * omega, delta * sigma * omega),   omega ~ Exp(rate=1/sigma)

with ``lambda = (1 - 2 tau) / (tau (1 - tau))`` and ``delta = 2 / (tau (1 - tau))``.
Marginally ``xi`` has density ``tau (1 - tau) / sigma * exp(-rho_tau(xi) / sigma)``
and its ``tau``-quantile is zero.

Every sampler takes an explicit ``numpy.random.Generator``; nothing here
touches global random state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "QuantileConfig",
    "ALDParams",
    "make_quantile_config",
    "pinball_loss",
    "ald_logpdf",
    "ald_pdf",
    "ald_cdf",
    "ald_cdf_at_location",
    "sample_exponential",
    "sample_inverse_gamma",
    "inverse_gamma_logpdf",
    "sample_inverse_wishart",
    "inverse_wishart_mean",
    "sample_inverse_gaussian",
    "sample_mvn",
    "omega_conditional_params",
]


@dataclass(frozen=True)
class QuantileConfig:
    """Quantile level and the derived constants of the ALD normal mixture."""

    tau: float
    lam: float
    delta: float


@dataclass(frozen=True)
class ALDParams:
    tau: float
    location: float
    scale: float

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise DomainError(f"tau must lie in (0, 1), got {self.tau}")
        if not self.scale > 0.0:
            raise DomainError(f"ALD scale must be positive, got {self.scale}")


def make_quantile_config(tau: float) -> QuantileConfig:
    """Build the mixture constants for quantile level ``tau``.

    >>> qc = make_quantile_config(0.5)
    >>> qc.lam, qc.delta
    (0.0, 8.0)
    """
    tau = float(tau)
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    denom = tau * (1.0 - tau)
    return QuantileConfig(tau=tau, lam=(1.0 - 2.0 * tau) / denom, delta=2.0 / denom)


def pinball_loss(residual, tau: float):
    """Quantile check loss ``rho_tau(u) = u * (tau - 1{u < 0})``.

    Works elementwise on arrays; returns a float for scalar input.
    """
    u = np.asarray(residual, dtype=float)
    out = u * (tau - (u < 0.0))
    return float(out) if out.ndim == 0 else out


def ald_logpdf(x, params: ALDParams):
    z = (np.asarray(x, dtype=float) - params.location) / params.scale
    out = np.log(params.tau * (1.0 - params.tau) / params.scale) - pinball_loss(z, params.tau)
    return float(out) if np.ndim(out) == 0 else out


def ald_pdf(x, params: ALDParams):
    """Closed-form ALD density with normaliser ``tau (1 - tau) / sigma``."""
    return np.exp(ald_logpdf(x, params))


def ald_cdf(x, params: ALDParams):
    tau = params.tau
    z = (np.asarray(x, dtype=float) - params.location) / params.scale
    left = tau * np.exp(np.minimum(z, 0.0) * (1.0 - tau))
    right = 1.0 - (1.0 - tau) * np.exp(-np.maximum(z, 0.0) * tau)
    out = np.where(z < 0.0, left, right)
    return float(out) if out.ndim == 0 else out


def ald_cdf_at_location(params: ALDParams) -> float:
    """Probability mass left of the location; equals ``tau`` by construction."""
    return ald_cdf(params.location, params)


def _positive(name, value):
    if not np.all(np.asarray(value) > 0.0):
        raise DomainError(f"{name} must be positive, got {value}")


def sample_exponential(rate, rng: np.random.Generator, size=None):
    """Exponential draw(s) with mean ``1 / rate``."""
    _positive("rate", rate)
    return rng.exponential(1.0 / np.asarray(rate, dtype=float), size=size)


def sample_inverse_gamma(a, b, rng: np.random.Generator, size=None):
    """Draw from IG(a, b), density proportional to ``x^-(a+1) exp(-b / x)``."""
    _positive("shape a", a)
    _positive("scale b", b)
    return b / rng.gamma(a, 1.0, size=size)


def inverse_gamma_logpdf(x, a: float, b: float):
    from scipy.special import gammaln

    x = np.asarray(x, dtype=float)
    return a * np.log(b) - gammaln(a) - (a + 1.0) * np.log(x) - b / x


def _check_pd(name, mat):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DomainError(f"{name} must be a square matrix, got shape {mat.shape}")
    if not np.all(np.abs(mat - mat.T) <= 1e-12 + 1e-10 * np.abs(mat.T)):
        raise DomainError(f"{name} must be symmetric")
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise DomainError(f"{name} must be positive definite") from None
    return mat, chol


def sample_inverse_wishart(c: float, C, rng: np.random.Generator):
    """Draw ``Omega`` with density proportional to
    ``|Omega|^-(c + (m+1)/2) exp(-tr(C Omega^-1))``.

    This is the conventional inverse Wishart with ``df = 2c`` and scale
    matrix ``2C``. The draw inverts a Bartlett-factor Wishart sample, which
    stays valid for non-integer degrees of freedom.
    """
    C, chol = _check_pd("scale matrix", C)
    m = C.shape[0]
    df = 2.0 * c
    if not df > m - 1:
        raise DomainError(f"improper inverse Wishart: need 2c > m - 1, got c={c}, m={m}")
    # With 2C = U U', W = U^-T A A' U^-1 ~ Wishart(df, (2C)^-1) for a Bartlett
    # factor A (any root works, W(df, I) is rotation invariant), so
    # Omega = W^-1 = (U A^-T)(U A^-T)'.
    A = np.zeros((m, m))
    A[np.diag_indices(m)] = np.sqrt(rng.chisquare(df - np.arange(m)))
    A[np.tril_indices(m, -1)] = rng.standard_normal(m * (m - 1) // 2)
    K = np.sqrt(2.0) * chol @ np.linalg.inv(A).T
    out = K @ K.T
    return 0.5 * (out + out.T)


def inverse_wishart_mean(c: float, C):
    """Mean of the inverse Wishart in the ``(c, C)`` parameterisation; needs ``2c > m + 1``."""
    C = np.asarray(C, dtype=float)
    m = C.shape[0]
    if not 2.0 * c > m + 1:
        raise DomainError("mean is infinite unless 2c > m + 1")
    return 2.0 * C / (2.0 * c - m - 1.0)


def sample_inverse_gaussian(mean, shape, rng: np.random.Generator, size=None):
    """Inverse-Gaussian draws by the Michael-Schucany-Haas transformation.

    A chi-square(1) variate is mapped to the smaller root of the quadratic,
    then the root or its reflection ``mean**2 / root`` is picked with the
    right probability.
    """
    if size is None and np.ndim(mean) == 0 and np.ndim(shape) == 0:
        return _inverse_gaussian_scalar(float(mean), float(shape), rng)
    _positive("mean", mean)
    _positive("shape", shape)
    mu = np.asarray(mean, dtype=float)
    lam = np.asarray(shape, dtype=float)
    if size is None:
        size = np.broadcast(mu, lam).shape
    nu = rng.standard_normal(size)
    u = rng.uniform(size=size)
    y = nu * nu
    a = mu * y
    s = np.sqrt(a * a + 4.0 * lam * a)
    # Same root as mu + mu*a/(2 lam) - mu*s/(2 lam), without the cancellation.
    with np.errstate(invalid="ignore", divide="ignore"):
        root = np.where(a > 0.0, 4.0 * mu * lam * a / (a + s) ** 2, mu)
    root = np.maximum(root, np.finfo(float).tiny)
    take_root = u <= mu / (mu + root)
    out = np.where(take_root, root, mu * mu / root)
    return float(out) if np.ndim(out) == 0 else out


def _inverse_gaussian_scalar(mu: float, lam: float, rng: np.random.Generator) -> float:
    # same draws and arithmetic as the array path, without per-call array overhead
    if not (mu > 0.0 and lam > 0.0):
        raise DomainError(f"mean and shape must be positive, got {mu}, {lam}")
    nu = rng.standard_normal()
    u = rng.uniform()
    a = mu * (nu * nu)
    d = a + math.sqrt(a * a + 4.0 * lam * a)
    root = 4.0 * mu * lam * a / (d * d) if a > 0.0 else mu
    root = max(root, np.finfo(float).tiny)
    return root if u <= mu / (mu + root) else mu * mu / root


def omega_conditional_params(residual, sigma, qc: QuantileConfig, floor: float = 1e-12):
    """Inverse-Gaussian parameters of ``1 / omega`` given a residual ``y - x'beta``.

    The full conditional kernel of the mixing variable is
    ``omega^-1/2 exp{-(r - lam omega)^2 / (2 delta sigma omega) - omega / sigma}``;
    completing the square gives ``1/omega ~ IG(mean=sqrt((lam^2 + 2 delta) / r^2),
    shape=(lam^2 + 2 delta) / (delta sigma))``. ``|r|`` is floored to keep the
    mean finite.
    """
    r = np.maximum(np.abs(np.asarray(residual, dtype=float)), floor)
    num = qc.lam * qc.lam + 2.0 * qc.delta
    return np.sqrt(num) / r, num / (qc.delta * sigma)


def sample_mvn(mean, cov, rng: np.random.Generator, size=None, tol: float = 1e-10):
    """Multivariate normal draw that tolerates singular (PSD) covariances.

    Uses a symmetric eigendecomposition; eigenvalues down to ``-tol`` times
    the largest one are clipped to zero, anything more negative is rejected.
    A zero covariance returns ``mean`` exactly.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    m = mean.shape[0]
    if cov.shape != (m, m):
        raise DomainError(f"covariance shape {cov.shape} does not match mean length {m}")
    scale = max(np.max(np.abs(cov)), 1.0)
    if not np.all(np.abs(cov - cov.T) <= tol * scale):
        raise DomainError("covariance must be symmetric")
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    if vals.min(initial=0.0) < -tol * scale:
        raise DomainError(f"covariance is indefinite (min eigenvalue {vals.min():.3g})")
    root = vecs * np.sqrt(np.clip(vals, 0.0, None))
    shape = (m,) if size is None else (*np.atleast_1d(size), m)
    z = rng.standard_normal(shape)
    return mean + z @ root.T
