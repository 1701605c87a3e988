"""Full-conditional draws for one chain of the sequential sampler.

A chain at time ``t`` carries ``theta_t = (sigma, Omega, omega_{1:t}, beta_{1:t})``.
Two kernels act on it:

* :func:`transition_sweep` keeps ``t`` fixed and performs the partially
  collapsed Gibbs sweep sigma -> omega -> beta -> Omega. sigma is drawn with
  the omegas integrated out, which is why it must come first.
* :func:`jump_extend` appends ``(omega_{t+1}, beta_{t+1})`` for a new
  observation and leaves the existing prefix untouched.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .distributions import (
    QuantileConfig,
    omega_conditional_params,
    pinball_loss,
    sample_exponential,
    sample_inverse_gamma,
    sample_inverse_gaussian,
    sample_inverse_wishart,
    sample_mvn,
)
from .errors import ConfigError
from .ssm import DEFAULT_KAPPA, FilterPath, GaussState, diffuse_state, kf_predict, kf_update, run_filter
from . import _kernels

log = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-12


class Observations(NamedTuple):
    """Response and design seen so far; ``X`` has the intercept in column 0."""

    y: np.ndarray
    X: np.ndarray


@dataclass(frozen=True)
class PriorHyper:
    a0: float
    b0: float
    c0: float
    C0: np.ndarray
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        if min(self.a0, self.b0, self.c0, self.kappa) <= 0:
            raise ConfigError("prior hyperparameters must be positive")
        C0 = np.asarray(self.C0, dtype=float)
        if not np.allclose(C0, C0.T) or np.linalg.eigvalsh(C0).min() <= 0:
            raise ConfigError("C0 must be symmetric positive definite")

    @property
    def m(self) -> int:
        return np.asarray(self.C0).shape[0]


def default_hyper(m: int, a0=2.5, b0=1.0, c0=None, C0_scale=0.01, kappa=DEFAULT_KAPPA) -> PriorHyper:
    """Defaults used throughout: ``c0 = m + 2`` and ``C0 = 0.01 I`` unless overridden."""
    return PriorHyper(a0, b0, float(m + 2) if c0 is None else float(c0), C0_scale * np.eye(m), kappa)


@dataclass
class ChainState:
    sigma: float
    Omega: np.ndarray
    omegas: np.ndarray
    betas: np.ndarray
    filter_cache: FilterPath | None = field(default=None, repr=False)

    @property
    def t(self) -> int:
        return self.omegas.shape[0]

    @property
    def m(self) -> int:
        return self.Omega.shape[0]

    def predicted_next(self, kappa: float = DEFAULT_KAPPA) -> GaussState:
        """``(beta_{t+1|t}, P_{t+1|t})`` from the cached filter; the prior before any data."""
        if self.t == 0:
            return diffuse_state(self.m, kappa)
        return kf_predict(self.filter_cache.last, self.Omega)


def init_chain(m: int, hyper: PriorHyper, rng: np.random.Generator) -> ChainState:
    """Draw ``(sigma, Omega)`` from the prior; the chain starts empty at ``t = 0``."""
    sigma = float(sample_inverse_gamma(hyper.a0, hyper.b0, rng))
    Omega = sample_inverse_wishart(hyper.c0, hyper.C0, rng)
    return ChainState(sigma, Omega, np.empty(0), np.empty((0, m)))


def residuals(chain: ChainState, data: Observations) -> np.ndarray:
    t = chain.t
    return data.y[:t] - np.einsum("ij,ij->i", data.X[:t], chain.betas)


def sigma_conditional_params(chain, data, qc: QuantileConfig, hyper: PriorHyper):
    """IG shape and scale of sigma given beta with the omegas integrated out."""
    return hyper.a0 + chain.t, hyper.b0 + float(np.sum(pinball_loss(residuals(chain, data), qc.tau)))


def draw_sigma_collapsed(chain, data, qc, hyper, rng) -> float:
    a, b = sigma_conditional_params(chain, data, qc, hyper)
    return float(sample_inverse_gamma(a, b, rng))


def draw_omegas(chain, data, qc, rng, start: int = 0) -> np.ndarray:
    """Redraw ``omega_s`` for ``s >= start``; ``1/omega_s`` is inverse Gaussian given the residual."""
    r = residuals(chain, data)[start:]
    n_floor = int(np.sum(np.abs(r) < RESIDUAL_FLOOR))
    if n_floor:
        log.info("floored %d zero residuals in omega draw", n_floor)
    mean, shape = omega_conditional_params(r, chain.sigma, qc, RESIDUAL_FLOOR)
    out = chain.omegas.copy()
    out[start:] = 1.0 / sample_inverse_gaussian(mean, shape, rng, size=r.shape)
    return out


def _window_prior(chain: ChainState, start: int, kappa: float) -> GaussState:
    """Predicted state of the first observation in a window starting at ``start``."""
    if start == 0:
        # beta_1 ~ N(0, kappa I), matching the complete-data likelihood
        return diffuse_state(chain.m, kappa)
    # conditional on the frozen state just before the window
    return GaussState(chain.betas[start - 1].copy(), chain.Omega.copy())


def filter_chain(chain, data, qc, hyper, start: int = 0) -> FilterPath:
    """Kalman pass over ``s = start..t-1`` under the chain's current parameters."""
    t = chain.t
    om = chain.omegas[start:t]
    return run_filter(
        data.y[start:t], data.X[start:t], qc.lam * om, qc.delta * chain.sigma * om,
        chain.Omega, _window_prior(chain, start, hyper.kappa), start=start, init_is_predicted=True,
    )


def draw_beta_path(chain, data, qc, hyper, rng, start: int = 0):
    """Multi-move draw of ``beta_{start+1:t}`` by FFBS; returns (betas, filter path)."""
    fp = filter_chain(chain, data, qc, hyper, start)
    z = rng.standard_normal(fp.filt_mean.shape)
    draws, nj = _kernels.backward_sample(fp.filt_mean, fp.filt_cov, fp.pred_cov, z)
    if nj:
        log.info("jitter added to %d smoother gains", nj)
    betas = chain.betas.copy()
    betas[start:] = draws
    return betas, fp


def Omega_conditional_params(chain, hyper: PriorHyper):
    d = np.diff(chain.betas, axis=0)
    return hyper.c0 + 0.5 * (chain.t - 1), hyper.C0 + 0.5 * d.T @ d


def draw_Omega(chain, hyper, rng) -> np.ndarray:
    """Inverse Wishart given the increments; with ``t < 2`` this is a prior draw."""
    if chain.t < 2:
        return sample_inverse_wishart(hyper.c0, hyper.C0, rng)
    c, C = Omega_conditional_params(chain, hyper)
    return sample_inverse_wishart(c, C, rng)


def transition_sweep(chain, data, qc, hyper, rng, lag: int | None = None) -> ChainState:
    """One sweep sigma -> omega -> beta -> Omega at fixed ``t``.

    With ``lag = h`` only ``omega`` and ``beta`` at indices ``t-h..t`` are
    refreshed; the beta block is then drawn conditionally on the frozen
    ``beta_{t-h-1}``, which is still an exact Gibbs step.
    """
    if chain.t == 0:
        return chain
    start = 0 if lag is None else max(0, chain.t - 1 - lag)
    sigma = draw_sigma_collapsed(chain, data, qc, hyper, rng)
    chain = replace(chain, sigma=sigma)
    chain = replace(chain, omegas=draw_omegas(chain, data, qc, rng, start))
    betas, fp = draw_beta_path(chain, data, qc, hyper, rng, start)
    chain = replace(chain, betas=betas, filter_cache=fp)
    return replace(chain, Omega=draw_Omega(chain, hyper, rng))


def refresh_filter(chain, data, qc, hyper, lag: int | None = None) -> ChainState:
    """Recompute the cached filter so it matches the chain's current ``(sigma, Omega, omega)``."""
    if chain.t == 0:
        return chain
    start = 0 if lag is None else max(0, chain.t - 1 - lag)
    return replace(chain, filter_cache=filter_chain(chain, data, qc, hyper, start))


def _append_step(fp: FilterPath | None, step, y, x, offset) -> FilterPath:
    row = lambda a, v: np.concatenate([a, np.asarray(v)[None]]) if a is not None else np.asarray(v)[None]
    if fp is None:
        fp = FilterPath(*(None,) * 9, start=0)
    return FilterPath(
        row(fp.y, y), row(fp.X, x), row(fp.offset, offset),
        row(fp.pred_mean, step.predicted.mean), row(fp.pred_cov, step.predicted.cov),
        row(fp.filt_mean, step.filtered.mean), row(fp.filt_cov, step.filtered.cov),
        row(fp.innovation, step.innovation), row(fp.innovation_var, step.predictive_variance),
        start=fp.start,
    )


def jump_extend(chain, new_obs, qc, hyper, rng):
    """Extend the chain by one observation ``(y, x)``; returns (chain, Kalman step).

    ``omega_{t+1}`` is drawn from its full conditional at the residual against
    the one-step predicted coefficients (from the ``Exp(1/sigma)`` prior when
    ``t = 0``), then ``beta_{t+1} ~ N(b_{t+1|t+1}, P_{t+1|t+1})`` from one
    predict/update. The returned step carries the predictive mean and variance
    of ``y_{t+1}`` given the drawn ``omega_{t+1}``.
    """
    y, x = float(new_obs[0]), np.asarray(new_obs[1], dtype=float)
    pred = chain.predicted_next(hyper.kappa)
    if chain.t == 0:
        omega = float(sample_exponential(1.0 / chain.sigma, rng))
    else:
        mean, shape = omega_conditional_params(y - x @ pred.mean, chain.sigma, qc, RESIDUAL_FLOOR)
        omega = 1.0 / float(sample_inverse_gaussian(mean, shape, rng))
    step = kf_update(pred, x, y, omega, chain.sigma, qc)
    beta = sample_mvn(step.filtered.mean, step.filtered.cov, rng)
    new = ChainState(
        chain.sigma,
        chain.Omega,
        np.append(chain.omegas, omega),
        np.vstack([chain.betas, beta]),
        _append_step(chain.filter_cache, step, y, x, qc.lam * omega),
    )
    return new, step
