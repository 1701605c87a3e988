"""Dynamic quantile model averaging over all subsets of the candidate regressors.

Every model keeps its own chain population. Model probabilities are carried
per chain (chain ``l`` of every model shares a weight column) and flattened
with a forgetting factor ``alpha`` plus a floor ``xi`` before each new
observation::

    pred(k) = (upd(k)^alpha + xi) / sum_j (upd(j)^alpha + xi)
    upd(k)  ∝ pred(k) * f_k(y_{t+1})

where ``f_k`` is the Gaussian one-step predictive density from the Kalman
filter, evaluated at the chain's jump-drawn ``omega_{t+1}``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.special import logsumexp

from .distributions import QuantileConfig
from .errors import ConfigError
from .gibbs import ChainState, PriorHyper, default_hyper
from .smcmc import ChainPopulation, ConvergenceConfig, init_population, step_time
from .ssm import kf_update

log = logging.getLogger(__name__)

DEFAULT_MAX_REGRESSORS = 16
LOG_2PI = np.log(2 * np.pi)


@dataclass(frozen=True)
class ModelSpec:
    """Subset of candidate regressors; the intercept is always in."""

    include_mask: tuple[bool, ...]

    @property
    def size(self) -> int:
        """Number of included candidate regressors (intercept not counted)."""
        return int(sum(self.include_mask))

    @property
    def columns(self) -> np.ndarray:
        """Design columns used by the model, intercept (column 0) first."""
        return np.array([0] + [j + 1 for j, b in enumerate(self.include_mask) if b], dtype=int)

    @property
    def dim(self) -> int:
        return self.size + 1

    def label(self) -> str:
        return "".join("1" if b else "0" for b in self.include_mask) or "const"


def enumerate_models(M: int, cap: int = DEFAULT_MAX_REGRESSORS) -> list[ModelSpec]:
    """All ``2^(M-1)`` specs over ``M - 1`` candidate regressors, in binary-counting order.

    ``M`` counts the intercept. Model ``k`` includes regressor ``j`` when bit
    ``j`` of ``k`` is set.
    """
    if M < 1:
        raise ConfigError(f"M must be >= 1, got {M}")
    n = M - 1
    if n > cap:
        raise ConfigError(f"{n} candidate regressors exceeds the cap of {cap}")
    return [ModelSpec(tuple(bool((k >> j) & 1) for j in range(n))) for k in range(2 ** n)]


def predict_weights(upd, alpha: float, xi: float) -> np.ndarray:
    """Forgetting-factor prediction step, applied down axis 0 (models)."""
    if not 0 < alpha <= 1 or xi < 0:
        raise ConfigError(f"need 0 < alpha <= 1 and xi >= 0, got {alpha}, {xi}")
    w = np.power(np.asarray(upd, dtype=float), alpha) + xi
    return w / w.sum(axis=0, keepdims=True)


def log_predictive_density(y: float, mean: float, var: float) -> float:
    return -0.5 * (LOG_2PI + np.log(var) + (y - mean) ** 2 / var)


def predictive_density(chain: ChainState, model: ModelSpec, new_obs, omega_next: float,
                       qc: QuantileConfig, kappa: float | None = None) -> float:
    """``N(y; lam*omega + x'b_{t+1|t}, delta*sigma*omega + x'P_{t+1|t}x)`` for one chain.

    ``new_obs = (y, x_full)``; the model picks its columns from ``x_full``.
    """
    y, x_full = new_obs
    x = np.asarray(x_full, dtype=float)[model.columns]
    pred = chain.predicted_next() if kappa is None else chain.predicted_next(kappa)
    step = kf_update(pred, x, float(y), omega_next, chain.sigma, qc)
    return float(np.exp(log_predictive_density(float(y), step.predictive_mean, step.predictive_variance)))


class ModelWeights(NamedTuple):
    pred: np.ndarray  # K x L
    upd: np.ndarray  # K x L
    pred_marginal: np.ndarray  # K

    @property
    def upd_marginal(self) -> np.ndarray:
        return self.upd.mean(axis=1)


def update_weights(pred, densities, log_scale: bool = False) -> ModelWeights:
    """Per-chain Bayes update of the predicted weights, normalised across models.

    With ``log_scale`` the second argument holds log densities, which avoids
    underflow when every model fits badly. A chain whose densities are all
    zero keeps its predicted weights.
    """
    pred = np.asarray(pred, dtype=float)
    dens = np.asarray(densities, dtype=float)
    if pred.shape != dens.shape:
        raise ConfigError(f"weight shape {pred.shape} does not match densities {dens.shape}")
    if pred.ndim == 1:
        out = update_weights(pred[:, None], dens[:, None], log_scale)
        return ModelWeights(out.pred[:, 0], out.upd[:, 0], out.pred_marginal)
    with np.errstate(divide="ignore"):
        logf = dens if log_scale else np.log(dens)
        logw = np.log(pred) + logf
    norm = logsumexp(logw, axis=0, keepdims=True)
    dead = ~np.isfinite(norm[0])
    if dead.any():
        log.warning("all predictive densities zero in %d chains; keeping predicted weights", int(dead.sum()))
        logw[:, dead] = 0.0
        norm[:, dead] = 0.0
    upd = np.exp(logw - norm)
    upd /= upd.sum(axis=0, keepdims=True)
    upd[:, dead] = pred[:, dead]
    return ModelWeights(pred, upd, pred.mean(axis=1))


def rao_blackwell_state_forecast(pop: ChainPopulation) -> np.ndarray:
    """Chain average of ``b_{t+1|t}``; under a random walk this is the filtered mean ``b_{t|t}``."""
    return np.mean([c.predicted_next(pop.hyper.kappa).mean for c in pop.chains], axis=0)


def combine_quantile_forecast(pred_marginal, per_model_forecasts) -> float:
    return float(np.dot(pred_marginal, per_model_forecasts))


def weight_variance(pred_rows) -> np.ndarray:
    pred_rows = np.asarray(pred_rows, dtype=float)
    if pred_rows.shape[1] < 2:
        raise ConfigError("weight variance needs at least two chains")
    return pred_rows.var(axis=1, ddof=1)


def expected_model_size(weights, model_sizes) -> float:
    return float(np.dot(weights, model_sizes))


def inclusion_probabilities(weights, models: Sequence[ModelSpec]) -> np.ndarray:
    """Marginal probability that each candidate regressor is in the model."""
    masks = np.array([m.include_mask for m in models], dtype=float).reshape(len(models), -1)
    return np.asarray(weights, dtype=float) @ masks


@dataclass(frozen=True)
class DMAConfig:
    alpha: float = 0.99
    xi: float | None = None  # None means 0.001 / K
    L: int = 20
    lag: int | None = None
    conv: ConvergenceConfig = field(default_factory=ConvergenceConfig)

    def xi_for(self, K: int) -> float:
        return 0.001 / K if self.xi is None else self.xi


class DMAStep(NamedTuple):
    """Forecast row for observation ``t`` (1-based), formed before ``y_t`` is seen."""

    t: int
    pred_marginal: np.ndarray
    forecasts: np.ndarray
    dma_forecast: float
    expected_size: float
    weight_var: np.ndarray
    realized: float


@dataclass
class DMAResult:
    models: list[ModelSpec]
    steps: list[DMAStep]
    weights: ModelWeights
    populations: list[ChainPopulation]

    @property
    def terminal_inclusion(self) -> np.ndarray:
        return inclusion_probabilities(self.weights.upd_marginal, self.models)

    @property
    def terminal_expected_size(self) -> float:
        return expected_model_size(self.weights.upd_marginal, [m.size for m in self.models])


def run_dqma(y, X, qc: QuantileConfig, config: DMAConfig = DMAConfig(), seed=0,
             models: Sequence[ModelSpec] | None = None,
             hyper_for: Callable[[int], PriorHyper] = default_hyper,
             workers: int | None = None,
             on_step: Callable[[DMAStep], None] | None = None) -> DMAResult:
    """Sequential DQMA over ``(y, X)``; ``X`` carries the intercept in column 0.

    At each ``t`` the forecast row is emitted first, then every model's
    population jumps and sweeps on ``y_t`` and the per-chain weights are updated
    from the jump's predictive densities.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ConfigError(f"design shape {X.shape} does not match {y.shape[0]} observations")
    models = list(models) if models is not None else enumerate_models(X.shape[1])
    K, L = len(models), config.L
    xi = config.xi_for(K)
    sizes = np.array([m.size for m in models])
    children = (seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)).spawn(K)
    pops = [
        init_population(L, m.dim, hyper_for(m.dim), qc, ss, columns=m.columns, lag=config.lag)
        for m, ss in zip(models, children)
    ]
    upd = np.full((K, L), 1.0 / K)
    weights = ModelWeights(upd, upd, upd.mean(axis=1))
    steps: list[DMAStep] = []
    for s in range(y.shape[0]):
        x = X[s]
        pred = predict_weights(upd, config.alpha, xi)
        pm = pred.mean(axis=1)
        fc = np.array([x[m.columns] @ rao_blackwell_state_forecast(p) for m, p in zip(models, pops)])
        row = DMAStep(s + 1, pm, fc, combine_quantile_forecast(pm, fc), expected_model_size(pm, sizes),
                      weight_variance(pred), float(y[s]))
        steps.append(row)
        if on_step is not None:
            on_step(row)
        logf = np.empty((K, L))
        for k, p in enumerate(pops):
            step_time(p, (y[s], x), config.conv, workers)
            logf[k] = [log_predictive_density(y[s], j.predictive_mean, j.predictive_variance) for j in p.last_jump]
        weights = update_weights(pred, logf, log_scale=True)
        upd = weights.upd
    return DMAResult(models, steps, weights, pops)
