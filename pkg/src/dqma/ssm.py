"""Kalman recursions for the conditionally Gaussian random-walk regression.

Given the mixing variables ``omega_s`` the quantile regression becomes::

    y_s    = x_s' beta_s + lam * omega_s + e_s,   e_s ~ N(0, delta * sigma * omega_s)
    beta_s = beta_{s-1} + zeta_s,                  zeta_s ~ N(0, Omega)

Time index ``s`` runs 1..t in the docs and 0..t-1 in arrays. ``S_s`` below is
the innovation *variance* ``delta sigma omega_s + x_s' P_{s|s-1} x_s`` and
``V_s = 1 / S_s`` its precision.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .distributions import QuantileConfig
from .errors import DomainError, NumericalError

log = logging.getLogger(__name__)

DEFAULT_KAPPA = 1e6


class GaussState(NamedTuple):
    mean: np.ndarray
    cov: np.ndarray


class KalmanStepResult(NamedTuple):
    predicted: GaussState
    filtered: GaussState
    innovation: float
    innovation_precision: float
    predictive_mean: float
    predictive_variance: float


def diffuse_state(m: int, kappa: float = DEFAULT_KAPPA) -> GaussState:
    """``beta_{0|0} = 0``, ``P_{0|0} = kappa I``; a finite stand-in for the diffuse prior."""
    return GaussState(np.zeros(m), kappa * np.eye(m))


def kf_predict(prev_filtered: GaussState, Omega) -> GaussState:
    mean, P = prev_filtered
    Omega = np.asarray(Omega, dtype=float)
    if Omega.shape != P.shape:
        raise DomainError(f"Omega shape {Omega.shape} does not match state covariance {P.shape}")
    P_pred = P + Omega
    return GaussState(np.array(mean, dtype=float), 0.5 * (P_pred + P_pred.T))


def kf_update_general(pred: GaussState, x, y: float, offset: float, obs_var: float) -> KalmanStepResult:
    """Measurement update for ``y = x' beta + offset + e``, ``Var(e) = obs_var``."""
    b, P = pred
    x = np.asarray(x, dtype=float)
    if x.shape != b.shape:
        raise DomainError(f"regressor length {x.shape} does not match state {b.shape}")
    Px = P @ x
    S = obs_var + x @ Px
    if not (np.isfinite(S) and S > 0.0):
        raise NumericalError(f"non-positive innovation variance {S}")
    yhat = offset + x @ b
    nu = y - yhat
    P_f = P - np.outer(Px, Px) / S
    filtered = GaussState(b + Px * (nu / S), 0.5 * (P_f + P_f.T))
    return KalmanStepResult(pred, filtered, float(nu), 1.0 / S, float(yhat), float(S))


def kf_update(pred: GaussState, x, y: float, omega: float, sigma: float, qc: QuantileConfig) -> KalmanStepResult:
    """Measurement update with the ALD mixture noise: offset ``lam*omega``, variance ``delta*sigma*omega``."""
    if not (omega > 0.0 and sigma > 0.0):
        raise DomainError("omega and sigma must be positive")
    return kf_update_general(pred, x, y, qc.lam * omega, qc.delta * sigma * omega)


@dataclass
class FilterPath:
    """Array-backed filter output; indexing yields :class:`KalmanStepResult`.

    ``start`` is the absolute (0-based) time index of the first row, so a
    window pass over ``s = start..start+len-1`` is stored like a full pass.
    """

    y: np.ndarray
    X: np.ndarray
    offset: np.ndarray
    pred_mean: np.ndarray
    pred_cov: np.ndarray
    filt_mean: np.ndarray
    filt_cov: np.ndarray
    innovation: np.ndarray
    innovation_var: np.ndarray
    start: int = 0

    def __len__(self):
        return self.filt_mean.shape[0]

    def __getitem__(self, i) -> KalmanStepResult:
        i = range(len(self))[i]
        S = float(self.innovation_var[i])
        nu = float(self.innovation[i])
        return KalmanStepResult(
            GaussState(self.pred_mean[i], self.pred_cov[i]),
            GaussState(self.filt_mean[i], self.filt_cov[i]),
            nu,
            1.0 / S,
            float(self.y[i]) - nu,
            S,
        )

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def last(self) -> GaussState:
        return GaussState(self.filt_mean[-1], self.filt_cov[-1])


def run_filter(y, X, offset, obs_var, Omega, init: GaussState, start: int = 0,
               init_is_predicted: bool = False) -> FilterPath:
    """Forward Kalman pass over a block of observations.

    ``init`` is ``(beta_{0|0}, P_{0|0})`` by default, or the one-step
    predicted state of the first observation when ``init_is_predicted``.
    """
    y = np.ascontiguousarray(y, dtype=float)
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    offset = np.ascontiguousarray(offset, dtype=float)
    obs_var = np.ascontiguousarray(obs_var, dtype=float)
    if np.any(obs_var <= 0.0):
        raise DomainError("observation variances must be positive")
    out = _kernels.filter_arrays(
        y, X, offset, obs_var,
        np.ascontiguousarray(Omega, dtype=float),
        np.ascontiguousarray(init.mean, dtype=float),
        np.ascontiguousarray(init.cov, dtype=float),
        init_is_predicted,
    )
    S = out[5]
    if not np.all(np.isfinite(S)) or np.any(S <= 0.0):
        raise NumericalError("non-positive innovation variance in filter")
    return FilterPath(y, X, offset, *out, start=start)


def kalman_filter(y, X, omegas, sigma, Omega, qc: QuantileConfig, init: GaussState | None = None) -> FilterPath:
    """Filter ``y_{1:t}`` for fixed ``(sigma, Omega, omega_{1:t})``."""
    X = np.atleast_2d(X)
    if init is None:
        init = diffuse_state(X.shape[1])
    omegas = np.asarray(omegas, dtype=float)
    return run_filter(y, X, qc.lam * omegas, qc.delta * sigma * omegas, Omega, init)


def _log_jitter(n, where):
    if n:
        log.info("singular predicted covariance in %s; added %.0e*I jitter at %d steps", where, _kernels.JITTER, n)


def smooth_fixed_interval(filter_path: FilterPath, Omega=None) -> list[GaussState]:
    """Backward pass ``b_{s|t} = b_{s|s} + G_s (b_{s+1|t} - b_{s+1|s})`` with
    ``G_s = P_{s|s} P_{s+1|s}^-1`` and ``P_{s|t} = P_{s|s} + G_s (P_{s+1|t} - P_{s+1|s}) G_s'``.

    ``Omega`` is accepted for interface symmetry; the predicted covariances
    stored in the path already include it.
    """
    if len(filter_path) == 0:
        raise DomainError("empty filter path")
    sm, sc, nj = _kernels.smooth_arrays(
        filter_path.filt_mean, filter_path.filt_cov, filter_path.pred_mean, filter_path.pred_cov
    )
    _log_jitter(nj, "smoother")
    return [GaussState(sm[i], sc[i]) for i in range(len(filter_path))]


def draw_state_path(filter_path: FilterPath, Omega, rng: np.random.Generator) -> np.ndarray:
    """Joint draw of ``beta_{1:t}`` by forward-filtering backward-sampling; shape (t, m)."""
    if len(filter_path) == 0:
        raise DomainError("empty filter path")
    z = rng.standard_normal(filter_path.filt_mean.shape)
    draws, nj = _kernels.backward_sample(filter_path.filt_mean, filter_path.filt_cov, filter_path.pred_cov, z)
    _log_jitter(nj, "backward sampler")
    return draws


def smooth_fixed_lag(filter_path: FilterPath, Omega, h: int) -> GaussState:
    """Moments of ``beta_{t-h}`` given ``y_{1:t}`` by the augmented-state recursion.

    Starting from the filtered state at ``t-h``, each later observation ``s``
    updates the lagged state through its cross-covariance with the current
    one, ``C_s = Cov(beta_{t-h}, beta_s | y_{1:s-1})``::

        b    <- b + C_s x_s nu_s / S_s
        P    <- P - C_s x_s x_s' C_s' / S_s
        C_s+1 = C_s (I - x_s x_s' P_{s|s-1} / S_s)

    ``C`` starts at ``P_{t-h|t-h}``; under a random walk the cross-covariance
    is unchanged by the prediction step.
    """
    t = len(filter_path)
    if not 0 <= h <= t - 1:
        raise DomainError(f"lag h={h} out of range for a path of length {t}")
    j = t - 1 - h
    b = filter_path.filt_mean[j].copy()
    P = filter_path.filt_cov[j].copy()
    C = P.copy()
    m = b.shape[0]
    for s in range(j + 1, t):
        x = filter_path.X[s]
        S = filter_path.innovation_var[s]
        Cx = C @ x
        b = b + Cx * (filter_path.innovation[s] / S)
        P = P - np.outer(Cx, Cx) / S
        P = 0.5 * (P + P.T)
        C = C @ (np.eye(m) - np.outer(x, x) @ filter_path.pred_cov[s] / S)
    return GaussState(b, P)

