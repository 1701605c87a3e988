"""Synthetic time-varying regressions with known quantile-coefficient paths.

Both generators produce ``y_t = x_t' beta*_t + eps_t`` with
``eps_t ~ N(0, nu_t^2)``, an intercept plus two uniform regressors on
``(-T/2, T/2)``. The tau-quantile coefficients differ from ``beta*`` only in
the intercept, which shifts by ``nu_t * Phi^{-1}(tau)``.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from .errors import ConfigError

N_REGRESSORS = 2
BREAK = 100  # last index of the first regime (1-based time)


class DGPOutput(NamedTuple):
    y: np.ndarray
    x: np.ndarray  # (T, 3), column 0 is the intercept
    beta_star: np.ndarray  # (T, 3)
    nu2: np.ndarray

    @property
    def T(self) -> int:
        return self.y.shape[0]


def _check_T(T):
    if int(T) != T or T < 2:
        raise ConfigError(f"T must be an integer >= 2, got {T}")
    return int(T)


def _design(T, rng):
    x = rng.uniform(-T / 2, T / 2, size=(T, N_REGRESSORS))
    return np.column_stack([np.ones(T), x])


def smooth_betas(T: int, a=0.2, b=2.0, c=5.0) -> np.ndarray:
    """Constant intercept, slope kink at t=100 and a logistic level shift in the third coefficient."""
    t = np.arange(1, T + 1, dtype=float)
    b1 = np.full(T, 2.0)
    b2 = np.where(t <= BREAK, 0.6 - 0.4 * t / 100, -0.2 + 0.4 * t / 100)
    b3 = a + b / (1 + np.exp(c * (2 * t - T - 2) / T))
    return np.column_stack([b1, b2, b3])


def simulate_smooth(T: int = 200, seed=None) -> DGPOutput:
    T = _check_T(T)
    rng = np.random.default_rng(seed)
    x = _design(T, rng)
    beta = smooth_betas(T)
    nu2 = np.where(np.arange(1, T + 1) <= BREAK, 1.0, 0.25)
    eps = rng.standard_normal(T) * np.sqrt(nu2)
    return DGPOutput(np.einsum("ij,ij->i", x, beta) + eps, x, beta, nu2)


def abrupt_betas(T: int) -> np.ndarray:
    t = np.arange(1, T + 1)
    early = t <= BREAK
    return np.column_stack([np.where(early, -2.0, 2.0), np.where(early, 1.6, 0.8), np.full(T, 2.0)])


def simulate_abrupt(T: int = 200, seed=None, a=0.05, b=0.9, c=0.05) -> DGPOutput:
    """Level and slope breaks at t=101 with GARCH(1,1) noise started at its unconditional variance."""
    T = _check_T(T)
    if b + c >= 1:
        raise ConfigError("GARCH parameters must satisfy b + c < 1")
    rng = np.random.default_rng(seed)
    x = _design(T, rng)
    beta = abrupt_betas(T)
    nu2 = np.empty(T)
    eps = np.empty(T)
    prev_nu2 = a / (1 - b - c)
    prev_eps = rng.standard_normal() * np.sqrt(prev_nu2)
    z = rng.standard_normal(T)
    for s in range(T):
        nu2[s] = a + b * prev_nu2 + c * prev_eps ** 2
        eps[s] = z[s] * np.sqrt(nu2[s])
        prev_nu2, prev_eps = nu2[s], eps[s]
    return DGPOutput(np.einsum("ij,ij->i", x, beta) + eps, x, beta, nu2)


def true_quantile_path(out: DGPOutput, tau: float) -> np.ndarray:
    if not 0 < tau < 1:
        raise ConfigError(f"tau must lie in (0, 1), got {tau}")
    q = out.beta_star.copy()
    q[:, 0] += np.sqrt(out.nu2) * norm.ppf(tau)
    return q


def write_csv(out: DGPOutput, path, truth_path=None) -> tuple[Path, Path]:
    """Write ``y, x1, x2`` (no intercept column) and a truth sidecar with ``beta*`` and ``nu2``."""
    path = Path(path)
    truth_path = Path(truth_path) if truth_path else path.with_name(path.stem + "_truth.csv")
    names = [f"x{j}" for j in range(1, out.x.shape[1])]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["y", *names])
        for yi, xi in zip(out.y, out.x[:, 1:]):
            w.writerow([repr(float(yi)), *(repr(float(v)) for v in xi)])
    with truth_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *(f"beta_star_{j}" for j in range(out.x.shape[1])), "nu2"])
        for s in range(out.T):
            w.writerow([s + 1, *(repr(float(v)) for v in out.beta_star[s]), repr(float(out.nu2[s]))])
    return path, truth_path


def read_truth(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of the sidecar written by :func:`write_csv`: returns (beta_star, nu2)."""
    arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return arr[:, 1:-1], arr[:, -1]
