"""End-to-end runs over a loaded series, scoring, and result files."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .config import RunConfig
from .data import SeriesData
from .distributions import make_quantile_config, pinball_loss
from .dma import DMAResult, enumerate_models, rao_blackwell_state_forecast, run_dqma
from .errors import DomainError
from .smcmc import init_population, posterior_summary, step_time

log = logging.getLogger(__name__)


@dataclass
class FitResult:
    """Posterior of one model at one quantile level after the last observation."""

    tau: float
    column_names: tuple[str, ...]
    median: np.ndarray  # (T, m) cross-chain medians of beta_t given y_{1:T}
    lo: np.ndarray
    hi: np.ndarray
    forecast: np.ndarray  # x_t' E[beta_t | y_{1:t-1}], formed before y_t
    realized: np.ndarray
    m_history: list[int]
    sigma: tuple[float, float, float]  # median, HPD low, HPD high


def _seed_for_model(config: RunConfig, k: int, K: int) -> np.random.SeedSequence:
    # matches run_dqma's per-model streams, so a one-model average reproduces a fit
    return np.random.SeedSequence(config.seed).spawn(K)[k]


def run_fit(data: SeriesData, config: RunConfig, columns=None) -> dict[float, FitResult]:
    """Run the sequential sampler on one model (all columns by default) for every tau in the config."""
    cols = np.arange(data.M) if columns is None else np.asarray(columns, dtype=int)
    if cols[0] != 0:
        raise DomainError("the intercept (column 0) must be part of every model")
    m = cols.size
    out = {}
    for tau in config.tau:
        qc = make_quantile_config(tau)
        pop = init_population(config.L, m, config.hyper(m), qc, _seed_for_model(config, 0, 1),
                              columns=cols, lag=config.lag)
        fc = np.empty(data.T)
        for s in range(data.T):
            fc[s] = data.X[s, cols] @ rao_blackwell_state_forecast(pop)
            step_time(pop, (data.y[s], data.X[s]), config.conv, config.workers)
        summ = [posterior_summary(pop, "beta", j) for j in range(m)]
        sig = posterior_summary(pop, "sigma")
        out[tau] = FitResult(
            tau,
            tuple(data.column_names[j] for j in cols),
            np.column_stack([s[0] for s in summ]),
            np.column_stack([s[1] for s in summ]),
            np.column_stack([s[2] for s in summ]),
            fc,
            data.y.copy(),
            list(pop.m_history),
            (float(sig[0][0]), float(sig[1][0]), float(sig[2][0])),
        )
        log.info("fit done", extra={"tau": tau, "mean_m_t": float(np.mean(pop.m_history))})
    return out


def run_dma(data: SeriesData, config: RunConfig) -> dict[float, DMAResult]:
    models = enumerate_models(data.M, cap=config.max_regressors)
    out = {}
    for tau in config.tau:
        out[tau] = run_dqma(
            data.y, data.X, make_quantile_config(tau), config.dma_config(), seed=config.seed,
            models=models, hyper_for=config.hyper, workers=config.workers,
        )
        log.info("dma done", extra={"tau": tau, "terminal_size": out[tau].terminal_expected_size})
    return out


class Score(NamedTuple):
    pinball: float
    coverage: float | None


def score_forecasts(forecasts, realized, tau: float, lo=None, hi=None, truth=None) -> Score:
    """Mean pinball loss of the forecasts and, when bands are given, the share of ``truth`` inside them."""
    f = np.asarray(forecasts, dtype=float)
    r = np.asarray(realized, dtype=float)
    if f.shape != r.shape:
        raise DomainError(f"forecasts {f.shape} and realized {r.shape} differ in length")
    loss = float(np.mean(pinball_loss(r - f, tau)))
    cov = None
    if lo is not None or hi is not None or truth is not None:
        if lo is None or hi is None or truth is None:
            raise DomainError("coverage needs lo, hi and truth together")
        lo, hi, truth = (np.asarray(a, dtype=float) for a in (lo, hi, truth))
        if not (lo.shape == hi.shape == truth.shape):
            raise DomainError("band and truth shapes differ")
        cov = float(np.mean((truth >= lo) & (truth <= hi)))
    return Score(loss, cov)


def _header(fh, config: RunConfig, tau: float):
    fh.write(f"# dqma config_hash={config.hash()} seed={config.seed} tau={tau!r}\n")


def _fmt(v) -> str:
    return repr(float(v))


def write_fit_csv(res: FitResult, path, config: RunConfig) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        _header(fh, config, res.tau)
        w = csv.writer(fh)
        head = ["t"]
        for name in res.column_names:
            head += [f"{name}_median", f"{name}_lo", f"{name}_hi"]
        w.writerow(head + ["forecast", "realized", "m_t"])
        for s in range(res.median.shape[0]):
            row = [s + 1]
            for j in range(res.median.shape[1]):
                row += [_fmt(res.median[s, j]), _fmt(res.lo[s, j]), _fmt(res.hi[s, j])]
            w.writerow(row + [_fmt(res.forecast[s]), _fmt(res.realized[s]), res.m_history[s]])
    return path


def write_dma_csv(res: DMAResult, path, config: RunConfig, tau: float) -> Path:
    path = Path(path)
    labels = [m.label() for m in res.models]
    with path.open("w", newline="") as fh:
        _header(fh, config, tau)
        w = csv.writer(fh)
        w.writerow(["t", *(f"pi_{l}" for l in labels), *(f"fc_{l}" for l in labels),
                    "dma_forecast", "expected_size", *(f"wvar_{l}" for l in labels), "realized"])
        for r in res.steps:
            w.writerow([r.t, *map(_fmt, r.pred_marginal), *map(_fmt, r.forecasts), _fmt(r.dma_forecast),
                        _fmt(r.expected_size), *map(_fmt, r.weight_var), _fmt(r.realized)])
    return path


def dma_summary(res: DMAResult, config: RunConfig, tau: float, column_names) -> dict:
    return {
        "config_hash": config.hash(),
        "seed": config.seed,
        "tau": tau,
        "models": [m.label() for m in res.models],
        "terminal_weights": res.weights.upd_marginal.tolist(),
        "terminal_inclusion": dict(zip(column_names[1:], res.terminal_inclusion.tolist())),
        "terminal_expected_size": res.terminal_expected_size,
        "mean_pinball": score_forecasts([r.dma_forecast for r in res.steps], [r.realized for r in res.steps], tau).pinball,
    }


def write_json(obj, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def tau_tag(tau: float) -> str:
    return f"tau{tau:g}"
