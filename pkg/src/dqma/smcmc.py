"""Population of parallel inhomogeneous chains advanced one observation at a time.

Each time step applies the jumping kernel to every chain and then repeats the
transition sweep until the cross-chain lag correlation of a monitored set of
coordinates drops to ``1 - epsilon`` (or ``m_max`` sweeps have run).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distributions import QuantileConfig
from .errors import ConfigError, DomainError
from .gibbs import (
    ChainState,
    Observations,
    PriorHyper,
    init_chain,
    jump_extend,
    refresh_filter,
    transition_sweep,
)
from .ssm import KalmanStepResult

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConvergenceConfig:
    epsilon: float = 0.05
    m_min: int = 2
    m_max: int = 50

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.m_min < 1 or self.m_max < self.m_min:
            raise ConfigError(f"need 1 <= m_min <= m_max, got {self.m_min}, {self.m_max}")

    def check_points(self) -> list[int]:
        """Sweep counts at which the rate is evaluated: m_min, then powers of two, then m_max."""
        pts = {self.m_min, self.m_max}
        p = 1
        while p < self.m_max:
            if p > self.m_min:
                pts.add(p)
            p *= 2
        return sorted(pts)


class _Buffer:
    """Growable (y, X) store so each step appends in amortised O(1)."""

    def __init__(self, m: int, capacity: int = 64):
        self.y = np.empty(capacity)
        self.X = np.empty((capacity, m))
        self.n = 0

    def append(self, y: float, x: np.ndarray):
        if self.n == self.y.shape[0]:
            self.y = np.concatenate([self.y, np.empty_like(self.y)])
            self.X = np.concatenate([self.X, np.empty_like(self.X)])
        self.y[self.n] = y
        self.X[self.n] = x
        self.n += 1

    def view(self) -> Observations:
        return Observations(self.y[: self.n], self.X[: self.n])


@dataclass
class ChainPopulation:
    """L chains for one model, with their own RNG streams and the data seen so far.

    ``columns`` selects the model's regressors from the full design row
    passed to :func:`step_time`; ``None`` keeps every column.
    """

    chains: list[ChainState]
    rngs: list[np.random.Generator]
    qc: QuantileConfig
    hyper: PriorHyper
    columns: np.ndarray | None = None
    lag: int | None = None
    m_history: list[int] = field(default_factory=list)
    rate_history: list[list[tuple[int, float]]] = field(default_factory=list)
    last_jump: list[KalmanStepResult] = field(default_factory=list)
    _data: _Buffer | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.chains) < 2:
            raise ConfigError("a population needs at least two chains")
        if self._data is None:
            self._data = _Buffer(self.m)

    @property
    def L(self) -> int:
        return len(self.chains)

    @property
    def t(self) -> int:
        return self.chains[0].t

    @property
    def m(self) -> int:
        return self.chains[0].m

    @property
    def data(self) -> Observations:
        return self._data.view()

    def select(self, x_full) -> np.ndarray:
        x_full = np.asarray(x_full, dtype=float)
        return x_full if self.columns is None else x_full[self.columns]


def init_population(L: int, m: int, hyper: PriorHyper, qc: QuantileConfig, seed,
                    columns=None, lag: int | None = None) -> ChainPopulation:
    """``L`` chains drawn from the prior, each with an independent child RNG of ``seed``."""
    if L < 2:
        raise ConfigError("a population needs at least two chains")
    if lag is not None and lag < 0:
        raise ConfigError("lag must be non-negative")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(s) for s in ss.spawn(L)]
    chains = [init_chain(m, hyper, r) for r in rngs]
    cols = None if columns is None else np.asarray(columns, dtype=int)
    return ChainPopulation(chains, rngs, qc, hyper, cols, lag)


def monitored_coordinates(chain: ChainState) -> np.ndarray:
    """(sigma, vech(Omega), beta_t, omega_t) as one vector."""
    iu = np.triu_indices(chain.m)
    return np.concatenate([[chain.sigma], chain.Omega[iu], chain.betas[-1], chain.omegas[-1:]])


def estimate_rate(first: np.ndarray, later: np.ndarray) -> float:
    """Largest cross-chain correlation between two snapshots, each of shape (L, p).

    Coordinates with zero variance in either snapshot are skipped; if all are
    skipped the rate is 0.
    """
    a = np.asarray(first, dtype=float)
    b = np.asarray(later, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ConfigError(f"snapshots must share an (L, p) shape, got {a.shape} and {b.shape}")
    a = a - a.mean(0)
    b = b - b.mean(0)
    va, vb = (a * a).sum(0), (b * b).sum(0)
    ok = (va > 0) & (vb > 0)
    if not ok.all():
        log.debug("rate: skipped %d zero-variance coordinates", int((~ok).sum()))
    if not ok.any():
        return 0.0
    r = (a[:, ok] * b[:, ok]).sum(0) / np.sqrt(va[ok] * vb[ok])
    return float(np.clip(r.max(), -1.0, 1.0))


def _map(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def step_time(pop: ChainPopulation, new_obs, conv: ConvergenceConfig, workers: int | None = None) -> ChainPopulation:
    """Advance every chain to ``t + 1``: one jump, then sweeps until the rate criterion holds.

    ``new_obs = (y, x)`` with ``x`` the full design row; the population picks
    its own columns. The population is updated in place and returned.
    """
    y, x_full = new_obs
    x = pop.select(x_full)
    if x.shape != (pop.m,):
        raise DomainError(f"design row has {x.size} entries, model expects {pop.m}")
    pop._data.append(float(y), x)
    data = pop.data
    qc, hyper, lag = pop.qc, pop.hyper, pop.lag

    def jump(i):
        return jump_extend(pop.chains[i], (y, x), qc, hyper, pop.rngs[i])

    out = _map(jump, range(pop.L), workers)
    pop.chains = [c for c, _ in out]
    pop.last_jump = [s for _, s in out]

    def sweep(i):
        return transition_sweep(pop.chains[i], data, qc, hyper, pop.rngs[i], lag)

    first = np.array([monitored_coordinates(c) for c in pop.chains])
    checks = set(conv.check_points())
    trace: list[tuple[int, float]] = []
    s = 0
    while s < conv.m_max:
        pop.chains = _map(sweep, range(pop.L), workers)
        s += 1
        if s in checks:
            r = estimate_rate(first, np.array([monitored_coordinates(c) for c in pop.chains]))
            trace.append((s, r))
            if r <= 1 - conv.epsilon:
                break

    def refresh(i):
        return refresh_filter(pop.chains[i], data, qc, hyper, lag)

    pop.chains = _map(refresh, range(pop.L), workers)
    pop.m_history.append(s)
    pop.rate_history.append(trace)
    log.info("step", extra={"t": pop.t, "m_t": s, "rate_trace": trace})
    return pop


def hpd_interval(samples, prob: float = 0.95) -> tuple[float, float]:
    """Shortest interval holding ``ceil(prob * n)`` of the sorted samples."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    k = min(n, max(1, math.ceil(prob * n)))
    widths = x[k - 1:] - x[: n - k + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + k - 1])


def posterior_summary(pop: ChainPopulation, which="beta", index: int = 0, prob: float = 0.95):
    """Cross-chain median and HPD bounds per time index.

    ``which`` is ``"beta"`` (coordinate ``index``), ``"omega"`` or ``"sigma"``;
    sigma has a single time-free value and returns length-1 arrays.
    Returns ``(median, lo, hi)``.
    """
    if which == "beta":
        vals = np.array([c.betas[:, index] for c in pop.chains])
    elif which == "omega":
        vals = np.array([c.omegas for c in pop.chains])
    elif which == "sigma":
        vals = np.array([[c.sigma] for c in pop.chains])
    else:
        raise ConfigError(f"unknown coordinate selector {which!r}")
    return summarize_draws(vals, prob)


def summarize_draws(vals, prob: float = 0.95):
    """Column-wise median and HPD of an (L, n) draw matrix."""
    vals = np.asarray(vals, dtype=float)
    med = np.median(vals, axis=0)
    bounds = np.array([hpd_interval(vals[:, j], prob) for j in range(vals.shape[1])]).reshape(-1, 2)
    return med, bounds[:, 0], bounds[:, 1]
