"""Run configuration read from an INI file with strict key checking."""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .dma import DEFAULT_MAX_REGRESSORS, DMAConfig
from .errors import ConfigError
from .gibbs import PriorHyper
from .smcmc import ConvergenceConfig
from .ssm import DEFAULT_KAPPA

# section -> keys accepted in it
SECTIONS = {
    "model": ("tau", "a0", "b0", "c0", "C0_scale", "kappa"),
    "sampler": ("L", "epsilon", "m_min", "m_max", "lag", "workers", "seed"),
    "averaging": ("alpha", "xi", "max_regressors"),
    "data": ("lags",),
}


@dataclass(frozen=True)
class RunConfig:
    tau: tuple[float, ...] = (0.25,)
    a0: float = 2.5
    b0: float = 1.0
    c0: float | None = None  # None means m + 2 for an m-coefficient model
    C0_scale: float = 0.01
    kappa: float = DEFAULT_KAPPA
    L: int = 20
    epsilon: float = 0.05
    m_min: int = 2
    m_max: int = 50
    lag: int | None = None
    workers: int = 1
    seed: int = 0
    alpha: float = 0.99
    xi: float | None = None  # None means 0.001 / K
    max_regressors: int = DEFAULT_MAX_REGRESSORS
    lags: int = 0

    def __post_init__(self):
        if not self.tau or any(not 0 < t < 1 for t in self.tau):
            raise ConfigError(f"tau levels must lie in (0, 1), got {self.tau}")
        if min(self.a0, self.b0, self.C0_scale, self.kappa) <= 0:
            raise ConfigError("a0, b0, C0_scale and kappa must be positive")
        if self.c0 is not None and self.c0 <= 0:
            raise ConfigError("c0 must be positive")
        if self.L < 2:
            raise ConfigError("L must be at least 2")
        ConvergenceConfig(self.epsilon, self.m_min, self.m_max)
        if self.lag is not None and self.lag < 0:
            raise ConfigError("lag must be non-negative")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if not 0 < self.alpha <= 1:
            raise ConfigError("alpha must lie in (0, 1]")
        if self.xi is not None and self.xi < 0:
            raise ConfigError("xi must be non-negative")
        if self.max_regressors < 0 or self.lags < 0:
            raise ConfigError("max_regressors and lags must be non-negative")

    @property
    def conv(self) -> ConvergenceConfig:
        return ConvergenceConfig(self.epsilon, self.m_min, self.m_max)

    def dma_config(self) -> DMAConfig:
        return DMAConfig(self.alpha, self.xi, self.L, self.lag, self.conv)

    def hyper(self, m: int) -> PriorHyper:
        c0 = float(m + 2) if self.c0 is None else self.c0
        return PriorHyper(self.a0, self.b0, c0, self.C0_scale * np.eye(m), self.kappa)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tau"] = list(self.tau)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_ini(self) -> str:
        lines = []
        d = self.to_dict()
        for sec, keys in SECTIONS.items():
            lines.append(f"[{sec}]")
            for k in keys:
                v = d[k]
                if v is None:
                    lines.append(f"# {k} =")
                elif isinstance(v, list):
                    lines.append(f"{k} = {', '.join(repr(x) for x in v)}")
                else:
                    lines.append(f"{k} = {v!r}")
            lines.append("")
        return "\n".join(lines)


_INTS = {"L", "m_min", "m_max", "lag", "workers", "seed", "max_regressors", "lags"}


def _convert(key: str, raw: str):
    raw = raw.strip()
    try:
        if key == "tau":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if raw.lower() in {"", "none"}:
            if key in {"c0", "lag", "xi"}:
                return None
            raise ConfigError(f"{key} needs a value")
        if key in _INTS:
            v = float(raw)
            if v != int(v):
                raise ConfigError(f"{key} must be an integer, got {raw!r}")
            return int(v)
        return float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {key} = {raw!r}") from None


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep C0_scale's case
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    values = {}
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in SECTIONS[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            values[key] = _convert(key, raw)
    return RunConfig(**values)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
