"""Sequential Bayesian time-varying quantile regression with dynamic model averaging."""

from .config import RunConfig, load_config, parse_config
from .data import SeriesData, load_csv
from .distributions import QuantileConfig, make_quantile_config, pinball_loss
from .dma import DMAConfig, DMAResult, ModelSpec, enumerate_models, run_dqma
from .errors import ConfigError, DomainError, NumericalError
from .gibbs import ChainState, PriorHyper, default_hyper
from .pipeline import FitResult, run_dma, run_fit, score_forecasts
from .smcmc import ConvergenceConfig, hpd_interval, init_population, posterior_summary, step_time
from .ssm import GaussState

__all__ = [
    "ChainState",
    "ConfigError",
    "ConvergenceConfig",
    "DMAConfig",
    "DMAResult",
    "DomainError",
    "FitResult",
    "GaussState",
    "ModelSpec",
    "NumericalError",
    "PriorHyper",
    "QuantileConfig",
    "RunConfig",
    "SeriesData",
    "default_hyper",
    "enumerate_models",
    "hpd_interval",
    "init_population",
    "load_config",
    "load_csv",
    "make_quantile_config",
    "parse_config",
    "pinball_loss",
    "posterior_summary",
    "run_dma",
    "run_dqma",
    "run_fit",
    "score_forecasts",
    "step_time",
]

__version__ = "0.1.0"
