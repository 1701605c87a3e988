"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a density or sampler."""


class ConfigError(ValueError):
    """A run or sampler configuration violates its invariants."""


class NumericalError(ArithmeticError):
    """A linear-algebra step produced a non-finite or non-positive quantity."""
