"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An operation was called with arguments that break its preconditions."""


class ConfigurationError(RuntimeError):
    """An agent or experiment was assembled with an inconsistent configuration."""


class TrainingDivergence(RuntimeError):
    """A training call produced a non-finite loss or non-finite weights."""
