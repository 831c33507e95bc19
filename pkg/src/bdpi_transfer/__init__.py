"""BDPI actor-critic agent with policy-shaping transfer and a 2-D navigation task."""

from .errors import ConfigurationError, ContractViolation, TrainingDivergence

__version__ = "0.1.0"
__all__ = ["ConfigurationError", "ContractViolation", "TrainingDivergence", "__version__"]
