"""Strong converse exponents for classical channel interconversion."""

from __future__ import annotations

from .kernels import BACKEND
from .measures import (
    BITS,
    NATS,
    Channel,
    ConvergenceWarning,
    Distribution,
    LogUnit,
    TypeClass,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = ["BACKEND", "BITS", "NATS", "Channel", "ConvergenceWarning", "Distribution",
           "LogUnit", "TypeClass", "ValidationError", "__version__"]
