"""Self-avoiding walk counts and connective constants on graphs given by
tree-decomposition templates."""

from endwalk.errors import (
    BracketFailure,
    HorizonExceeded,
    Inconclusive,
    InvariantViolation,
    MalformedArrangement,
    MissingDependency,
    PreconditionFailed,
    ResourceLimit,
    TemplateError,
)

__version__ = "0.1.0"

__all__ = [
    "BracketFailure",
    "HorizonExceeded",
    "Inconclusive",
    "InvariantViolation",
    "MalformedArrangement",
    "MissingDependency",
    "PreconditionFailed",
    "ResourceLimit",
    "TemplateError",
]
