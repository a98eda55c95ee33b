"""Randomized benchmarking theory and simulation under gate-dependent noise."""
__version__ = "0.1.0"

from .errors import (  # noqa: F401
    RBError,
    ValidationError,
    NumericalError,
)
