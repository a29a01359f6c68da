"""Digital shearlet wavefront-set extraction and microlocal Radon mapping."""

__version__ = "0.1.0"

from .errors import (
    ConfigurationError,
    ConstructionError,
    DimensionError,
    DivergenceError,
    FrameDegeneracyError,
    InsufficientDataError,
    MicroshearError,
    TrainingError,
    UndefinedMetricError,
)
from .wavefront import WavefrontSet, quantize_angle

__all__ = [
    "__version__",
    "WavefrontSet",
    "quantize_angle",
    "MicroshearError",
    "ConfigurationError",
    "ConstructionError",
    "DimensionError",
    "DivergenceError",
    "FrameDegeneracyError",
    "InsufficientDataError",
    "TrainingError",
    "UndefinedMetricError",
]
