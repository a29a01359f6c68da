"""Exception types shared across the package."""


class MicroshearError(Exception):
    """Base class for all package errors."""


class ConfigurationError(MicroshearError):
    """Invalid generation or experiment configuration."""


class DimensionError(MicroshearError):
    """Array shapes do not match the operation's requirements."""


class ConstructionError(MicroshearError):
    """A filter bank cannot be built for the requested parameters."""


class FrameDegeneracyError(MicroshearError):
    """Frame weights contain entries too close to zero to invert."""


class InsufficientDataError(MicroshearError):
    """Not enough samples available to build a dataset."""


class TrainingError(MicroshearError):
    """Optimization diverged or was asked to do something impossible."""


class UndefinedMetricError(MicroshearError):
    """A score is requested for inputs on which it is not defined."""


class DivergenceError(MicroshearError):
    """An iterative solver produced a non-finite intermediate."""
