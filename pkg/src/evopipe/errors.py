"""Exception types shared across the package."""


class EvoPipeError(Exception):
    """Base class for errors raised by evopipe."""


class ConfigurationError(EvoPipeError):
    """Invalid registry, engine, or experiment configuration."""


class EvaluationError(EvoPipeError):
    """A scoring precondition was violated (bad folds, single-class truth, ...)."""


class OperatorError(EvoPipeError):
    """An ML operator could not fit or apply; folds into the FAILED fitness sentinel."""


class IngestionError(EvoPipeError):
    """A CSV file could not be loaded as a dataset."""


class GenerationError(EvoPipeError):
    """Synthetic data generation produced a degenerate task."""


class AnalysisError(EvoPipeError):
    """Post-run statistics could not be computed from the given run logs."""
