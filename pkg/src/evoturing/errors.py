"""Exception hierarchy shared by every module."""


class EvoTuringError(Exception):
    """Base class for all package errors."""


class ConfigurationError(EvoTuringError, ValueError):
    """Malformed or inconsistent configuration."""


class EvaluationError(EvoTuringError, ValueError):
    """An objective was applied to a genome it cannot evaluate."""


class EngineError(EvoTuringError, RuntimeError):
    """An engine invariant was breached during a run."""


class AnalysisError(EvoTuringError, ValueError):
    """Invalid input to an analysis routine."""


class DecodeError(EvoTuringError, ValueError):
    """An encoded algorithm description could not be decoded."""


class OracleRefused(EvoTuringError, RuntimeError):
    """The search space is too large for exhaustive enumeration."""
