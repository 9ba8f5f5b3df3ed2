"""Custom exceptions for interval-ci-power."""

from typing import Any, Dict, Optional


class IntervalCiError(Exception):
    """Base exception for all interval-ci-power errors."""

    pass


class InvalidParameterError(IntervalCiError, ValueError):
    """Invalid parameter provided to a function (outside its domain)."""

    pass


class SolverError(IntervalCiError):
    """A root-finding or minimisation step failed to produce a valid answer."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class DgpError(IntervalCiError):
    """The data-generating process cannot deliver ordered draws."""

    pass


class EngineError(IntervalCiError):
    """A Monte Carlo run was aborted."""

    pass


class ConfigError(IntervalCiError):
    """Error reading or validating an experiment configuration."""

    pass
