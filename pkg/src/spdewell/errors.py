"""Exception types shared across the package."""

from __future__ import annotations


class SpdewellError(Exception):
    """Base class for package errors."""


class PreconditionError(SpdewellError, ValueError):
    """An operation was called outside its admissible parameter range."""


class UnavailableSymbolError(SpdewellError):
    """The kernel has no exponential Fourier representation (symbol unavailable)."""


class AliasingError(SpdewellError):
    """Grid resolution too coarse: the transform has not decayed at Nyquist."""


class SpectralDivergenceError(SpdewellError):
    """A spectral integral diverged; carries the partial-sum trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class ConsistencyError(SpdewellError):
    """Two independent evaluation routes disagreed beyond tolerance."""


class NonContractionError(SpdewellError):
    """Picard iterate gaps grew for several consecutive iterates."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics


class WellPosednessRefusal(SpdewellError):
    """Simulation refused because a well-posedness verdict was not convergent."""

    def __init__(self, message, verdicts=None):
        super().__init__(message)
        self.verdicts = verdicts or {}


class ConfigError(SpdewellError):
    """Configuration failed schema validation; carries the offending field path."""

    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path
