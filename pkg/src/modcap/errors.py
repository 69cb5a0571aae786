"""Exception types shared across the package."""

from __future__ import annotations


class ModcapError(Exception):
    """Base class for errors raised by this package."""


class InvalidInstanceError(ModcapError):
    """Malformed space, measure, curve, family, or instance document."""


class SolverError(ModcapError):
    """An iterative solver failed to reach its tolerance.

    Carries the last relative gap (or residual) in ``gap``.
    """

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap


class NoBarycenterError(ModcapError):
    """A plan puts mass where the reference measure vanishes."""
