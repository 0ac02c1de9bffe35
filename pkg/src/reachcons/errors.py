"""Shared exception types."""

from __future__ import annotations


class ReachconsError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(ReachconsError, ValueError):
    """A caller violated an operation precondition."""


class GraphFormatError(ReachconsError, ValueError):
    """Malformed graph text or scenario input."""


class BudgetError(ReachconsError):
    """An enumeration or simulation budget was exceeded."""


class ProtocolIntegrityError(ReachconsError):
    """An internal protocol guarantee was violated at runtime."""


class InconsistentMessageSetError(ReachconsError):
    """value_of was called on an inconsistent message set."""
