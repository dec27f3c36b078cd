"""Shared exception hierarchy."""


class QcScreenError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(QcScreenError):
    """An array argument does not have the dimensions the operation requires."""
