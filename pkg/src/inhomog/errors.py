"""Shared exception types, mapped to CLI exit codes."""


class DataValidationError(ValueError):
    """Input data or configuration violates a structural requirement (exit code 3)."""


class NumericalError(RuntimeError):
    """A numerical routine failed beyond recovery (exit code 4)."""
