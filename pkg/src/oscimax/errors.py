"""Shared exception types."""


class PhaseDomainError(ValueError):
    """Phase evaluated where its formula is singular or undefined."""


class PreconditionError(ValueError):
    """An operation was called outside its documented domain."""
