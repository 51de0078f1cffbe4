"""Shared exception types."""


class CapExceeded(RuntimeError):
    """An enumeration or search hit its configured cap before completing."""
