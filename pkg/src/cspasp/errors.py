"""Shared exception types."""


class CapExceeded(RuntimeError):
    """Raised when an operation would blow past a hard size/work cap.

    Deliberately a RuntimeError subclass: callers that don't care about
    the distinction still fail loudly instead of silently truncating.
    """
