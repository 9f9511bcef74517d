"""Exceptions raised by the monitor API."""


class IllegalMonitorStateError(RuntimeError):
    """Unlock, wait, or notify invoked by a thread that does not own the monitor."""
