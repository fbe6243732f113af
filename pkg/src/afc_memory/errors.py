"""Base exception shared by every afc_memory sub-package."""


class AFCMemoryError(ValueError):
    """Base class for domain errors raised by afc_memory."""


class InfeasibleError(AFCMemoryError):
    """A requested target cannot be met inside the allowed range."""
