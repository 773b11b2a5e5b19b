"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class SingstabError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SingstabError, ValueError):
    pass


class SingularMatrixError(SingstabError, ValueError):
    pass


class SchemaError(SingstabError, ValueError):
    """Input document does not match the expected schema.

    ``path`` points at the offending field, e.g. ``modes[1].P``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class AdmissibilityError(SingstabError, ValueError):
    """Switching signal violates the dwell time or the mode index range."""


class TransformConvergenceError(SingstabError, RuntimeError):
    def __init__(self, mode_index: int | None, eps: float, message: str):
        self.mode_index = mode_index
        self.eps = eps
        who = "mode ?" if mode_index is None else f"mode {mode_index}"
        super().__init__(f"eps={eps:g} above transform threshold for {who}: {message}")


class PremiseError(SingstabError, ValueError):
    """A hypothesis required by a stability statement does not hold."""


class FitError(SingstabError, ValueError):
    pass
