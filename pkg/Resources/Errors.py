from typing import Optional, Tuple


class KloostermanError(ValueError):
    """Base class for every error raised by the Resources package."""


class CompositionError(KloostermanError):
    pass


class DiagramError(KloostermanError):
    pass


class PrecisionError(KloostermanError):
    """A character argument has a denominator beyond the working modulus."""


class PreconditionError(KloostermanError):
    pass


class VerificationError(KloostermanError):
    pass


class CellMembershipError(KloostermanError):
    """The matrix handed to the factorizer is not in the requested Bruhat cell."""

    def __init__(self, message: str, minor: Optional[Tuple[int, int]] = None):
        super().__init__(message)
        self.minor = minor


class BudgetExceededError(KloostermanError):
    def __init__(self, requested: int, budget: int, what: str = "representatives"):
        super().__init__(f"Enumeration of {requested} {what} exceeds the budget of {budget}.")
        self.requested = requested
        self.budget = budget
