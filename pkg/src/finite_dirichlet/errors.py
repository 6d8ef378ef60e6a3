"""Exception types raised by the library.

Every error that refers to a concrete point, pair or subset carries it in
``witness`` so callers (and the CLI) can report it without re-deriving it.
"""


class FormError(ValueError):
    """Base class for all library errors."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GroundSetMismatch(FormError):
    pass


class NotPSD(FormError):
    pass


class InvalidContraction(FormError):
    pass


class NotStrictlyPositive(FormError):
    pass


class NotPositive(FormError):
    """A Lagrangian density has a negative entry."""


class NegativeWeight(FormError):
    pass


class NotMarkovian(FormError):
    pass


class NonzeroKilling(FormError):
    pass


class EmptyFamily(FormError):
    pass


class AbsContinuityViolated(FormError):
    pass


class NonpositiveAlpha(FormError):
    pass


class EnergyOnNullSet(FormError):
    pass


class NegativeMass(FormError):
    pass


class SelectionFailed(FormError):
    pass


class EmptyGenerators(FormError):
    pass


class NotInAlgebra(FormError):
    pass
