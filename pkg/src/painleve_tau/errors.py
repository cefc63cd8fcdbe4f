"""Exception hierarchy shared by all modules."""


class PainleveTauError(Exception):
    """Base class for numerical failures raised by this package."""


class CertificationError(PainleveTauError):
    """A result did not reproduce at doubled precision before hitting ``max_bits``."""


class DivergenceError(CertificationError):
    """A quadrature or series failed to converge."""


class SingularityError(PainleveTauError, ZeroDivisionError):
    """A determinant or recurrence denominator is numerically zero.

    ``name`` identifies the failing quantity so callers can report it.
    """

    def __init__(self, name, magnitude=None, detail=""):
        self.name = name
        self.magnitude = magnitude
        msg = f"near-zero {name}"
        if magnitude is not None:
            msg += f" (|{name}| = {magnitude})"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class BranchObstructionError(PainleveTauError):
    """An order-by-order coefficient equation has two distinct roots."""


class ConsensusError(PainleveTauError):
    """Independent computational routes disagree beyond tolerance."""


class DenominatorError(PainleveTauError, ZeroDivisionError):
    """A series coefficient equation degenerates for the given parameters."""


class TruncationWarning(UserWarning):
    """The last retained term of a truncated series exceeds the tolerance."""
