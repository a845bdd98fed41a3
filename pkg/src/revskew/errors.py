"""Exception types shared across the package."""


class RevSkewError(Exception):
    """Base class for all package errors."""


class EmptySubshift(RevSkewError):
    """The subshift has no bi-infinite admissible sequence."""


class OutOfDomain(RevSkewError):
    """An intermediate value of a composition chain left the hull [-1, 1].

    ``stage`` is the index (in application order) of the primitive step whose
    output escaped. ``stage == -1`` means the input itself was outside.
    """

    def __init__(self, stage, value=None):
        self.stage = stage
        self.value = value
        super().__init__(f"left [-1, 1] at stage {stage} (value {value!r})")


class InadmissibleContext(RevSkewError):
    pass


class InvalidParams(RevSkewError, ValueError):
    pass


class NotHomoclinic(RevSkewError):
    pass


class NotSymmetric(RevSkewError):
    pass


class TailUnstable(RevSkewError):
    pass


class WrongShape(RevSkewError):
    pass


class NotMonotone(RevSkewError):
    pass


class NoInverse(RevSkewError):
    pass


class RuleViolation(RevSkewError):
    """A good-cylinder extension mandated by the rules escaped (a, d)."""


class EmptyCounts(RevSkewError, ValueError):
    pass


class NotReversible(RevSkewError):
    def __init__(self, certificate):
        self.certificate = certificate
        super().__init__(f"system is not reversible (worst pair {certificate.worst_pair})")
