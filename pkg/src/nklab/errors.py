class NKError(Exception):
    """Base class for all nklab errors."""


class GramMismatch(NKError):
    pass


class NoSolution(NKError):
    pass


class SingularGram(NKError):
    pass


class CompositionError(NKError):
    pass


class DomainError(NKError):
    pass


class DegenerateError(NKError):
    pass


class DegenerateGram(NKError):
    pass


class DegeneratePlane(NKError):
    pass


class NotApplicable(NKError):
    pass


class UnresolvedType(NKError):
    """Eigenstructure of A falls in the gray zone between diagonalizable and Jordan."""


class GaugeFailure(NKError):
    pass


class UnknownImmersion(NKError):
    pass
