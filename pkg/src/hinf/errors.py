"""Exception hierarchy.

Every error raised by the library derives from :class:`HinfError`.  The CLI
maps the three families below onto its exit codes: infeasibility and failed
properties (1), bad input (2) and numerical breakdown (3).
"""


class HinfError(Exception):
    """Base class for all library errors."""


class InputError(HinfError, ValueError):
    """The caller handed over data that violates a precondition."""


class InfeasibleError(HinfError):
    """A mathematically meaningful negative answer (no solution exists)."""


class NumericalError(HinfError, ArithmeticError):
    """A computation lost accuracy beyond its stated tolerance."""


class SingularPencil(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class CenterMismatch(InputError):
    pass


class CenterIsPole(InputError):
    pass


class EvalAtPole(InputError):
    pass


class DeflationRankFailure(InputError):
    pass


class IllPosed(InputError):
    pass


class HypothesisViolated(InputError):
    pass


class AssumptionViolated(InputError):
    pass


class UnstableSystem(InputError):
    pass


class UnstableOpenLoop(InputError):
    pass


class SteinSingular(NumericalError):
    pass


class ReorderingFailure(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NoStabilizingSolution(InfeasibleError):
    """The Riccati equation has no verified stabilizing solution."""


class SignConditionFailed(InfeasibleError):
    """A stabilizing solution exists but is not negative semidefinite."""


class QNotContractive(InfeasibleError):
    pass
