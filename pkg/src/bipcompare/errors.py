"""Exception hierarchy.

Every error carries the process exit status the CLI maps it to:
2 for bad input, 3 for a degenerate model, 4 for an undefined estimate.
"""


class BipCompareError(Exception):
    exit_code = 1


class InputError(BipCompareError, ValueError):
    exit_code = 2


class DegenerateModelError(BipCompareError):
    exit_code = 3


class UndefinedEstimateError(BipCompareError):
    exit_code = 4


# input validation
class InvalidInput(InputError):
    pass


class NonSymmetric(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class DegenerateReturns(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class BadOrder(InputError):
    pass


class SingularMixMatrix(InputError):
    pass


class NegativeVariance(InputError):
    pass


class InsufficientData(InputError):
    pass


# degenerate models
class NoTangency(DegenerateModelError):
    pass


class NumericalFailure(DegenerateModelError):
    pass


class EqualMix(DegenerateModelError):
    pass


class EqualDistributions(DegenerateModelError):
    pass


class IdenticalProjection(DegenerateModelError):
    pass


# undefined estimates
class AllTies(UndefinedEstimateError):
    pass


class SigmaZero(UndefinedEstimateError):
    pass
