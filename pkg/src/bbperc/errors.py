"""Exception hierarchy shared by all modules."""


class BBPercError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(BBPercError, ValueError):
    pass


# step laws
class InvalidStepLaw(BBPercError, ValueError):
    pass


class NonPositiveProbability(InvalidStepLaw):
    pass


class ProbabilitySumMismatch(InvalidStepLaw):
    pass


class EmptySupport(InvalidStepLaw):
    pass


class DuplicateSupportVector(InvalidStepLaw):
    pass


class DimensionMismatch(BBPercError, ValueError):
    pass


class NonLatticeProjection(BBPercError, ValueError):
    pass


class TargetOutsideHull(BBPercError, ValueError):
    pass


class NoConvergence(BBPercError, RuntimeError):
    pass


# bridges
class UnreachableEndpoint(BBPercError, ValueError):
    pass


class LengthMismatch(BBPercError, ValueError):
    pass


class NonMonotoneTime(BBPercError, ValueError):
    pass


class UnpinnedEndpoint(BBPercError, ValueError):
    pass


class OutOfRange(BBPercError, ValueError):
    pass


class DriftViolation(BBPercError, ValueError):
    pass


class NoPinningPossible(BBPercError, ValueError):
    pass


class NonzeroMean(BBPercError, ValueError):
    pass


class ZeroVariance(BBPercError, ValueError):
    pass


# percolation
class VertexOutsideSlab(BBPercError, ValueError):
    pass


class NotHConnected(BBPercError, ValueError):
    pass


class InsufficientAcceptances(BBPercError, RuntimeError):
    pass


# analysis
class TimeNotOnGrid(BBPercError, ValueError):
    pass


class TooFewSamples(BBPercError, ValueError):
    pass


class DegenerateFit(BBPercError, ValueError):
    pass


class GridMismatch(BBPercError, ValueError):
    pass


class MissingManifest(BBPercError, FileNotFoundError):
    pass


# resource budgets; the CLI maps every subclass to exit code 3
class BudgetExhausted(BBPercError, RuntimeError):
    pass


class TableBudgetExceeded(BudgetExhausted):
    pass


class CapExceeded(BudgetExhausted):
    pass


class AttemptBudgetExhausted(BudgetExhausted):
    pass


class EnumerationBudgetExceeded(BudgetExhausted):
    pass
