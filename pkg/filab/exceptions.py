"""Custom exceptions. Basically just giving meaningful names."""


class ChainError(Exception):
    """When a transition matrix or measure isn't a valid finite reversible chain"""

    pass


class RowSumError(ChainError):
    """When a row of the transition matrix doesn't sum to one"""

    def __init__(self, row: int, total: float):
        self.row = row
        self.total = total
        super().__init__(f"row {row} sums to {total!r}, expected 1")


class NegativeEntry(ChainError):
    """When the transition matrix holds a negative entry"""

    pass


class NotIrreducible(ChainError):
    """When the graph of allowed transitions isn't strongly connected"""

    pass


class NotReversible(ChainError):
    """When detailed balance fails"""

    pass


class StationarityError(ChainError):
    """When a measure isn't invariant under the transition matrix"""

    pass


class NotProbability(ChainError):
    """When a vector isn't a probability vector"""

    pass


class DimensionMismatch(ChainError):
    """When an observable doesn't match the size of the state space"""

    pass


class TrivialChain(ChainError):
    """When an operation needs at least two states"""

    pass


class ValueDomainError(ValueError):
    """When a scalar or observable is outside the domain of an operation"""

    pass


class NegativeValue(ValueDomainError):
    """When a non-negative observable was expected"""

    pass


class NonPositive(ValueDomainError):
    """When a strictly positive observable was expected"""

    pass


class NegativeArgument(ValueDomainError):
    """When a non-negative scalar was expected"""

    pass


class NegativeTime(ValueDomainError):
    """When the semigroup is asked for a negative time"""

    pass


class GeneratorError(Exception):
    """When a chain family can't produce a chain"""

    pass


class FamilyNotFound(GeneratorError):
    """When a family isn't registered"""

    pass


class InvalidParams(GeneratorError):
    """When family parameters are out of range or inconsistent"""

    pass


class DisconnectedSample(GeneratorError):
    """When no connected random graph was sampled within the retry cap"""

    pass


class SolverError(Exception):
    """When a numerical routine fails"""

    pass


class NoConvergence(SolverError):
    """When every restart of a ratio maximization failed"""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class SpectralError(SolverError):
    """When the spectral decomposition of the generator is inconsistent"""

    pass


class KernelViolation(SolverError):
    """When Gamma_2 isn't positive semidefinite on the kernel of Gamma"""

    pass


class LPInfeasible(SolverError):
    """When a linear program that should be feasible isn't"""

    pass


class InputError(Exception):
    """When user input can't be used"""

    def __init__(self, message: str, path: str = None):
        self.path = path
        if path is not None:
            message = f"{path}: {message}"
        super().__init__(message)


class ParseError(InputError):
    """When a file isn't valid JSON, holds NaN/Inf, or a ragged matrix"""

    pass


class SchemaError(InputError):
    """When a JSON document misses required fields"""

    pass


class InputMismatch(InputError):
    """When reports don't belong to the same chain"""

    pass


class NotApplicable(InputError):
    """When the preconditions of a probe aren't met"""

    pass
