"""Exception types shared across the package."""


class HilbertCubeError(Exception):
    """Base class for all package errors."""


class NonPositiveBound(HilbertCubeError):
    """An interval upper bound evaluated to a value <= 0."""


class BudgetExhausted(HilbertCubeError):
    """A convergence loop hit its term/dimension budget without a verdict."""


class DegenerateRectangle(HilbertCubeError):
    """Operation requires a nondegenerate rectangle (nonzero volume)."""


class DomainMismatch(HilbertCubeError):
    """Two functions were combined across different rectangles."""


class DomainError(HilbertCubeError):
    """Evaluation left the real domain (log of nonpositive, 0^negative, ...)."""


class OutOfRange(HilbertCubeError):
    """A coordinate index fell outside the evaluable range."""


class EvaluationError(HilbertCubeError):
    """Evaluation failed at a concrete point; carries the point when known."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class EngineFailure(HilbertCubeError):
    """An integration engine could not produce a value."""


class SeriesDivergence(HilbertCubeError):
    """Power-series accumulation grew for several consecutive terms."""


class ModulusViolated(HilbertCubeError):
    """Sampled pairs contradicted a declared Lipschitz modulus."""


class DimensionTooLarge(HilbertCubeError):
    """Tensor quadrature asked for more dimensions than it can afford."""


class UnsupportedCase(HilbertCubeError):
    """Inputs fall outside the proven/implemented scope (e.g. unbounded
    integrand on a general rectangle without force=True)."""


class UnboundIndex(HilbertCubeError):
    """An index variable or x[i] reference escapes every aggregator."""


class ParseError(HilbertCubeError):
    """Malformed source text.

    Attributes
    ----------
    position : int
        Byte offset of the offending token in the input.
    expected : tuple of str
        Token kinds that would have been accepted at that position.
    """

    def __init__(self, position, message, expected=()):
        super().__init__(f"{message} (at offset {position})")
        self.position = position
        self.message = message
        self.expected = tuple(expected)
