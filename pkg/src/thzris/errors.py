"""Exception types shared across the package."""


class RejectedInputError(ValueError):
    """Input violates a documented precondition (shapes, ranges, feasibility)."""


class SingularityError(ArithmeticError):
    """A factorization broke down on a matrix that should have been definite."""


class InfeasibleError(ArithmeticError):
    """A requested target (e.g. a common SINR level) cannot be met."""


class UsageError(RuntimeError):
    """An object was used out of order, e.g. backward before forward."""


class ScenarioError(ValueError):
    """A scenario file is malformed; the message names the field and line."""

    def __init__(self, message, field=None, line=None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
