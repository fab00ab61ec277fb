"""Exception types shared across freeholo.

Each error class carries a ``exit_code`` used by the command line front end:
1 usage/fixture, 2 domain, 3 numerical, 4 property failure.
"""


class FreeholoError(Exception):
    exit_code = 1


class DimensionError(FreeholoError, ValueError):
    """Operands have incompatible shapes."""


class FixtureError(FreeholoError, ValueError):
    """A JSON fixture does not follow its schema."""


class ParseError(FreeholoError, ValueError):
    """Malformed polynomial source text.

    ``pos`` is the 0-based character offset; ``line`` and ``col`` are 1-based.
    """

    def __init__(self, message, text, pos):
        self.message = message
        self.pos = pos
        self.line = text.count("\n", 0, pos) + 1
        self.col = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {self.line}, column {self.col}")


class DomainError(FreeholoError):
    """A point lies outside the domain ``{x : ||delta(x)|| < 1}``."""

    exit_code = 2

    def __init__(self, message, norm=None, hint=None):
        self.norm = norm
        self.hint = hint
        if norm is not None:
            message = f"{message} (||delta(x)|| = {norm:.17g})"
        if hint:
            message = f"{message}; {hint}"
        super().__init__(message)


class SamplingError(DomainError):
    """Random sampling never produced a point inside the domain."""


class NumericalError(FreeholoError):
    exit_code = 3


class SingularMatrixError(NumericalError):
    def __init__(self, rcond):
        self.rcond = rcond
        super().__init__(f"matrix is singular to working precision (rcond = {rcond:.3e})")


class DivergenceError(NumericalError):
    """A Neumann or power series does not converge at the requested point."""


class BudgetError(NumericalError):
    """A symbolic computation exceeded its configured size budget."""


class IsometryError(FreeholoError, ValueError):
    def __init__(self, defect, tol):
        self.defect = defect
        super().__init__(f"colligation is not an isometry: ||V*V - I|| = {defect:.3e} > {tol:.1e}")


class NotScalarError(FreeholoError):
    """``F(0)`` is not a multiple of the identity, which no IP function allows."""

    exit_code = 4
