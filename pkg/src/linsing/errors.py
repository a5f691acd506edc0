"""Exception taxonomy shared across the package."""


class LinsingError(Exception):
    """Base class for all package errors."""


class ExprSyntaxError(LinsingError):
    """Malformed expression text; carries the byte offset of the offending token."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UndeclaredVariableError(LinsingError):
    """An identifier was used that is not among the declared variables."""

    def __init__(self, name, offset=None):
        at = f" (byte offset {offset})" if offset is not None else ""
        super().__init__(f"undeclared variable '{name}'{at}")
        self.name = name
        self.offset = offset


class DomainEvalError(LinsingError):
    """Evaluation hit a domain fault (sqrt of a negative, log of a non-positive,
    division by zero, bad power); identifies the offending subexpression."""

    def __init__(self, message, subexpression):
        super().__init__(f"{message} in subexpression '{subexpression}'")
        self.subexpression = subexpression


class ShapeError(LinsingError):
    """Dimension/shape mismatch between fields, matrices or points."""


class NotComplementaryError(LinsingError):
    """The two subspaces do not span the ambient space as a direct sum."""


class BaseNotRegularError(LinsingError):
    """The base morphism is not a pointwise isomorphism where one is required."""


class FrameDegenerateError(LinsingError):
    """The transported force frame is linearly dependent at the evaluation point."""


class MaxRankViolatedError(LinsingError):
    """The velocity Jacobian of the constraint functions fails to have maximal rank."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class InconsistentSystemError(LinsingError):
    """The linear problem has no solution at the requested point."""


class NotOnManifoldError(LinsingError):
    """The evaluation point does not satisfy the submanifold equations."""


class ProjectionDivergenceError(LinsingError):
    """Post-step projection failed to converge, even after the retry."""

    def __init__(self, message, step_index):
        super().__init__(f"{message} (step {step_index})")
        self.step_index = step_index


class SpecFileError(LinsingError):
    """A system specification file is malformed; carries section/line context."""

    def __init__(self, section, line, message):
        ctx = ""
        if section:
            ctx += f" [section {section}]"
        if line:
            ctx += f" (line {line})"
        super().__init__(message + ctx)
        self.section = section
        self.line = line
