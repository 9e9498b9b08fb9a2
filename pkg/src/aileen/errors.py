"""Exception types shared across the package."""


class AileenError(Exception):
    """Base class for all package errors."""


class FactParseError(AileenError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnboundVariableError(AileenError, KeyError):
    pass


class OracleSizeError(AileenError, ValueError):
    pass


class UnknownConceptError(AileenError, KeyError):
    pass


class DuplicateConceptError(AileenError, ValueError):
    pass


class InvalidExampleError(AileenError, ValueError):
    pass


class ProjectionError(AileenError):
    """Projection could not produce a next state."""

    def __init__(self, message: str, similarity: float = 0.0):
        super().__init__(message)
        self.similarity = similarity


class BelowThresholdError(ProjectionError):
    pass


class NoNextStateError(ProjectionError):
    pass


class MemoryFileError(AileenError):
    pass


class SchemaVersionError(MemoryFileError):
    pass


class CorruptMemoryError(MemoryFileError):
    pass


class UnsatisfiableError(AileenError):
    pass


class PlacementError(AileenError):
    pass


class PreconditionViolation(AileenError):
    def __init__(self, condition: str):
        super().__init__(f"precondition violated: {condition}")
        self.condition = condition


class TemplateMismatchError(AileenError, ValueError):
    pass


class PlanNotFoundError(AileenError):
    pass


class ConfigError(AileenError, ValueError):
    pass


class RaggedInputError(AileenError, ValueError):
    pass
