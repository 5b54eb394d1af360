class FlagError(Exception):
    """Base class for all errors raised by flagsdp."""


class TheoryError(FlagError, ValueError):
    pass


class FlagValueError(FlagError, ValueError):
    pass


class ExcludedFlagError(FlagValueError):
    pass


class TypeMismatchError(FlagError, ValueError):
    pass


class ConstructionError(FlagError, ValueError):
    pass


class SolverError(FlagError, RuntimeError):
    pass


class InfeasibleError(SolverError):
    pass


class ExternalSolverError(SolverError):
    pass


class RoundingError(FlagError, RuntimeError):
    pass


class VerificationError(FlagError):
    """Certificate rejected; ``flag`` names the offending flag when there is one."""

    def __init__(self, message: str, flag: str | None = None):
        super().__init__(message)
        self.flag = flag


class FormatError(FlagError, ValueError):
    """Malformed certificate, problem file or SDPA file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
