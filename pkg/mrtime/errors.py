"""
Exceptions raised by the mrtime core.

Every error derives from ``MrTimeError`` and from the builtin it specializes,
so code that only knows about ``ValueError`` or ``OSError`` keeps working.
"""


class MrTimeError(Exception):
    """Base class. ``hint`` is an optional remediation shown by the CLI."""

    hint = ""


class DimensionMismatch(MrTimeError, ValueError):
    pass


class NonFiniteValue(MrTimeError, ValueError):
    pass


class RankDeficient(MrTimeError, ValueError):
    hint = "profile more configurations spread over more distinct parameter values"

    def __init__(self, column: int, label: str = ""):
        self.column = column
        self.label = label or f"column {column}"
        super().__init__(f"design matrix is rank deficient at {self.label} (index {column})")


class InconsistentParameters(MrTimeError, ValueError):
    pass


class InsufficientData(MrTimeError, ValueError):
    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        self.hint = f"profile at least {required} distinct configurations"
        super().__init__(
            f"{available} experiments cannot determine {required} coefficients"
        )


class ParameterMismatch(MrTimeError, ValueError):
    pass


class EmptyInput(MrTimeError, ValueError):
    pass


class CountExceedsLattice(MrTimeError, ValueError):
    def __init__(self, count: int, size: int):
        self.count = count
        self.size = size
        super().__init__(f"count {count} exceeds the {size} points of the lattice")


class UnknownWorkload(MrTimeError, ValueError):
    def __init__(self, name: str, known=()):
        self.name = name
        message = f"unknown workload '{name}'"
        if known:
            message += " (known: {})".format(", ".join(sorted(known)))
        super().__init__(message)


class WorkloadFailure(MrTimeError, RuntimeError):
    pass


class NonPositiveTruth(MrTimeError, ValueError):
    pass


class ParseError(MrTimeError, ValueError):
    def __init__(self, path, line: int, reason: str):
        self.path = str(path)
        self.line = line
        self.reason = reason
        super().__init__(f"{self.path}:{line}: {reason}")


class IoError(MrTimeError, OSError):
    def __init__(self, path, reason: str):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")
