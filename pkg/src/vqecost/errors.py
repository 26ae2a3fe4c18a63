"""Exception types shared across the package.

The CLI maps each family onto a process exit code, so every raised error
should derive from one of the three bases below.
"""


class VqeCostError(Exception):
    """Base class for all package errors."""


class InputError(VqeCostError, ValueError):
    """Malformed or inconsistent user input (exit code 2)."""


class ParseError(InputError):
    """A text input could not be parsed."""

    def __init__(self, message, *, line=None, position=None):
        self.line = line
        self.position = position
        where = []
        if line is not None:
            where.append(f"line {line}")
        if position is not None:
            where.append(f"position {position}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class DimensionError(InputError):
    """Operands act on different numbers of qubits."""


class PreconditionError(VqeCostError):
    """A documented precondition does not hold (exit code 3)."""


class AllocationError(PreconditionError):
    """Shots cannot be distributed over the measurement groups."""


class UnsupportedPlanError(PreconditionError):
    """The requested operation is not defined for this grouping plan."""


class NumericalConsistencyError(VqeCostError, ArithmeticError):
    """A numerical self-check failed (exit code 4)."""
