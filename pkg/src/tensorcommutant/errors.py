"""Exception hierarchy shared by every module.

Each exception carries an ``exit_code`` so the CLI can map failures onto its
documented taxonomy without a lookup table.
"""


class TensorCommutantError(Exception):
    exit_code = 5


class DimensionMismatch(TensorCommutantError, ValueError):
    pass


class SizeOverflow(TensorCommutantError, ValueError):
    pass


class NotHermitian(TensorCommutantError, ValueError):
    pass


class NoConvergence(TensorCommutantError, RuntimeError):
    pass


class AmbiguousRank(TensorCommutantError, RuntimeError):
    exit_code = 2

    def __init__(self, message, gap=None, eigenvalues=None):
        super().__init__(message)
        self.gap = gap
        self.eigenvalues = eigenvalues


class UnstableDimension(TensorCommutantError, RuntimeError):
    exit_code = 3

    def __init__(self, message, dims=None):
        super().__init__(message)
        self.dims = dims


class InvarianceViolation(TensorCommutantError, RuntimeError):
    """A computed commutant element failed verification on fresh samples."""


class ParseError(TensorCommutantError, ValueError):
    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class DimMissing(TensorCommutantError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class BadParams(TensorCommutantError, ValueError):
    pass


class SingularGram(TensorCommutantError, ValueError):
    def __init__(self, message, dependent=None):
        super().__init__(message)
        self.dependent = list(dependent or [])


class StructureViolation(TensorCommutantError, AssertionError):
    def __init__(self, message, offenders=None):
        super().__init__(message)
        # (element index, block label, magnitude)
        self.offenders = list(offenders or [])


class UnknownOperator(TensorCommutantError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class NotPSD(TensorCommutantError, ValueError):
    pass


class ZeroTrace(TensorCommutantError, ValueError):
    pass
