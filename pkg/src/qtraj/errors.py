"""Exception hierarchy.

Two broad families matter for scripting: model/input validation problems
(CLI exit code 2) and numerical failures (CLI exit code 3).  I/O problems
are left to the builtin OSError family (exit code 4).
"""


class QtrajError(Exception):
    """Base class for all errors raised by this package."""


class ModelValidationError(QtrajError):
    """Malformed or inconsistent input: dimension mismatches, broken
    invariants, failed structural assumptions, bad config files."""


class IdentifiabilityError(ModelValidationError):
    """A pair of pointer states is not separated by any read channel, so
    the jump-rate formula is not defined for the requested model."""


class NumericalError(QtrajError):
    """A computation could not be completed at the requested accuracy."""


class SpectralPropertyError(NumericalError):
    """The dominant generator has eigenvalues incompatible with a
    long-time projector (purely imaginary, or with positive real part)."""


class JordanBlockError(NumericalError):
    """The zero eigenvalue of the dominant generator is not semi-simple."""


class DegeneracyError(NumericalError):
    """Kernel biorthogonalization failed (singular Gram matrix)."""


class ConditioningError(NumericalError):
    """A linear solve was too ill-conditioned to trust."""

    def __init__(self, message, condition_number=None):
        if condition_number is not None:
            message = f"{message} (condition number ~ {condition_number:.3e})"
        super().__init__(message)
        self.condition_number = condition_number


class CenteringError(NumericalError):
    """The intermediate-scale generator does not vanish between kernel
    projections, so no homogenized generator exists."""


class BlowUpError(NumericalError):
    """The SDE integrator produced a non-finite state."""

    def __init__(self, step_index, h):
        super().__init__(
            f"non-finite state at step {step_index} (h={h:g}); "
            f"retry with a smaller step size"
        )
        self.step_index = step_index
        self.h = h
