"""Exception hierarchy shared by every subordkit module."""


class SubordKitError(Exception):
    """Base class for all package errors."""


class InvalidSpecError(SubordKitError, ValueError):
    """A Lévy measure or subordinator triplet violates its invariants."""


class NotSpecialRecognized(SubordKitError):
    """The conjugate catalog does not recognize the Bernstein function as special."""


class NonConvergent(SubordKitError):
    """A limit, product or series failed to settle within its budget."""


class QZeroViolation(SubordKitError, ValueError):
    """An operation defined only for immortal subordinators received q > 0."""


class MaxSubdivisions(SubordKitError):
    """Adaptive quadrature exhausted its subdivision budget."""


class ValidationFailed(SubordKitError):
    """A numerical Laplace inversion failed its forward-transform check."""


class InversionUnstable(ValidationFailed):
    """The harmonic density obtained by inversion does not re-transform to phi'/phi."""


class NoClosedFormPotential(SubordKitError):
    """The potential measure V of the spec is not available in closed form."""


class HorizonExceeded(SubordKitError):
    """A simulated path hit its event budget before the stopping rule fired."""


class SimulationUnsupported(SubordKitError):
    """The spec has no exact-event path representation (e.g. stable time changes)."""


class ConfigError(SubordKitError):
    """A configuration document could not be parsed into a spec."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
