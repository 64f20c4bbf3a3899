"""Exception hierarchy.

Everything numerical derives from :class:`NumericalError` so the CLI can map
it to exit code 1; bad inputs derive from :class:`ConfigurationError`
(exit code 2).
"""


class CompassError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CompassError, ValueError):
    """Invalid parameters or configuration supplied by the caller."""


class DomainError(ConfigurationError):
    """Argument outside the supported domain (negative time, degree cap, ...)."""


class NumericalError(CompassError, ArithmeticError):
    """A computation ran but its result cannot be trusted."""


class NumericalInstabilityError(NumericalError):
    """Cancellation or overflow detected (imaginary residue, non-finite values)."""


class CutoffTooSmallError(NumericalError):
    """Fock truncation leaves too much weight near the cutoff."""


class CoverageError(NumericalError):
    """Phase-space grid does not contain the state's support."""


class StepSizeError(NumericalError):
    """Finite-difference estimates failed to converge."""


class DegenerateStateError(NumericalError):
    """A ratio was requested against a vanishing reference value."""


class ContourError(NumericalError):
    """Zero-contour extraction or boundary quadrature failed."""


class RegionTooSmallError(ContourError):
    """A zero contour left the region of interest."""


class SingularBoundaryError(ContourError):
    """|grad W| vanishes somewhere on the contour."""


class NumericalInconsistencyError(NumericalError):
    """Two equivalent evaluation routes disagree beyond tolerance."""


class StencilError(ConfigurationError):
    """Grid too small or coarse for the finite-difference stencil."""


class NoCentralPatchError(ContourError):
    """The origin is not enclosed by a closed zero contour."""


class ContourResolutionError(ContourError):
    """Too few boundary segments for a reliable line integral."""
