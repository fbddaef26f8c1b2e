"""Exception types shared across the package."""


class OamTurbError(Exception):
    """Base class for all package errors."""


class RangeError(OamTurbError, ValueError):
    """Parameter outside the supported/validated range."""


class DomainError(OamTurbError, ValueError):
    """Mathematically invalid argument (nonpositive length, w_t < w, ...)."""


class ShapeMismatchError(OamTurbError, ValueError):
    """Operands live on different grids or have incompatible shapes."""


class AliasingError(OamTurbError, RuntimeError):
    """Boundary-energy guard tripped: the grid is too small for the field."""


class StatisticsError(OamTurbError, ValueError):
    """Not enough samples for the requested estimate."""


class ToleranceError(OamTurbError, RuntimeError):
    """Quadrature self-consistency check failed at the configured tolerance."""


class TotalLossError(OamTurbError, RuntimeError):
    """Recovered amplitude is zero; fidelity is undefined for this event."""
