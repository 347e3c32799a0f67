"""Exception hierarchy shared by all modules."""


class SimulationError(Exception):
    """Base class for every error raised by this package."""


class DegenerateGeometry(SimulationError, ValueError):
    """Geometry is non-positive or so close to coincident points that the
    induced shifts diverge."""


class InvalidState(SimulationError, ValueError):
    """An X state violates trace, positivity or principal-minor bounds."""


class NonPhysicalState(SimulationError, ValueError):
    """A concurrence radicand is negative beyond numerical tolerance."""


class IntegrationDiverged(SimulationError, ArithmeticError):
    """The integrator left the physically bounded region or lost the trace."""


class OracleDivergence(SimulationError, ArithmeticError):
    """The matrix-exponential reference lost trace beyond tolerance."""


class WindowTooShort(SimulationError):
    """Survival cannot be classified because concurrence is not decaying at
    the end of the integrated window."""


class ConfigError(SimulationError, ValueError):
    """Invalid run configuration.

    Parameters
    ----------
    path : str
        Dotted path of the offending field, e.g. ``"geometry.omega_L"``.
    reason : str
        Human readable description of the violation.
    """

    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"{path}: {reason}")
