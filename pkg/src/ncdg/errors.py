"""Exception types shared across the solver."""


class LocationError(Exception):
    """Point location on an edge failed to converge, even after multistart."""


class InterfaceCoverageError(Exception):
    """An interface point or span has no opposing edge within tolerance."""


class DivergedError(Exception):
    """Solution coefficients contain NaN/Inf; carries the last good time."""

    def __init__(self, message: str, time: float):
        super().__init__(message)
        self.time = time


class VacuumError(Exception):
    """The Riemann data would generate a vacuum region."""


class RiemannConvergenceError(Exception):
    """Star-pressure Newton iteration failed to converge."""


class NonPhysicalStateError(Exception):
    """Density or pressure is non-positive."""
