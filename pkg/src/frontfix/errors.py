"""Exception hierarchy shared by the solver modules."""

from __future__ import annotations


class FrontFixError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FrontFixError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class ModelAssumptionError(FrontFixError):
    """The market parameters violate an assumption of the boundary analytics."""


class StateCorruptionError(FrontFixError):
    """A solver state (or RK stage state) is no longer admissible."""


class NonConvergenceError(FrontFixError):
    """The boundary quadratic has no real root."""

    def __init__(self, message: str, g2: float, g1: float, g0: float):
        super().__init__(f"{message} (g2={g2:.6e}, g1={g1:.6e}, g0={g0:.6e})")
        self.g2 = g2
        self.g1 = g1
        self.g0 = g0


class RootSelectionError(FrontFixError):
    """The selected root of the boundary quadratic has the wrong sign."""


class AssemblyError(FrontFixError):
    """A banded system could not be assembled or factorized."""


class TableauError(FrontFixError):
    """Unknown, unavailable or inconsistent Butcher tableau."""


class DivergenceError(FrontFixError):
    """The time integration produced non-finite or unusable values."""

    def __init__(self, message: str, tau: float | None = None):
        if tau is not None:
            message = f"{message} at tau={tau:.6e}"
        super().__init__(message)
        self.tau = tau


class StalledStepError(DivergenceError):
    """The step-size controller could not find an acceptable step."""


class StepSizeError(FrontFixError):
    """The time step makes an implicit update singular."""


class PicardError(FrontFixError):
    """Picard iteration of an implicit step failed to converge."""


class ProbeError(FrontFixError):
    """The binomial exercise-boundary probe could not bracket the boundary."""
