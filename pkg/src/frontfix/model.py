"""Market inputs, grids, solver state and price lookup.

The free boundary ``f_b(tau)`` is fixed at the origin by the change of
variable ``x = ln S - ln f_b(tau)``.  The solver works with the value
``u(x)`` and the log-space delta ``v(x) = u_x(x)`` on a uniform grid over
``[0, x_max]``; this module turns those samples back into prices and
sensitivities in asset coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StateCorruptionError

# Relative slack used by the non-negativity invariant of the value samples.
TOL_NEG = 1e-10


@dataclass(frozen=True)
class MarketParams:
    """Contract and market inputs of an American put."""

    strike: float
    rate: float
    dividend: float
    volatility: float
    maturity: float

    def __post_init__(self):
        if not self.strike > 0:
            raise DomainError(f"strike must be positive, got {self.strike}")
        if not self.volatility > 0:
            raise DomainError(f"volatility must be positive, got {self.volatility}")
        if not self.maturity > 0:
            raise DomainError(f"maturity must be positive, got {self.maturity}")
        if self.dividend < 0:
            raise DomainError(f"dividend must be non-negative, got {self.dividend}")
        if self.dividend > 0 and self.rate < self.dividend:
            raise DomainError(
                f"rate ({self.rate}) must be >= dividend ({self.dividend}) "
                "for a real boundary slope at the payoff"
            )

    @property
    def kappa(self) -> float:
        """Drift of log-moneyness, ``r - D - sigma^2/2``."""
        return self.rate - self.dividend - 0.5 * self.volatility**2

    def with_maturity(self, maturity: float) -> "MarketParams":
        return MarketParams(self.strike, self.rate, self.dividend, self.volatility, maturity)

    def as_dict(self) -> dict:
        return {
            "strike": self.strike,
            "rate": self.rate,
            "dividend": self.dividend,
            "volatility": self.volatility,
            "maturity": self.maturity,
        }


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid ``x_i = i*h``, ``i = 0..M`` on ``[0, x_max]``."""

    x_max: float
    M: int

    def __post_init__(self):
        if not self.x_max > 0:
            raise DomainError(f"x_max must be positive, got {self.x_max}")
        if self.M < 8:
            raise DomainError(f"need at least 8 intervals, got M={self.M}")

    @classmethod
    def from_spacing(cls, h: float, x_max: float = 3.0) -> "GridSpec":
        """Grid with spacing ``h``; ``x_max`` must be a multiple of ``h``."""
        M = int(round(x_max / h))
        if M <= 0 or abs(M * h - x_max) > 1e-9 * x_max:
            raise DomainError(f"x_max={x_max} is not a multiple of h={h}")
        return cls(x_max, M)

    @property
    def h(self) -> float:
        return self.x_max / self.M

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.M + 1) * self.h


@dataclass
class SolverState:
    """Grid functions and free boundary at backward time ``tau``.

    ``u[0] + f_b == strike`` and ``v[0] + f_b == 0`` hold by construction;
    node ``M`` of both vectors is pinned to zero.
    """

    tau: float
    u: np.ndarray
    v: np.ndarray
    f_b: float
    grid: GridSpec
    strike: float

    def copy(self) -> "SolverState":
        return SolverState(self.tau, self.u.copy(), self.v.copy(), self.f_b, self.grid, self.strike)

    def check(self, tol_neg: float = TOL_NEG) -> None:
        """Raise :class:`StateCorruptionError` if an invariant is violated."""
        K = self.strike
        if not (0.0 < self.f_b <= K):
            raise StateCorruptionError(f"boundary {self.f_b} outside (0, {K}]")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.v))):
            raise StateCorruptionError("non-finite grid values")
        if self.u[-1] != 0.0 or self.v[-1] != 0.0:
            raise StateCorruptionError("right boundary values must be zero")
        if abs(self.u[0] + self.f_b - K) > 1e-12 * K:
            raise StateCorruptionError("u[0] + f_b != strike")
        if abs(self.v[0] + self.f_b) > 1e-12 * K:
            raise StateCorruptionError("v[0] + f_b != 0")
        if self.u.min() < -tol_neg * K:
            raise StateCorruptionError(f"negative option value {self.u.min():.3e}")

    def snapshot(self, step_size_used: float = 0.0) -> "SolutionSnapshot":
        return SolutionSnapshot(self.tau, self.f_b, self.u.copy(), self.v.copy(), step_size_used)


@dataclass(frozen=True)
class SolutionSnapshot:
    tau: float
    f_b: float
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    step_size_used: float = 0.0


def to_log_moneyness(S: float, f_b: float) -> float:
    if not (S > 0 and f_b > 0):
        raise DomainError(f"asset ({S}) and boundary ({f_b}) must be positive")
    return math.log(S) - math.log(f_b)


def initial_state(params: MarketParams, grid: GridSpec) -> SolverState:
    """Payoff state at ``tau = 0``.

    The value vanishes on ``x >= 0``; the delta is ``-strike`` at the
    boundary node (the limit of ``v(0) = -f_b``) and zero elsewhere.
    """
    u = np.zeros(grid.M + 1)
    v = np.zeros(grid.M + 1)
    v[0] = -params.strike
    return SolverState(0.0, u, v, params.strike, grid, params.strike)


def _lagrange_cubic(values: np.ndarray, h: float, x: float) -> float:
    """Four-point Lagrange interpolation on a uniform grid starting at 0."""
    M = len(values) - 1
    j = min(int(x // h), M - 1)
    start = min(max(j - 1, 0), M - 3)
    t = x / h - start
    y0, y1, y2, y3 = values[start : start + 4]
    # Lagrange basis on the nodes t = 0, 1, 2, 3
    return (
        -y0 * (t - 1) * (t - 2) * (t - 3) / 6
        + y1 * t * (t - 2) * (t - 3) / 2
        - y2 * t * (t - 1) * (t - 3) / 2
        + y3 * t * (t - 1) * (t - 2) / 6
    )


def price_at(state: SolverState, S: float) -> float:
    """Put value at asset level ``S``."""
    if not S > 0:
        raise DomainError(f"asset level must be positive, got {S}")
    if S <= state.f_b:
        return state.strike - S
    x = to_log_moneyness(S, state.f_b)
    if x >= state.grid.x_max:
        return 0.0
    return float(_lagrange_cubic(state.u, state.grid.h, x))


def delta_at(state: SolverState, S: float) -> float:
    """Sensitivity ``dP/dS``; the solver's ``v`` is ``S dP/dS``."""
    if not S > 0:
        raise DomainError(f"asset level must be positive, got {S}")
    if S <= state.f_b:
        return -1.0
    x = to_log_moneyness(S, state.f_b)
    if x >= state.grid.x_max:
        return 0.0
    return float(_lagrange_cubic(state.v, state.grid.h, x)) / S
