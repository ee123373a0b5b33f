"""Fourth-order compact second-derivative operators.

Interior nodes use ``f''_{i-1} + 10 f''_i + f''_{i+1} = 12/h^2 (f_{i-1} - 2 f_i
+ f_{i+1})``.  For the value ``u`` the row at ``x = 0`` is the third-order
closure ``7 f''_0 + 6 f''_1 - f''_2 = 24/h^2 (f_1 - f_0) - 24/h f'_0`` with
``f'_0`` eliminated through the Robin relation ``u_x(0) = u(0) - K``.  The
delta ``v`` is solved on nodes ``1..M-1`` with ``v(0)`` and ``v''(0)``
supplied from the boundary analytics.  Node ``M`` is a homogeneous
Dirichlet node and is eliminated from both systems.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banded import TridiagonalFactor
from .errors import DomainError
from .model import GridSpec, MarketParams

DELTA_COUPLINGS = ("chain", "printed")


@dataclass(frozen=True)
class RobinRow:
    """Row 0 of ``A``, ``B`` and the load coefficient (multiplies the strike)."""

    a_row: tuple[float, float]
    b_row: tuple[float, float, float]
    load: float


def robin_row_closure(h: float) -> RobinRow:
    if not h > 0:
        raise DomainError(f"grid spacing must be positive, got {h}")
    a = 1.0 + h
    c = 12.0 / h**2
    return RobinRow(a_row=(-2.0 * a * c, 2.0 * c), b_row=(7.0, 6.0, -1.0), load=24.0 / h)


class CompactSystem:
    """``B u'' = A u + f_u`` on nodes ``0..M-1``; ``B`` is factorized once."""

    def __init__(self, grid: GridSpec, strike: float):
        M, h = grid.M, grid.h
        self.grid = grid
        self.strike = strike
        self.c = 12.0 / h**2
        row = robin_row_closure(h)
        self.robin = row
        self.a_diag0 = row.a_row[0]
        self.a_upper0 = row.a_row[1]
        lower = np.ones(M - 1)
        diag = np.full(M, 10.0)
        upper = np.ones(M - 1)
        diag[0], upper[0] = row.b_row[0], row.b_row[1]
        self.B = TridiagonalFactor(lower, diag, upper, corner=row.b_row[2])
        self.f_u = np.zeros(M)
        self.f_u[0] = row.load * strike

    def apply_A(self, u: np.ndarray) -> np.ndarray:
        """``A u`` for ``u`` holding nodes ``0..M`` (node M is zero)."""
        out = np.empty(self.grid.M)
        out[1:] = self.c * (u[:-2] - 2.0 * u[1:-1] + u[2:])[: self.grid.M - 1]
        out[0] = self.a_diag0 * u[0] + self.a_upper0 * u[1]
        return out

    def dense_A(self) -> np.ndarray:
        M = self.grid.M
        A = self.c * (np.diag(np.full(M, -2.0)) + np.diag(np.ones(M - 1), 1) + np.diag(np.ones(M - 1), -1))
        A[0, 0], A[0, 1] = self.a_diag0, self.a_upper0
        return A


def second_derivative_u(sys: CompactSystem, u: np.ndarray, load: bool = True) -> np.ndarray:
    """``u''`` at nodes ``0..M-1`` (one banded solve)."""
    rhs = sys.apply_A(u)
    if load:
        rhs += sys.f_u
    return sys.B.solve(rhs)


class DeltaSystem:
    """Interior compact system for the delta on nodes ``1..M-1``."""

    def __init__(self, grid: GridSpec):
        n = grid.M - 1
        self.grid = grid
        self.c = 12.0 / grid.h**2
        self.B_v = TridiagonalFactor(np.ones(n - 1), np.full(n, 10.0), np.ones(n - 1))


def second_derivative_v(
    dsys: DeltaSystem, v: np.ndarray, v0: float, vpp0: float, vppM: float = 0.0
) -> np.ndarray:
    """``v''`` at nodes ``1..M-1`` given the boundary value and curvature at 0."""
    c = dsys.c
    rhs = c * (v[:-2] - 2.0 * v[1:-1] + v[2:])
    rhs[0] = c * (v0 - 2.0 * v[1] + v[2]) - vpp0
    rhs[-1] -= vppM
    return dsys.B_v.solve(rhs)


def rhs_u(u: np.ndarray, v: np.ndarray, u_pp: np.ndarray, omega: float, params: MarketParams) -> np.ndarray:
    """``(sigma^2/2) u'' + omega v - r u`` on nodes ``0..M-1``; node M is 0."""
    out = np.zeros_like(u)
    out[:-1] = 0.5 * params.volatility**2 * u_pp + omega * v[:-1] - params.rate * u[:-1]
    return out


def rhs_v(
    v: np.ndarray,
    u_pp: np.ndarray,
    v_pp: np.ndarray,
    omega: float,
    params: MarketParams,
    coupling: str = "chain",
) -> np.ndarray:
    """``(sigma^2/2) v'' + omega u'' - r v`` on nodes ``1..M-1``.

    Nodes 0 and M are returned as zero: ``v(0)`` is slaved to the boundary.
    With ``coupling="printed"`` the ``omega u''`` term carries an extra
    ``sigma^2/2`` factor.
    """
    s2h = 0.5 * params.volatility**2
    if coupling == "chain":
        w = omega
    elif coupling == "printed":
        w = omega * s2h
    else:
        raise DomainError(f"unknown coupling {coupling!r}; expected one of {DELTA_COUPLINGS}")
    out = np.zeros_like(v)
    out[1:-1] = s2h * v_pp + w * u_pp[1:] - params.rate * v[1:-1]
    return out
