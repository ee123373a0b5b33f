"""The coupled semi-discrete system ``d(u, v)/dtau = N(u, v)``.

Every evaluation first refreshes the boundary from the value at node 0
(``f_b = K - u[0]``, ``v[0] = -f_b``), closes ``omega`` through the
boundary quadratic, then applies the compact operators.  ``v''(0)`` is the
analytic ``u_xxx(0) = 6 L'(0) L''(0) - f_b``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import (
    ExtrapolationCoeffs,
    L_dprime_0,
    L_prime_0,
    boundary_L_samples,
    boundary_quadratic,
    extrapolation_coeffs,
)
from .compact import CompactSystem, DeltaSystem, rhs_u, rhs_v, second_derivative_u, second_derivative_v
from .errors import NonConvergenceError, RootSelectionError, StateCorruptionError
from .model import GridSpec, MarketParams, SolverState


@dataclass
class Refresh:
    f_b: float
    xi: float
    omega: float


class FrontFixSystem:
    """Operators and options shared by all stages of one integration.

    ``l3_form`` selects the L''' closure (see :mod:`frontfix.boundary`);
    ``coupling`` selects the delta equation's convective coupling.
    """

    def __init__(
        self,
        params: MarketParams,
        grid: GridSpec,
        order: int = 4,
        l3_form: str = "derived",
        coupling: str = "chain",
    ):
        self.params = params
        self.grid = grid
        self.coeffs: ExtrapolationCoeffs = extrapolation_coeffs(order, grid.h)
        self.l3_form = l3_form
        self.coupling = coupling
        self.csys = CompactSystem(grid, params.strike)
        self.dsys = DeltaSystem(grid)
        self.rhs_evaluations = 0

    def state(self, tau: float, u: np.ndarray, v: np.ndarray, f_b: float) -> SolverState:
        return SolverState(tau, u, v, f_b, self.grid, self.params.strike)

    def boundary_speed(self, state: SolverState) -> tuple[float, float]:
        quad = boundary_quadratic(
            boundary_L_samples(state, self.coeffs), state.f_b, self.params, self.coeffs, self.l3_form
        )
        xi = quad.smaller_root()
        if not math.isfinite(xi):
            raise NonConvergenceError("non-finite boundary speed", quad.g2, quad.g1, quad.g0)
        if xi > 0:
            raise RootSelectionError(f"boundary speed xi={xi:.6e} > 0")
        return xi, xi + self.params.kappa

    def refresh(self, tau: float, u: np.ndarray, v: np.ndarray) -> Refresh:
        """Slave ``f_b`` and ``v[0]`` to ``u[0]`` and close ``omega``; mutates ``v``."""
        K = self.params.strike
        f_b = K - u[0]
        if not (0.0 < f_b <= K) or not math.isfinite(f_b):
            raise StateCorruptionError(f"stage boundary {f_b} outside (0, {K}]")
        v[0] = u[0] - K
        xi, omega = self.boundary_speed(self.state(tau, u, v, f_b))
        return Refresh(f_b, xi, omega)

    def v_curvature_at_boundary(self, f_b: float, xi: float) -> float:
        Lp0 = L_prime_0(f_b, self.params)
        return 6.0 * Lp0 * L_dprime_0(Lp0, xi, f_b, self.params) - f_b

    def slopes(self, u: np.ndarray, v: np.ndarray, ref: Refresh) -> tuple[np.ndarray, np.ndarray]:
        """Right-hand sides for an already refreshed state."""
        self.rhs_evaluations += 1
        p = self.params
        u_pp = second_derivative_u(self.csys, u)
        v_pp = second_derivative_v(self.dsys, v, v[0], self.v_curvature_at_boundary(ref.f_b, ref.xi))
        return rhs_u(u, v, u_pp, ref.omega, p), rhs_v(v, u_pp, v_pp, ref.omega, p, self.coupling)
