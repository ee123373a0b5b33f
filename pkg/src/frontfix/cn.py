"""Crank-Nicolson time stepping of the coupled value/delta system.

The boundary is advanced with the trapezoidal rule applied to
``f_b' = varpi f_b``, where ``varpi`` is the boundary log-speed from the
three-sample boundary quadratic.  Given ``f_b`` the node-0 values are
known (``u[0] = K - f_b``, ``v[0] = -f_b``), together with the analytic
curvatures ``u''(0) = 2 L'(0)^2 - f_b`` and ``v''(0) = 6 L'(0) L''(0) - f_b``,
so both unknowns are solved on nodes ``1..M-1`` with the interior compact
operator.  The implicit boundary speed and the convective coupling are
resolved by Picard iteration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .banded import TridiagonalFactor
from .boundary import (
    L_dprime_0,
    L_prime_0,
    boundary_L_samples,
    boundary_quadratic,
    extrapolation_coeffs,
)
from .compact import DELTA_COUPLINGS
from .errors import (
    DomainError,
    NonConvergenceError,
    PicardError,
    RootSelectionError,
    StateCorruptionError,
    StepSizeError,
)
from .model import GridSpec, MarketParams, SolverState

SINGULAR_DENOMINATOR = 1e-12


@dataclass(frozen=True)
class CnConfig:
    k: float
    picard_tol: float = 1e-10  # relative to the strike
    max_picard: int = 100

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError(f"time step must be positive, got {self.k}")
        if not self.picard_tol > 0:
            raise DomainError("Picard tolerance must be positive")
        if self.max_picard < 1:
            raise DomainError("need at least one Picard iteration")


def cn_boundary_update(f_b_n: float, varpi_n: float, varpi_next: float, k: float) -> float:
    """Trapezoidal update ``f_b (1 + k varpi_n / 2) / (1 - k varpi_next / 2)``."""
    den = 1.0 - 0.5 * k * varpi_next
    if abs(den) < SINGULAR_DENOMINATOR:
        raise StepSizeError(f"boundary update is singular (1 - k varpi/2 = {den:.3e})")
    return f_b_n * (1.0 + 0.5 * k * varpi_n) / den


class CnSystem:
    """Operators of the Crank-Nicolson path for one grid."""

    def __init__(self, params: MarketParams, grid: GridSpec, coupling: str = "chain", l3_form: str = "derived"):
        if coupling not in DELTA_COUPLINGS:
            raise DomainError(f"unknown coupling {coupling!r}; expected one of {DELTA_COUPLINGS}")
        self.params = params
        self.grid = grid
        self.coupling = coupling
        self.l3_form = l3_form
        self.coeffs = extrapolation_coeffs(3, grid.h)
        self.c = 12.0 / grid.h**2
        n = grid.M - 1
        self._ones = np.ones(n - 1)
        self.B = TridiagonalFactor(self._ones, np.full(n, 10.0), self._ones)
        self._implicit: dict[float, TridiagonalFactor] = {}

    def implicit_factor(self, k: float) -> TridiagonalFactor:
        """``(1 + k r/2) B - (k/2)(sigma^2/2) c T`` on nodes ``1..M-1``."""
        fac = self._implicit.get(k)
        if fac is None:
            n = self.grid.M - 1
            th = 0.5 * k
            s2h = 0.5 * self.params.volatility**2
            g = 1.0 + th * self.params.rate
            off = g - th * s2h * self.c
            diag = 10.0 * g + 2.0 * th * s2h * self.c
            fac = TridiagonalFactor(np.full(n - 1, off), np.full(n, diag), np.full(n - 1, off))
            self._implicit[k] = fac
        return fac

    def varpi(self, u: np.ndarray, f_b: float) -> float:
        """Boundary log-speed from the three-sample quadratic."""
        K = self.params.strike
        st = SolverState(0.0, u, np.zeros_like(u), f_b, self.grid, K)
        quad = boundary_quadratic(boundary_L_samples(st, self.coeffs), f_b, self.params, self.coeffs, self.l3_form)
        xi = quad.smaller_root()
        if not math.isfinite(xi):
            raise NonConvergenceError("non-finite boundary speed", quad.g2, quad.g1, quad.g0)
        if xi > 0:
            raise RootSelectionError(f"boundary speed {xi:.6e} > 0")
        return xi

    def curvatures(self, f_b: float, varpi: float) -> tuple[float, float]:
        """``(u''(0), v''(0))`` from the boundary analytics."""
        Lp = L_prime_0(f_b, self.params)
        return 2.0 * Lp * Lp - f_b, 6.0 * Lp * L_dprime_0(Lp, varpi, f_b, self.params) - f_b

    def second_derivative(self, f: np.ndarray, f0: float, fpp0: float) -> np.ndarray:
        """Compact ``f''`` on nodes ``1..M-1`` (node M is zero)."""
        rhs = self.c * (f[:-2] - 2.0 * f[1:-1] + f[2:])
        rhs[0] = self.c * (f0 - 2.0 * f[1] + f[2]) - fpp0
        return self.B.solve(rhs)

    def _coupling_weight(self, omega: float) -> float:
        if self.coupling == "chain":
            return omega
        return omega * 0.5 * self.params.volatility**2


@dataclass
class CnStepInfo:
    picard_iterations: int
    varpi: float


def cn_step(state: SolverState, cfg: CnConfig, system: CnSystem, varpi_n: float | None = None):
    """One trapezoidal step; returns ``(new_state, varpi_{n+1}, CnStepInfo)``."""
    p = system.params
    K = p.strike
    k = cfg.k
    th = 0.5 * k
    s2h = 0.5 * p.volatility**2
    r = p.rate
    kap = p.kappa
    c = system.c
    u_n, v_n, f_n = state.u, state.v, state.f_b
    if varpi_n is None:
        varpi_n = system.varpi(u_n, f_n)
    upp0_n, vpp0_n = system.curvatures(f_n, varpi_n)
    upp_n = system.second_derivative(u_n, u_n[0], upp0_n)
    vpp_n = system.second_derivative(v_n, v_n[0], vpp0_n)
    w_n = system._coupling_weight(varpi_n + kap)
    # explicit halves (nodes 1..M-1)
    Eu = u_n[1:-1] + th * (s2h * upp_n - r * u_n[1:-1] + (varpi_n + kap) * v_n[1:-1])
    Ev = v_n[1:-1] + th * (s2h * vpp_n - r * v_n[1:-1] + w_n * upp_n)
    fac = system.implicit_factor(k)
    B = system.B

    varpi = varpi_n
    u = u_n.copy()
    v = v_n.copy()
    f_b = f_n
    tol = cfg.picard_tol * K
    for it in range(1, cfg.max_picard + 1):
        f_new = cn_boundary_update(f_n, varpi_n, varpi, k)
        if not 0.0 < f_new <= K:
            raise StateCorruptionError(f"boundary {f_new} outside (0, {K}]")
        omega = varpi + kap
        upp0, vpp0 = system.curvatures(f_new, varpi)
        u0, v0 = K - f_new, -f_new
        # value: coupling term uses the latest delta iterate
        rhs = B.matvec(Eu + th * omega * v[1:-1])
        rhs[0] += th * s2h * (c * u0 - upp0)
        u_new = np.empty_like(u)
        u_new[0], u_new[-1] = u0, 0.0
        u_new[1:-1] = fac.solve(rhs)
        upp = system.second_derivative(u_new, u0, upp0)
        rhs = B.matvec(Ev + th * system._coupling_weight(omega) * upp)
        rhs[0] += th * s2h * (c * v0 - vpp0)
        v_new = np.empty_like(v)
        v_new[0], v_new[-1] = v0, 0.0
        v_new[1:-1] = fac.solve(rhs)
        if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(v_new))):
            raise StateCorruptionError("non-finite values in implicit solve")
        varpi_next = system.varpi(u_new, f_new)
        moved = max(abs(f_new - f_b), float(np.max(np.abs(u_new - u))), float(np.max(np.abs(v_new - v))))
        u, v, f_b, varpi = u_new, v_new, f_new, varpi_next
        if moved < tol and abs(cn_boundary_update(f_n, varpi_n, varpi, k) - f_b) < tol:
            new = SolverState(state.tau + k, u, v, f_b, state.grid, K)
            return new, varpi, CnStepInfo(it, varpi)
    raise PicardError(f"Picard iteration did not converge in {cfg.max_picard} iterations at tau={state.tau:.6e}")


@dataclass
class CnResult:
    state: SolverState
    steps: int
    max_picard: int
    total_picard: int
    cpu_seconds: float
    taus: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    boundary: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def integrate_cn(state0: SolverState, T: float, cfg: CnConfig, system: CnSystem, trace: bool = False) -> CnResult:
    """Advance to ``tau = T`` with constant steps (last one shortened onto ``T``)."""
    state = state0.copy()
    varpi = None
    n_full = int(math.floor((T - state.tau) / cfg.k * (1 + 1e-12)))
    tau0 = state.tau
    taus, fbs = [state.tau], [state.f_b]
    steps = max_it = total_it = 0
    t0 = time.perf_counter()
    while state.tau < T:
        target = tau0 + (steps + 1) * cfg.k if steps < n_full else T
        if T - target < 1e-12 * cfg.k:
            target = T
        step_cfg = cfg if abs(target - state.tau - cfg.k) < 1e-14 else CnConfig(target - state.tau, cfg.picard_tol, cfg.max_picard)
        state, varpi, info = cn_step(state, step_cfg, system, varpi)
        state.tau = target
        steps += 1
        max_it = max(max_it, info.picard_iterations)
        total_it += info.picard_iterations
        if trace:
            taus.append(state.tau)
            fbs.append(state.f_b)
    return CnResult(state, steps, max_it, total_it, time.perf_counter() - t0, np.array(taus), np.array(fbs))
