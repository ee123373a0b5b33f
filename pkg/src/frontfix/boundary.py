"""Semi-analytical closure of the convective coefficient.

Near the fixed boundary the value is written as ``u = L^2 + K - e^x f_b``
with ``L`` Lipschitz.  The PDE and its first two x-derivatives, evaluated at
``x = 0``, give ``L'(0)``, ``L''(0)`` and ``L'''(0)`` in closed form as
functions of the unknown boundary log-speed ``xi = f_b'/f_b``.  Matching
these against an extrapolated Taylor sum of ``L`` sampled at
``x~, 2x~, ...`` yields a quadratic in ``xi``; its smaller root closes the
coefficient ``omega = xi + kappa`` of the convective term.

Two weight sets are provided: the four-sample set (truncation
``O(x~^7)``) used by the Runge-Kutta path and the three-sample set used by
the Crank-Nicolson path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DomainError,
    ModelAssumptionError,
    NonConvergenceError,
    RootSelectionError,
    StateCorruptionError,
)
from .model import MarketParams, SolverState

# Clamp window for the radicand of L, relative to the strike.
RADICAND_CLAMP = 1e-12
# Relative size of g2 below which the quadratic is solved as a linear equation.
DEGENERATE_G2 = 1e-14

# L''' as obtained by differentiating the PDE twice at x = 0 ("derived"), or
# with the dividend term of the xi coefficient scaled by sigma^2 rather than
# sigma^4 ("printed").  The two agree when D = 0.
L3_FORMS = ("derived", "printed")


@dataclass(frozen=True)
class ExtrapolationCoeffs:
    """Weights of the extrapolated Taylor sum.

    ``sum_i alpha[i-1] * L(i*x_tilde) = gamma[0] x~ L' + gamma[1] x~^2 L''
    + gamma[2] x~^3 L'''`` up to the truncation error of the set.  The
    weight ``alpha0`` multiplies ``L(0) = 0`` and never enters a sum; it is
    kept so that the weights annihilate constants.
    """

    order: int
    alpha: tuple[float, ...]
    gamma: tuple[float, float, float]
    alpha0: float
    x_tilde: float

    def __post_init__(self):
        if not self.x_tilde > 0:
            raise DomainError(f"x_tilde must be positive, got {self.x_tilde}")
        if len(self.alpha) != self.order:
            raise DomainError("one alpha weight per sample expected")


# Exact weights; gamma_j = sum_i alpha_i i^(j+1) / (j+1)!.
FOURTH_ORDER_ALPHA = (Fraction(256), Fraction(-48), Fraction(256, 27), Fraction(-1))
FOURTH_ORDER_GAMMA = (Fraction(4980, 27), Fraction(600, 9), Fraction(32, 3))
THIRD_ORDER_ALPHA = (Fraction(81), Fraction(-81, 8), Fraction(1))
THIRD_ORDER_GAMMA = (Fraction(255, 4), Fraction(99, 4), Fraction(9, 2))


def extrapolation_coeffs(order: int, x_tilde: float) -> ExtrapolationCoeffs:
    if order == 4:
        alpha, gamma = FOURTH_ORDER_ALPHA, FOURTH_ORDER_GAMMA
    elif order == 3:
        alpha, gamma = THIRD_ORDER_ALPHA, THIRD_ORDER_GAMMA
    else:
        raise DomainError(f"extrapolation order must be 3 or 4, got {order}")
    return ExtrapolationCoeffs(
        order=order,
        alpha=tuple(float(a) for a in alpha),
        gamma=tuple(float(g) for g in gamma),
        alpha0=float(-sum(alpha)),
        x_tilde=float(x_tilde),
    )


def intermediate_L(u_at_x, x, f_b: float, strike: float):
    """``sqrt(u - K + e^x f_b)`` with roundoff-scale negatives clamped to 0."""
    radicand = np.asarray(u_at_x, dtype=float) - strike + np.exp(x) * f_b
    if np.any(radicand < -RADICAND_CLAMP * strike):
        raise StateCorruptionError(
            f"negative radicand {np.min(radicand):.3e} in intermediate function"
        )
    out = np.sqrt(np.maximum(radicand, 0.0))
    return float(out) if out.ndim == 0 else out


def L_prime_0(f_b: float, params: MarketParams) -> float:
    radicand = params.rate * params.strike - params.dividend * f_b
    if radicand < 0:
        raise ModelAssumptionError(
            f"r*K - D*f_b = {radicand:.6e} < 0; boundary slope would be complex"
        )
    return math.sqrt(radicand) / params.volatility


def _check_lp0(Lp0: float) -> None:
    if Lp0 <= 0:
        raise ModelAssumptionError("L'(0) = 0: boundary derivatives are singular")


def _dprime_terms(Lp0: float, f_b: float, params: MarketParams) -> tuple[float, float]:
    """``(d1, d0)`` with ``L''(0) = d1*xi + d0``."""
    s2 = params.volatility**2
    d1 = -2.0 * Lp0 / (3.0 * s2)
    d0 = d1 * params.kappa - params.dividend * f_b / (3.0 * s2 * Lp0)
    return d1, d0


def _tprime_terms(
    Lp0: float, f_b: float, params: MarketParams, form: str = "derived"
) -> tuple[float, float, float]:
    """``(c2, c1, c0)`` with ``L'''(0) = c2*xi^2 + c1*xi + c0``."""
    s2 = params.volatility**2
    s4 = s2 * s2
    kap = params.kappa
    q = params.dividend * f_b
    c2 = 2.0 * Lp0 / (3.0 * s4)
    if form == "derived":
        c1 = 4.0 * Lp0 * kap / (3.0 * s4) - q / (3.0 * s4 * Lp0)
    elif form == "printed":
        c1 = 4.0 * Lp0 * kap / (3.0 * s4) - 2.0 * q / (3.0 * s2 * Lp0)
    else:
        raise DomainError(f"unknown L''' form {form!r}; expected one of {L3_FORMS}")
    c0 = (
        2.0 * Lp0 * kap**2 / (3.0 * s4)
        + q * kap / (6.0 * s4 * Lp0)
        - q**2 / (12.0 * s4 * Lp0**3)
        + params.rate * Lp0 / (2.0 * s2)
        - q / (4.0 * s2 * Lp0)
    )
    return c2, c1, c0


def L_dprime_0(Lp0: float, xi: float, f_b: float, params: MarketParams) -> float:
    _check_lp0(Lp0)
    d1, d0 = _dprime_terms(Lp0, f_b, params)
    return d1 * xi + d0


def L_tprime_0(
    Lp0: float, xi: float, f_b: float, params: MarketParams, form: str = "derived"
) -> float:
    _check_lp0(Lp0)
    c2, c1, c0 = _tprime_terms(Lp0, f_b, params, form)
    return (c2 * xi + c1) * xi + c0


@dataclass(frozen=True)
class QuadraticCoeffs:
    """``g2 xi^2 + g1 xi + g0 = 0``."""

    g2: float
    g1: float
    g0: float

    @property
    def discriminant(self) -> float:
        return self.g1 * self.g1 - 4.0 * self.g2 * self.g0

    def smaller_root(self) -> float:
        g2, g1, g0 = self.g2, self.g1, self.g0
        if abs(g2) < DEGENERATE_G2 * abs(g1):
            return -g0 / g1
        disc = self.discriminant
        if disc < 0:
            raise NonConvergenceError("boundary quadratic has no real root", g2, g1, g0)
        sq = math.sqrt(disc)
        if g2 > 0 and g1 <= 0:
            # cancellation-free form of (-g1 - sq) / (2 g2)
            den = -g1 + sq
            return 2.0 * g0 / den if den > 0 else 0.0
        return (-g1 - sq) / (2.0 * g2)

    def residual(self, xi: float) -> float:
        return (self.g2 * xi + self.g1) * xi + self.g0


def boundary_quadratic(
    L_samples,
    f_b: float,
    params: MarketParams,
    coeffs: ExtrapolationCoeffs,
    form: str = "derived",
) -> QuadraticCoeffs:
    """Assemble the quadratic for ``xi`` from samples ``L(i*x~)``, i >= 1."""
    Lp0 = L_prime_0(f_b, params)
    _check_lp0(Lp0)
    xt = coeffs.x_tilde
    gam0, gam1, gam2 = coeffs.gamma
    d1, d0 = _dprime_terms(Lp0, f_b, params)
    c2, c1, c0 = _tprime_terms(Lp0, f_b, params, form)
    m = 0.0
    for a, L in zip(coeffs.alpha, L_samples):
        m += a * L
    t3 = gam2 * xt**3
    t2 = gam1 * xt**2
    return QuadraticCoeffs(
        g2=t3 * c2,
        g1=t3 * c1 + t2 * d1,
        g0=t3 * c0 + t2 * d0 + gam0 * xt * Lp0 - m,
    )


def boundary_L_samples(state: SolverState, coeffs: ExtrapolationCoeffs) -> np.ndarray:
    """``L`` at ``x~, 2x~, ...``; ``x~`` must be a whole number of grid steps."""
    h = state.grid.h
    stride = int(round(coeffs.x_tilde / h))
    if stride < 1 or abs(stride * h - coeffs.x_tilde) > 1e-9 * h:
        raise DomainError(f"x_tilde={coeffs.x_tilde} is not a multiple of h={h}")
    idx = stride * np.arange(1, coeffs.order + 1)
    if idx[-1] > state.grid.M:
        raise DomainError("extrapolation samples fall outside the grid")
    return intermediate_L(state.u[idx], idx * h, state.f_b, state.strike)


def xi_and_omega(
    state: SolverState,
    params: MarketParams,
    coeffs: ExtrapolationCoeffs,
    form: str = "derived",
) -> tuple[float, float]:
    """Boundary log-speed ``xi = f_b'/f_b`` and ``omega = xi + kappa``."""
    quad = boundary_quadratic(boundary_L_samples(state, coeffs), state.f_b, params, coeffs, form)
    xi = quad.smaller_root()
    if not math.isfinite(xi):
        raise NonConvergenceError("non-finite boundary speed", quad.g2, quad.g1, quad.g0)
    if xi > 0:
        raise RootSelectionError(f"boundary speed xi={xi:.6e} > 0 (boundary must not rise)")
    return xi, xi + params.kappa
