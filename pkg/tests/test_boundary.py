import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from frontfix.boundary import (
    FOURTH_ORDER_ALPHA,
    FOURTH_ORDER_GAMMA,
    THIRD_ORDER_ALPHA,
    THIRD_ORDER_GAMMA,
    L_dprime_0,
    L_prime_0,
    L_tprime_0,
    QuadraticCoeffs,
    boundary_L_samples,
    boundary_quadratic,
    extrapolation_coeffs,
    intermediate_L,
    xi_and_omega,
)
from frontfix.errors import DomainError, ModelAssumptionError, NonConvergenceError, StateCorruptionError
from frontfix.model import GridSpec, MarketParams, initial_state
from frontfix.rk import integrate_fixed_rk4
from frontfix.system import FrontFixSystem


# --- weights ---------------------------------------------------------------


def _weights_from_conditions(n, last):
    """Solve for alpha_1..alpha_n that kill x^4..x^(n+2) with alpha_n = last."""
    a = sp.symbols(f"a1:{n + 1}")
    eqs = [sum(a[i] * (i + 1) ** p for i in range(n)) for p in range(4, n + 3)]
    eqs.append(a[n - 1] - last)
    sol = sp.solve(eqs, a)
    return [Fraction(str(sol[s])) for s in a]


@pytest.mark.parametrize("alpha,gamma", [(FOURTH_ORDER_ALPHA, FOURTH_ORDER_GAMMA), (THIRD_ORDER_ALPHA, THIRD_ORDER_GAMMA)])
def test_weights_solve_the_cancellation_conditions(alpha, gamma):
    assert list(alpha) == _weights_from_conditions(len(alpha), int(alpha[-1]))
    for j, g in enumerate(gamma):
        assert g == sum(a * Fraction(i + 1) ** (j + 1) for i, a in enumerate(alpha)) / math.factorial(j + 1)


def test_alpha0_annihilates_constants():
    c = extrapolation_coeffs(4, 0.1)
    assert c.alpha0 == pytest.approx(-5845 / 27)
    assert c.alpha0 + sum(c.alpha) == pytest.approx(0.0, abs=1e-12)
    c3 = extrapolation_coeffs(3, 0.1)
    assert c3.alpha0 + sum(c3.alpha) == pytest.approx(0.0, abs=1e-12)
    assert sum(FOURTH_ORDER_ALPHA) == Fraction(5845, 27)


@pytest.mark.parametrize("order", [3, 4])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_identity_exact_for_low_powers(order, p):
    xt = 0.037
    c = extrapolation_coeffs(order, xt)
    lhs = sum(a * ((i + 1) * xt) ** p for i, a in enumerate(c.alpha))
    # derivatives of x^p at 0: only the p-th is nonzero and equals p!
    rhs = c.gamma[p - 1] * xt**p * math.factorial(p)
    assert lhs == pytest.approx(rhs, rel=1e-13)


@pytest.mark.parametrize("p", [4, 5, 6])
def test_fourth_order_set_kills_p4_to_p6(p):
    c = extrapolation_coeffs(4, 1.0)
    assert abs(sum(a * (i + 1) ** p for i, a in enumerate(c.alpha))) < 1e-9


def test_fourth_order_truncation_is_seventh_order():
    f = np.exp  # derivatives up to third order are removed below
    def resid(xt):
        c = extrapolation_coeffs(4, xt)
        lhs = sum(a * (f((i + 1) * xt) - 1.0) for i, a in enumerate(c.alpha))
        return lhs - (c.gamma[0] * xt + c.gamma[1] * xt**2 + c.gamma[2] * xt**3)
    r1, r2 = resid(0.2), resid(0.1)
    assert abs(r1 / r2) >= 2**6 * 0.9


def test_third_order_set_kills_p4_p5_but_not_p6():
    c = extrapolation_coeffs(3, 1.0)
    for p in (4, 5):
        assert abs(sum(a * (i + 1) ** p for i, a in enumerate(c.alpha))) < 1e-9
    assert abs(sum(a * (i + 1) ** 6 for i, a in enumerate(c.alpha))) > 1.0


def test_bad_order():
    with pytest.raises(DomainError):
        extrapolation_coeffs(5, 0.1)
    with pytest.raises(DomainError):
        extrapolation_coeffs(4, 0.0)


# --- closed-form boundary derivatives ----------------------------------------


def test_L_prime_examples():
    assert L_prime_0(100.0, MarketParams(100, 0.05, 0.0, 0.2, 1)) == pytest.approx(math.sqrt(5) / 0.2)
    assert L_prime_0(100.0, MarketParams(100, 0.05, 0.05, 0.2, 1)) == 0.0
    p = MarketParams(100, 0.07, 0.03, 0.4, 0.5)
    assert L_prime_0(80.0623, p) == pytest.approx(math.sqrt(7 - 2.401869) / 0.4, rel=1e-6)
    with pytest.raises(ModelAssumptionError):
        L_prime_0(200.0, MarketParams(100, 0.03, 0.03, 0.2, 1))


def test_L_dprime_examples(nodiv):
    Lp = L_prime_0(100.0, nodiv)
    assert L_dprime_0(Lp, -nodiv.kappa, 100.0, nodiv) == pytest.approx(0.0, abs=1e-14)
    assert L_dprime_0(Lp, 0.0, 100.0, nodiv) == pytest.approx(-2 * Lp * nodiv.kappa / (3 * 0.04))
    with pytest.raises(ModelAssumptionError):
        L_dprime_0(0.0, 0.0, 100.0, nodiv)


def test_L_tprime_examples(nodiv):
    Lp = L_prime_0(100.0, nodiv)
    s2, k = 0.04, nodiv.kappa
    assert L_tprime_0(Lp, 0.0, 100.0, nodiv) == pytest.approx(2 * Lp * k**2 / (3 * s2**2) + 0.05 * Lp / (2 * s2))
    # leading coefficient
    q = [L_tprime_0(Lp, x, 100.0, nodiv) for x in (-1.0, 0.0, 1.0)]
    assert (q[0] + q[2] - 2 * q[1]) / 2 == pytest.approx(2 * Lp / (3 * s2**2))


def _taylor_oracle():
    """L''(0), L'''(0) by matching powers of x in the value PDE, with sympy."""
    x, r, D, s, K, f, xi = sp.symbols("x r D sigma K f xi", real=True)
    l1, l2, l3, l4 = sp.symbols("l1 l2 l3 l4")
    L = l1 * x + l2 * x**2 / 2 + l3 * x**3 / 6 + l4 * x**4 / 24
    U = L**2 + K - sp.exp(x) * f
    fp = xi * f
    # tau-derivative of U: dL/dtau contributes at order x^3 and above only
    # through l1(f(tau)); l2, l3 enter U_tau at orders that do not reach x^2.
    l1_of_f = sp.sqrt(r * K - D * f) / s
    dl1 = sp.diff(l1_of_f, f) * fp
    U_tau = sp.diff(U, l1) * dl1 - sp.exp(x) * fp
    kap = r - D - s**2 / 2
    R = U_tau - s**2 / 2 * sp.diff(U, x, 2) - (xi + kap) * sp.diff(U, x) + r * U
    ser = sp.expand(sp.series(R, x, 0, 3).removeO())
    c0, c1, c2 = (ser.coeff(x, j) for j in range(3))
    sub1 = {l1: l1_of_f}
    assert sp.simplify(c0.subs(sub1)) == 0
    L2 = sp.solve(c1.subs(sub1), l2)[0]
    L3 = sp.solve(c2.subs(sub1).subs(l2, L2), l3)[0]
    return sp.lambdify((r, D, s, K, f, xi), L2), sp.lambdify((r, D, s, K, f, xi), L3)


_L2, _L3 = _taylor_oracle()


@given(
    r=st.floats(0.01, 0.1),
    D=st.floats(0.0, 0.05),
    s=st.floats(0.1, 0.6),
    frac=st.floats(0.5, 0.99),
    xi=st.floats(-5.0, 0.0),
)
@settings(max_examples=40, deadline=None)
def test_boundary_derivatives_match_taylor_oracle(r, D, s, frac, xi):
    if D > r:
        D = r
    p = MarketParams(100.0, r, D, s, 1.0)
    f = frac * 100.0
    Lp = L_prime_0(f, p)
    assert L_dprime_0(Lp, xi, f, p) == pytest.approx(_L2(r, D, s, 100.0, f, xi), rel=1e-10, abs=1e-10)
    assert L_tprime_0(Lp, xi, f, p) == pytest.approx(_L3(r, D, s, 100.0, f, xi), rel=1e-9, abs=1e-9)


def test_printed_third_derivative_differs_only_with_dividends(nodiv, div_a):
    Lp = L_prime_0(90.0, nodiv)
    assert L_tprime_0(Lp, -0.3, 90.0, nodiv, "printed") == L_tprime_0(Lp, -0.3, 90.0, nodiv, "derived")
    Lp = L_prime_0(90.0, div_a)
    assert L_tprime_0(Lp, -0.3, 90.0, div_a, "printed") != L_tprime_0(Lp, -0.3, 90.0, div_a, "derived")
    with pytest.raises(DomainError):
        L_tprime_0(Lp, -0.3, 90.0, div_a, "other")


# --- quadratic -----------------------------------------------------------------


def test_smaller_root_example():
    assert QuadraticCoeffs(1.0, 3.0, 2.0).smaller_root() == pytest.approx(-2.0)


def test_linear_fallback():
    assert QuadraticCoeffs(1e-20, 2.0, 4.0).smaller_root() == pytest.approx(-2.0)


def test_negative_discriminant():
    with pytest.raises(NonConvergenceError) as exc:
        QuadraticCoeffs(1.0, 0.0, 1.0).smaller_root()
    assert exc.value.g2 == 1.0


@given(g2=st.floats(1e-6, 1e3), g1=st.floats(-1e3, 1e3), g0=st.floats(-1e3, 1e3))
@settings(max_examples=200, deadline=None)
def test_root_residual(g2, g1, g0):
    q = QuadraticCoeffs(g2, g1, g0)
    if q.discriminant < 0:
        return
    xi = q.smaller_root()
    scale = max(abs(g2 * xi * xi), abs(g1 * xi), abs(g0), 1e-300)
    assert abs(q.residual(xi)) <= 1e-9 * scale
    other = (-g1 + math.sqrt(q.discriminant)) / (2 * g2)
    assert xi <= other + 1e-9 * max(1.0, abs(other))


# --- on solver states ------------------------------------------------------------


def test_intermediate_L_clamp():
    assert intermediate_L(-1e-13, 0.0, 100.0, 100.0) == 0.0
    with pytest.raises(StateCorruptionError):
        intermediate_L(-1.0, 0.0, 100.0, 100.0)


def test_payoff_state_gives_finite_negative_xi(nodiv):
    st0 = initial_state(nodiv, GridSpec.from_spacing(0.0125))
    xi, omega = xi_and_omega(st0, nodiv, extrapolation_coeffs(4, 0.0125))
    assert math.isfinite(xi) and xi < 0
    assert omega - xi == pytest.approx(nodiv.kappa, rel=1e-12)


def test_samples_need_grid_multiple(nodiv):
    st0 = initial_state(nodiv, GridSpec.from_spacing(0.1))
    with pytest.raises(DomainError):
        boundary_L_samples(st0, extrapolation_coeffs(4, 0.15))


def test_xi_matches_boundary_trajectory(nodiv):
    """xi f_b reproduces the slope of the computed boundary at tau = T."""
    g = GridSpec.from_spacing(0.0125)
    sys_ = FrontFixSystem(nodiv, g)
    res = integrate_fixed_rk4(initial_state(nodiv, g), 0.25, 1e-4, sys_, trace=True)
    xi, _ = xi_and_omega(res.state, nodiv, sys_.coeffs)
    slope = (res.boundary[-1] - res.boundary[-3]) / (res.taus[-1] - res.taus[-3])
    assert xi < 0
    assert xi * res.state.f_b == pytest.approx(slope, rel=0.02)
    q = boundary_quadratic(boundary_L_samples(res.state, sys_.coeffs), res.state.f_b, nodiv, sys_.coeffs)
    assert abs(q.residual(xi)) <= 1e-9 * max(abs(q.g0), abs(q.g1 * xi))
