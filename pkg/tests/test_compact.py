import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontfix.compact import (
    CompactSystem,
    DeltaSystem,
    rhs_u,
    rhs_v,
    robin_row_closure,
    second_derivative_u,
    second_derivative_v,
)
from frontfix.errors import DomainError
from frontfix.model import GridSpec, MarketParams

K = 5.0
A = 1.0
B = 3.0 * A - K  # makes u'(0) = u(0) - K


def mms(x):
    """Test function obeying the Robin relation at 0, negligible at x = 8."""
    e = np.exp(-(x**2))
    u = A * np.exp(-2 * x) + B * np.sin(x) * e
    upp = 4 * A * np.exp(-2 * x) + B * e * (-np.sin(x) - 4 * x * np.cos(x) + (4 * x**2 - 2) * np.sin(x))
    return u, upp


def order(errors):
    return [math.log2(a / b) for a, b in zip(errors, errors[1:])]


HS = (0.1, 0.05, 0.025, 0.0125)


def _u_errors():
    interior, row0 = [], []
    for h in HS:
        grid = GridSpec.from_spacing(h, 8.0)
        u, upp = mms(grid.nodes)
        u[-1] = 0.0
        got = second_derivative_u(CompactSystem(grid, K), u)
        row0.append(abs(got[0] - upp[0]))
        # nodes at x in [1, 4]: the boundary row's influence has died out
        sel = slice(int(round(1 / h)), int(round(4 / h)))
        interior.append(np.max(np.abs(got[sel] - upp[sel])))
    return interior, row0


def test_robin_row_coefficients():
    row = robin_row_closure(0.1)
    assert row.b_row == (7.0, 6.0, -1.0)
    assert row.a_row == pytest.approx((-2 * 1.1 * 1200, 2 * 1200))
    assert row.load == pytest.approx(240.0)
    with pytest.raises(DomainError):
        robin_row_closure(0.0)


def test_manufactured_orders_value_operator():
    interior, row0 = _u_errors()
    assert min(order(interior)) >= 3.8
    assert min(order(row0)) >= 2.8


def test_manufactured_order_delta_operator():
    errs = []
    for h in HS:
        grid = GridSpec.from_spacing(h, 8.0)
        v, vpp = mms(grid.nodes)
        got = second_derivative_v(DeltaSystem(grid), v, v[0], vpp[0])
        # up to x = 6, away from the truncated far end
        n = int(round(6 / h))
        errs.append(np.max(np.abs(got[:n] - vpp[1 : n + 1])))
    assert min(order(errs)) >= 3.8


def test_dense_A_matches_apply():
    grid = GridSpec.from_spacing(0.1, 3.0)
    sys = CompactSystem(grid, 100.0)
    u = np.random.default_rng(1).normal(size=grid.M + 1)
    u[-1] = 0.0
    assert np.allclose(sys.dense_A() @ u[:-1], sys.apply_A(u))


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_exact_on_cubics_given_end_curvatures(c1, c2):
    grid = GridSpec.from_spacing(0.05, 3.0)
    x = grid.nodes
    f = c1 * x**2 + c2 * x**3
    fpp = 2 * c1 + 6 * c2 * x
    got = second_derivative_v(DeltaSystem(grid), f, f[0], fpp[0], vppM=fpp[-1])
    assert np.allclose(got, fpp[1:-1], atol=1e-8)


def test_rhs_shapes_and_pinned_nodes():
    p = MarketParams(100.0, 0.05, 0.0, 0.2, 0.25)
    n = 11
    u = np.linspace(1, 0, n)
    v = -np.linspace(1, 0, n)
    upp = np.ones(n - 1)
    vpp = np.ones(n - 2)
    ru = rhs_u(u, v, upp, -0.5, p)
    rv = rhs_v(v, upp, vpp, -0.5, p)
    assert ru[-1] == 0.0 and rv[0] == 0.0 and rv[-1] == 0.0
    assert ru[0] == pytest.approx(0.02 * 1 - 0.5 * v[0] - 0.05 * u[0])
    rv_printed = rhs_v(v, upp, vpp, -0.5, p, coupling="printed")
    assert rv_printed[1] == pytest.approx(0.02 - 0.5 * 0.02 - 0.05 * v[1])
    with pytest.raises(DomainError):
        rhs_v(v, upp, vpp, -0.5, p, coupling="other")
