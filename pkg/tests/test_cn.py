import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import NODIV
from frontfix.cn import CnConfig, CnSystem, cn_boundary_update, cn_step, integrate_cn
from frontfix.errors import DomainError, PicardError, StepSizeError
from frontfix.model import GridSpec, initial_state
from frontfix.rk import StepController, integrate_adaptive
from frontfix.system import FrontFixSystem
from frontfix.tableaus import tableau


def _system(h, params=NODIV):
    grid = GridSpec.from_spacing(h, 3.0)
    return CnSystem(params, grid), initial_state(params, grid)


@pytest.fixture(scope="module")
def cn_run():
    sys, s0 = _system(0.025)
    return integrate_cn(s0, NODIV.maturity, CnConfig(1e-4), sys, trace=True)


def test_boundary_update_identity():
    assert cn_boundary_update(90.0, 0.0, 0.0, 1e-3) == 90.0


@settings(max_examples=30, deadline=None)
@given(st.floats(-50, 0), st.floats(1e-5, 1e-2))
def test_boundary_update_constant_speed(w, k):
    got = cn_boundary_update(90.0, w, w, k)
    assert got == pytest.approx(90.0 * (1 + k * w / 2) / (1 - k * w / 2), rel=1e-14)


def test_boundary_update_singular():
    with pytest.raises(StepSizeError):
        cn_boundary_update(90.0, 0.0, 2.0, 1.0)


def test_frozen_speed_is_second_order():
    w, T, f0 = -3.0, 1.0, 90.0
    errs = []
    for n in (20, 40, 80):
        f = f0
        for _ in range(n):
            f = cn_boundary_update(f, w, w, T / n)
        errs.append(abs(f - f0 * math.exp(w * T)))
    assert errs[0] / errs[1] >= 3.7 and errs[1] / errs[2] >= 3.7


def test_zero_data_gives_zero_response():
    sys, _ = _system(0.1)
    n = sys.grid.M - 1
    assert np.array_equal(sys.implicit_factor(1e-3).solve(np.zeros(n)), np.zeros(n))
    assert np.array_equal(sys.second_derivative(np.zeros(sys.grid.M + 1), 0.0, 0.0), np.zeros(n))


def test_implicit_factor_is_cached():
    sys, _ = _system(0.1)
    assert sys.implicit_factor(1e-3) is sys.implicit_factor(1e-3)


@pytest.mark.parametrize("kw", [dict(k=0.0), dict(k=1e-3, picard_tol=0.0), dict(k=1e-3, max_picard=0)])
def test_config_validation(kw):
    with pytest.raises(DomainError):
        CnConfig(**kw)


def test_picard_cap_raises():
    sys, s0 = _system(0.1)
    with pytest.raises(PicardError):
        cn_step(s0, CnConfig(1e-3, max_picard=1), sys)


def test_picard_fixed_point_invariants():
    sys, s0 = _system(0.05)
    cfg = CnConfig(1e-4)
    state, varpi = s0, None
    K = NODIV.strike
    for _ in range(20):
        prev, prev_w = state, varpi if varpi is not None else sys.varpi(state.u, state.f_b)
        state, varpi, info = cn_step(state, cfg, sys, varpi)
        assert state.u[0] + state.f_b == pytest.approx(K, abs=1e-12 * K)
        assert state.v[0] == -state.f_b
        implied = cn_boundary_update(prev.f_b, prev_w, varpi, cfg.k)
        assert abs(implied - state.f_b) < cfg.picard_tol * K
        assert state.f_b <= prev.f_b


def test_picard_count_bound(cn_run):
    assert cn_run.max_picard <= 8


def test_boundary_monotone(cn_run):
    assert np.all(np.diff(cn_run.boundary) <= 1e-8 * NODIV.strike)


def test_time_order_second():
    fbs = []
    for k in (1e-3, 5e-4, 2.5e-4, 1.25e-4):
        sys, s0 = _system(0.1)
        fbs.append(integrate_cn(s0, 0.05, CnConfig(k), sys).state.f_b)
    d = np.abs(np.diff(fbs))
    assert d[0] / d[1] >= 3.7 and d[1] / d[2] >= 3.7


def test_agrees_with_runge_kutta_path(cn_run):
    grid = GridSpec.from_spacing(0.025, 3.0)
    rk = integrate_adaptive(
        initial_state(NODIV, grid), NODIV.maturity, tableau("DP"), StepController(1e-6), FrontFixSystem(NODIV, grid)
    )
    assert abs(rk.state.f_b - cn_run.state.f_b) <= 5e-3 * NODIV.strike
    assert cn_run.state.tau == NODIV.maturity
