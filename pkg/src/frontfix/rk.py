"""Explicit Runge-Kutta integration of the coupled value/delta system.

Each stage state is refreshed before its slope is evaluated: the boundary
is read off the value at node 0, ``v[0]`` is reset to ``-f_b`` and
``omega`` is recomputed from the boundary quadratic.  Embedded pairs
estimate the local error of both unknowns and drive the step size with the
classical controller ``k_new = eta k (eps/err)^p`` (``p = 1/4`` after an
accepted step, ``1/5`` after a rejection).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DivergenceError,
    DomainError,
    ModelAssumptionError,
    NonConvergenceError,
    RootSelectionError,
    StalledStepError,
    StateCorruptionError,
)
from .model import SolutionSnapshot, SolverState
from .system import FrontFixSystem
from .tableaus import RK4_A, RK4_B, RK4_C, ButcherPair

# Errors raised inside a stage that make the attempted step unusable
# without invalidating the state the step started from.
STAGE_ERRORS = (StateCorruptionError, NonConvergenceError, RootSelectionError, ModelAssumptionError, DivergenceError)


@dataclass
class StepController:
    epsilon: float = 1e-5
    eta: float = 0.9
    shrink_exponent: float = 0.2
    grow_exponent: float = 0.25
    k_min: float = 1e-12
    k_max: float = math.inf
    max_rejects_per_step: int = 60
    # step reduction after a stage failure (no usable error estimate)
    failure_shrink: float = 0.25

    def __post_init__(self):
        if not self.epsilon > 0:
            raise DomainError("tolerance must be positive")
        if not 0 < self.eta < 1:
            raise DomainError("safety factor must lie in (0, 1)")
        if not 0 < self.k_min <= self.k_max:
            raise DomainError("need 0 < k_min <= k_max")


@dataclass
class RunStats:
    pair: str = ""
    total_cpu_seconds: float = 0.0
    accepted_steps: int = 0
    rejected_steps: int = 0
    failed_attempts: int = 0
    rhs_evaluations: int = 0
    min_step: float = math.nan
    avg_step: float = math.nan
    max_step: float = math.nan
    tau_of_min_step: float = math.nan
    max_accepted_error: float = 0.0
    diverged: bool = False
    divergence_tau: float = math.nan
    divergence_reason: str = ""
    # per accepted step: tau at the end of the step, step size, boundary, error
    taus: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    steps: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    boundary: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    errors: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def summary(self) -> dict:
        keys = (
            "pair total_cpu_seconds accepted_steps rejected_steps failed_attempts rhs_evaluations "
            "min_step avg_step max_step tau_of_min_step max_accepted_error diverged divergence_tau "
            "divergence_reason"
        ).split()
        return {k: getattr(self, k) for k in keys}


@dataclass
class StepAttempt:
    candidate: SolverState
    e_u: float
    e_v: float
    # slope at the candidate when it came for free (FSAL), else None
    next_first: tuple | None


def _combine(y0: np.ndarray, k: float, weights, slopes) -> np.ndarray:
    y = y0.copy()
    for w, r in zip(weights, slopes):
        if w != 0.0:
            y += (k * w) * r
    return y


def _first_slope(state: SolverState, system: FrontFixSystem):
    u, v = state.u.copy(), state.v.copy()
    ref = system.refresh(state.tau, u, v)
    ru, rv = system.slopes(u, v, ref)
    return ru, rv, ref


def _check_finite(*arrays, tau: float) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise DivergenceError("non-finite stage values", tau)


def _run_stages(state: SolverState, k: float, a: np.ndarray, c: np.ndarray, system: FrontFixSystem, first):
    """Slopes of all stages; returns (Ru, Rv, last stage (u, v, ref))."""
    ru, rv, ref = first if first is not None else _first_slope(state, system)
    Ru, Rv = [ru], [rv]
    u, v = state.u, state.v
    for i in range(1, len(c)):
        u = _combine(state.u, k, a[i, :i], Ru)
        v = _combine(state.v, k, a[i, :i], Rv)
        _check_finite(u, v, tau=state.tau)
        ref = system.refresh(state.tau + c[i] * k, u, v)
        ru, rv = system.slopes(u, v, ref)
        _check_finite(ru, rv, tau=state.tau)
        Ru.append(ru)
        Rv.append(rv)
    return Ru, Rv, (u, v, ref)


def stage_refresh(u_stage: np.ndarray, v_stage: np.ndarray, system: FrontFixSystem, tau: float = 0.0) -> tuple[float, float, float]:
    """``(f_b, xi, omega)`` of a stage state; writes ``v_stage[0] = -f_b``."""
    ref = system.refresh(tau, u_stage, v_stage)
    return ref.f_b, ref.xi, ref.omega


def attempt_step(
    state: SolverState,
    k: float,
    pair: ButcherPair,
    system: FrontFixSystem,
    first=None,
    use_fsal: bool = True,
) -> StepAttempt:
    """One embedded step of size ``k``; ``first`` is the cached first-stage slope."""
    if not k > 0:
        raise DomainError(f"step size must be positive, got {k}")
    Ru, Rv, (u_last, v_last, ref_last) = _run_stages(state, k, pair.a, pair.c, system, first)
    tau = state.tau + k
    next_first = None
    if pair.fsal and use_fsal:
        u, v, ref = u_last, v_last, ref_last
        next_first = (Ru[-1], Rv[-1], ref)
    else:
        u = _combine(state.u, k, pair.b5, Ru)
        v = _combine(state.v, k, pair.b5, Rv)
        _check_finite(u, v, tau=state.tau)
        ref = system.refresh(tau, u, v)
    b_err = pair.b_err
    du = _combine(np.zeros_like(state.u), k, b_err, Ru)
    dv = _combine(np.zeros_like(state.v), k, b_err, Rv)
    e_u = float(np.max(np.abs(du[:-1])))
    e_v = float(np.max(np.abs(dv[1:-1])))
    if not (math.isfinite(e_u) and math.isfinite(e_v)):
        raise DivergenceError("non-finite error estimate", state.tau)
    cand = SolverState(tau, u, v, ref.f_b, state.grid, state.strike)
    return StepAttempt(cand, e_u, e_v, next_first)


def control_step(
    k_old: float, e_u: float, e_v: float, ctrl: StepController, rejects: int = 0
) -> tuple[bool, float]:
    """Accept/reject decision and the next step size."""
    err = max(e_u, e_v)
    accept = err < ctrl.epsilon
    if err == 0.0:
        k_new = ctrl.k_max
    else:
        expo = ctrl.grow_exponent if accept else ctrl.shrink_exponent
        k_new = ctrl.eta * k_old * (ctrl.epsilon / err) ** expo
    k_new = min(max(k_new, ctrl.k_min), ctrl.k_max)
    if not accept:
        if rejects + 1 > ctrl.max_rejects_per_step:
            raise StalledStepError(f"more than {ctrl.max_rejects_per_step} rejections in one step")
        if k_old <= ctrl.k_min:
            raise StalledStepError(f"step size reached the floor k_min={ctrl.k_min:g}")
    return accept, k_new


@dataclass
class AdaptiveResult:
    state: SolverState
    trajectory: list[SolutionSnapshot]
    stats: RunStats


def integrate_adaptive(
    state0: SolverState,
    T: float,
    pair: ButcherPair,
    ctrl: StepController,
    system: FrontFixSystem,
    k0: float | None = None,
    record_states: bool = False,
    use_fsal: bool = True,
) -> AdaptiveResult:
    """Advance ``state0`` to ``tau = T`` with adaptive steps.

    ``k0`` defaults to ``min(h, k_max)``.  The final step is shortened to
    land on ``T``; it is excluded from the min/avg/max step statistics
    unless it is the only step.
    """
    stats = RunStats(pair=pair.id)
    state = state0.copy()
    if T <= state.tau:
        return AdaptiveResult(state, [state.snapshot()] if record_states else [], stats)
    k = min(system.grid.h if k0 is None else k0, ctrl.k_max)
    evals0 = system.rhs_evaluations
    taus, steps, fbs, errs, truncated_flags = [], [], [], [], []
    trajectory = [state.snapshot()] if record_states else []
    first = None
    rejects = 0
    t_start = time.perf_counter()
    try:
        while state.tau < T:
            k_try = min(k, T - state.tau)
            truncated = k_try < k
            try:
                att = attempt_step(state, k_try, pair, system, first, use_fsal)
            except STAGE_ERRORS as exc:
                stats.failed_attempts += 1
                rejects += 1
                if rejects > ctrl.max_rejects_per_step or k_try <= ctrl.k_min:
                    raise StalledStepError(f"no usable step ({exc})", state.tau) from exc
                k = max(k_try * ctrl.failure_shrink, ctrl.k_min)
                continue
            accept, k_new = control_step(k_try, att.e_u, att.e_v, ctrl, rejects)
            if accept:
                state = att.candidate
                if truncated and T - state.tau < 1e-14 * max(T, 1.0):
                    state.tau = T
                first = att.next_first
                rejects = 0
                stats.accepted_steps += 1
                taus.append(state.tau)
                steps.append(k_try)
                fbs.append(state.f_b)
                errs.append(max(att.e_u, att.e_v))
                truncated_flags.append(truncated)
                if record_states:
                    trajectory.append(state.snapshot(k_try))
                k = k_new if not truncated else max(k, k_new)
            else:
                stats.rejected_steps += 1
                rejects += 1
                k = k_new
    except (StalledStepError, DivergenceError) as exc:
        stats.diverged = True
        stats.divergence_tau = state.tau
        stats.divergence_reason = str(exc)
        raise
    finally:
        stats.total_cpu_seconds = time.perf_counter() - t_start
        stats.rhs_evaluations = system.rhs_evaluations - evals0
        stats.taus = np.array(taus)
        stats.steps = np.array(steps)
        stats.boundary = np.array(fbs)
        stats.errors = np.array(errs)
        if steps:
            s = stats.steps
            mask = ~np.array(truncated_flags)
            if not mask.any():
                mask[:] = True
            sel = s[mask]
            stats.min_step = float(sel.min())
            stats.avg_step = float(sel.mean())
            stats.max_step = float(sel.max())
            stats.tau_of_min_step = float(stats.taus[mask][np.argmin(sel)])
            stats.max_accepted_error = float(stats.errors.max())
    return AdaptiveResult(state, trajectory, stats)


@dataclass
class FixedResult:
    state: SolverState
    taus: np.ndarray
    boundary: np.ndarray


def integrate_fixed_rk4(
    state0: SolverState, T: float, k: float, system: FrontFixSystem, trace: bool = False
) -> FixedResult:
    """Classical RK4 with constant step ``k`` (last step truncated onto ``T``)."""
    if not k > 0:
        raise DomainError(f"step size must be positive, got {k}")
    state = state0.copy()
    taus, fbs = [state.tau], [state.f_b]
    n_full = int(math.floor((T - state.tau) / k * (1 + 1e-12)))
    tau_start = state.tau
    n = 0
    while state.tau < T:
        n += 1
        t_target = tau_start + n * k if n <= n_full else T
        if T - t_target < 1e-12 * k:
            t_target = T
        kk = t_target - state.tau
        Ru, Rv, _ = _run_stages(state, kk, RK4_A, RK4_C, system, None)
        u = _combine(state.u, kk, RK4_B, Ru)
        v = _combine(state.v, kk, RK4_B, Rv)
        _check_finite(u, v, tau=state.tau)
        ref = system.refresh(t_target, u, v)
        state = SolverState(t_target, u, v, ref.f_b, state.grid, state.strike)
        if trace:
            taus.append(state.tau)
            fbs.append(state.f_b)
    return FixedResult(state, np.array(taus), np.array(fbs))
