"""Experiment drivers shared by the CLI and the acceptance suite."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..binomial import TreeConfig, binomial_put, extrapolated_boundary
from ..cn import CnConfig, CnSystem, integrate_cn
from ..errors import DivergenceError, DomainError, FrontFixError
from ..model import GridSpec, MarketParams, SolverState, delta_at, initial_state, price_at
from ..rk import RunStats, StepController, integrate_adaptive, integrate_fixed_rk4
from ..system import FrontFixSystem
from ..tableaus import tableau

QUANTITIES = ("value", "delta", "boundary")


@dataclass
class ConvergenceReport:
    """Successive-grid errors ``e_j`` and orders ``log2(e_{j-1}/e_j)``."""

    quantity: str
    grids: list[float]
    errors: list[float] = field(default_factory=list)
    orders: list[float] = field(default_factory=list)


def check_nested(grids, x_max: float = 3.0) -> list[float]:
    """Grids sorted coarse to fine; each must halve the previous one."""
    hs = sorted((float(h) for h in grids), reverse=True)
    if not hs:
        raise DomainError("empty grid list")
    for h in hs:
        GridSpec.from_spacing(h, x_max)
    for a, b in zip(hs, hs[1:]):
        if abs(a / b - 2.0) > 1e-9:
            raise DomainError(f"grids {a} and {b} are not nested by halving")
    return hs


def cauchy_reports(states: list[SolverState]) -> dict[str, ConvergenceReport]:
    """Errors between consecutive grids, restricted to the coarse nodes."""
    hs = [s.grid.h for s in states]
    reports = {q: ConvergenceReport(q, hs) for q in QUANTITIES}
    for a, b in zip(states, states[1:]):
        reports["value"].errors.append(float(np.max(np.abs(a.u - b.u[::2]))))
        reports["delta"].errors.append(float(np.max(np.abs(a.v - b.v[::2]))))
        reports["boundary"].errors.append(abs(a.f_b - b.f_b))
    for rep in reports.values():
        e = rep.errors
        rep.orders = [math.log2(e0 / e1) if e1 > 0 and e0 > 0 else math.inf for e0, e1 in zip(e, e[1:])]
    return reports


def solve_fixed(mode: str, params: MarketParams, h: float, k: float, T: float, x_max: float = 3.0) -> SolverState:
    """Fixed-step run: ``mode`` is ``"rk4"`` or ``"cn"``."""
    grid = GridSpec.from_spacing(h, x_max)
    s0 = initial_state(params, grid)
    if mode == "rk4":
        return integrate_fixed_rk4(s0, T, k, FrontFixSystem(params, grid)).state
    if mode == "cn":
        return integrate_cn(s0, T, CnConfig(k), CnSystem(params, grid)).state
    raise DomainError(f"unknown convergence mode {mode!r}")


def _solve_fixed_job(args):
    return solve_fixed(*args)


def convergence_study(
    mode: str,
    params: MarketParams,
    grids,
    k: float,
    T: float,
    x_max: float = 3.0,
    workers: int = 1,
) -> tuple[list[SolverState], dict[str, ConvergenceReport]]:
    hs = check_nested(grids, x_max)
    jobs = [(mode, params, h, k, T, x_max) for h in hs]
    states = list(_map(_solve_fixed_job, jobs, workers))
    return states, cauchy_reports(states)


def solver_threads() -> int:
    env = os.environ.get("SOLVER_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise DomainError(f"SOLVER_THREADS must be an integer, got {env!r}") from exc
        return max(n, 1)
    return max(min(os.cpu_count() or 1, 8), 1)


def _map(fn, jobs, workers):
    """Order-stable map, in a process pool when ``workers > 1``."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


@dataclass
class AdaptiveRun:
    pair: str
    h: float
    eps: float
    state: SolverState | None
    stats: RunStats
    wall_seconds: float
    error: str = ""

    @property
    def converged(self) -> bool:
        return self.state is not None and not self.stats.diverged


def run_adaptive(
    params: MarketParams,
    h: float,
    pair_id: str,
    eps: float,
    x_max: float = 3.0,
    warmup: bool = False,
) -> AdaptiveRun:
    """One adaptive integration; divergence is returned, not raised."""
    grid = GridSpec.from_spacing(h, x_max)
    ctrl = StepController(epsilon=eps)
    try:
        pair = tableau(pair_id)
    except FrontFixError as exc:
        stats = RunStats(pair=pair_id.upper(), diverged=True, divergence_tau=0.0, divergence_reason=str(exc))
        return AdaptiveRun(pair_id.upper(), h, eps, None, stats, 0.0, str(exc))
    if warmup:
        # short throwaway run so imports and caches do not land in the timing
        try:
            integrate_adaptive(initial_state(params, grid), min(1e-3, params.maturity), pair, ctrl, FrontFixSystem(params, grid))
        except FrontFixError:
            pass
    system = FrontFixSystem(params, grid)
    t0 = time.perf_counter()
    try:
        res = integrate_adaptive(initial_state(params, grid), params.maturity, pair, ctrl, system)
    except (DivergenceError, FrontFixError) as exc:
        stats = RunStats(
            pair=pair.id,
            diverged=True,
            divergence_tau=getattr(exc, "tau", None) or math.nan,
            divergence_reason=str(exc),
            rhs_evaluations=system.rhs_evaluations,
        )
        return AdaptiveRun(pair.id, h, eps, None, stats, time.perf_counter() - t0, str(exc))
    return AdaptiveRun(pair.id, h, eps, res.state, res.stats, time.perf_counter() - t0)


def _adaptive_job(args):
    params, h, pair_id, eps, x_max, warmup = args
    return run_adaptive(params, h, pair_id, eps, x_max, warmup)


def pairs_bench(
    params: MarketParams,
    pairs,
    grids,
    epsilons,
    x_max: float = 3.0,
    workers: int = 1,
    warmup: bool = True,
) -> list[AdaptiveRun]:
    """Every (pair, h, eps) combination, in configuration order."""
    jobs = [(params, float(h), p, float(e), x_max, warmup) for p in pairs for h in grids for e in epsilons]
    return list(_map(_adaptive_job, jobs, workers))


def spot_rows(state: SolverState, spots) -> list[tuple[float, float, float]]:
    """``(S, price, delta)`` at each spot."""
    return [(float(S), price_at(state, S), delta_at(state, S)) for S in spots]


def oracle_rows(params: MarketParams, spots, cfg: TreeConfig = TreeConfig()) -> list[tuple[float, float, float]]:
    return [(float(S), *binomial_put(params, S, cfg)) for S in spots]


def min_step_fraction(stats: RunStats, T: float) -> float:
    """Position of the smallest accepted step as a fraction of ``T``."""
    return stats.tau_of_min_step / T


# The tree boundary carries an n^(-1/2) error; after extrapolation from
# n/3 and n steps this resolution is accurate to a few 1e-3.
ORACLE_BOUNDARY_STEPS = 6001


@dataclass
class BoundaryCheck:
    """DP boundary at maturity next to the extrapolated tree boundary."""

    label: str
    run: AdaptiveRun
    oracle: float
    probes: tuple[float, float]

    @property
    def f_b(self) -> float:
        return self.run.state.f_b if self.run.converged else math.nan


def boundary_crosscheck(
    sets: dict[str, MarketParams],
    h: float = 0.0125,
    eps: float = 1e-5,
    x_max: float = 3.0,
    tree: TreeConfig = TreeConfig(ORACLE_BOUNDARY_STEPS),
) -> list[BoundaryCheck]:
    out = []
    for label, params in sets.items():
        run = run_adaptive(params, h, "DP", eps, x_max)
        est, fine, coarse = extrapolated_boundary(params, tree)
        out.append(BoundaryCheck(label, run, est, (fine, coarse)))
    return out


def resolve_boundary_set(checks: list[BoundaryCheck], target: float, tol: float) -> BoundaryCheck | None:
    """The check whose oracle boundary reproduces ``target``, if any."""
    hits = [c for c in checks if abs(c.oracle - target) <= tol]
    return min(hits, key=lambda c: abs(c.oracle - target)) if hits else None
