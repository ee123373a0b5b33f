"""Binomial-tree reference prices for the American put.

Cox-Ross-Rubinstein and Leisen-Reimer (Peizer-Pratt method 2) lattices
with a continuous dividend yield.  These are independent of the PDE path
and serve as the ground truth in tests and reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DomainError, ProbeError
from .model import MarketParams

METHODS = ("CRR", "LR")


@dataclass(frozen=True)
class TreeConfig:
    steps: int = 15001
    method: str = "CRR"

    def __post_init__(self):
        if self.steps < 2:
            raise DomainError(f"need at least 2 tree steps, got {self.steps}")
        if self.method not in METHODS:
            raise DomainError(f"unknown tree method {self.method!r}; expected one of {METHODS}")

    @property
    def n(self) -> int:
        if self.method == "LR" and self.steps % 2 == 0:
            return self.steps + 1
        return self.steps


def _peizer_pratt(z: float, n: int) -> float:
    t = z / (n + 1.0 / 3.0 + 0.1 / (n + 1.0))
    return 0.5 + math.copysign(0.5, z) * math.sqrt(1.0 - math.exp(-t * t * (n + 1.0 / 6.0)))


def _lattice(params: MarketParams, S0: float, T: float, cfg: TreeConfig):
    n = cfg.n
    dt = T / n
    growth = math.exp((params.rate - params.dividend) * dt)
    sig = params.volatility
    if cfg.method == "CRR":
        up = math.exp(sig * math.sqrt(dt))
        down = 1.0 / up
        p = (growth - down) / (up - down)
    else:
        vol_t = sig * math.sqrt(T)
        d1 = (math.log(S0 / params.strike) + (params.rate - params.dividend + 0.5 * sig**2) * T) / vol_t
        d2 = d1 - vol_t
        p = _peizer_pratt(d2, n)
        p_star = _peizer_pratt(d1, n)
        up = growth * p_star / p
        down = (growth - p * up) / (1.0 - p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"risk-neutral probability {p} outside (0, 1); increase steps")
    return n, up, down, p, math.exp(-params.rate * dt)


def _rollback(params: MarketParams, S0: float, T: float, cfg: TreeConfig, stop: int = 0):
    """Backward induction down to tree level ``stop``; returns the values there."""
    n, up, down, p, disc = _lattice(params, S0, T, cfg)
    K = params.strike
    j = np.arange(n + 1)
    S = S0 * np.exp(j * math.log(up) + (n - j) * math.log(down))
    V = np.maximum(K - S, 0.0)
    pu, pd = disc * p, disc * (1.0 - p)
    for level in range(n - 1, stop - 1, -1):
        V = pu * V[1:] + pd * V[:-1]
        # node j at this level sits at S0 u^j d^(level-j)
        S = S[: level + 1] / down
        np.maximum(V, K - S, out=V)
    return V, S, (up, down)


def binomial_put(params: MarketParams, S0: float, cfg: TreeConfig = TreeConfig(), tau: float | None = None):
    """American put ``(price, delta)`` at spot ``S0`` with ``tau`` (default maturity) to expiry."""
    if not S0 > 0:
        raise DomainError(f"spot must be positive, got {S0}")
    T = params.maturity if tau is None else tau
    if not T > 0:
        raise DomainError(f"time to expiry must be positive, got {T}")
    V1, S1, _ = _rollback(params, S0, T, cfg, stop=1)
    n, up, down, p, disc = _lattice(params, S0, T, cfg)
    price = max(disc * (p * V1[1] + (1 - p) * V1[0]), params.strike - S0)
    delta = (V1[1] - V1[0]) / (S1[1] - S1[0])
    return float(price), float(delta)


def european_put(params: MarketParams, S0: float, tau: float | None = None) -> float:
    """Black-Scholes European put with continuous dividend yield."""
    T = params.maturity if tau is None else tau
    sig = params.volatility
    vol_t = sig * math.sqrt(T)
    d1 = (math.log(S0 / params.strike) + (params.rate - params.dividend + 0.5 * sig**2) * T) / vol_t
    d2 = d1 - vol_t
    K = params.strike
    return float(K * math.exp(-params.rate * T) * norm.cdf(-d2) - S0 * math.exp(-params.dividend * T) * norm.cdf(-d1))


def _exercised_at_root(params: MarketParams, S0: float, T: float, cfg: TreeConfig) -> bool:
    V1, _, _ = _rollback(params, S0, T, cfg, stop=1)
    n, up, down, p, disc = _lattice(params, S0, T, cfg)
    return disc * (p * V1[1] + (1 - p) * V1[0]) <= params.strike - S0


def boundary_probe(
    params: MarketParams,
    cfg: TreeConfig = TreeConfig(),
    tau: float | None = None,
    xtol: float = 1e-3,
    bracket: tuple[float, float] | None = None,
) -> float:
    """Largest spot at which the tree exercises immediately, by bisection.

    ``bracket`` is an optional ``(lo, hi)`` starting interval; it is widened
    if it does not contain the boundary.
    """
    T = params.maturity if tau is None else tau
    if not 0 < T <= params.maturity * (1 + 1e-12):
        raise DomainError(f"tau must lie in (0, T], got {T}")
    K = params.strike
    lo, hi = (0.5 * K, K * (1 - 1e-9)) if bracket is None else bracket
    hi = min(hi, K * (1 - 1e-9))
    if _exercised_at_root(params, hi, T, cfg):
        if hi >= K * (1 - 1e-9):
            return hi
        lo, hi = hi, K * (1 - 1e-9)
        if _exercised_at_root(params, hi, T, cfg):
            return hi
    while not _exercised_at_root(params, lo, T, cfg):
        hi = lo
        lo *= 0.5
        if lo < 1e-6 * K:
            raise ProbeError("could not bracket the exercise boundary from below")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if _exercised_at_root(params, mid, T, cfg):
            lo = mid
        else:
            hi = mid
    return lo


def extrapolated_boundary(
    params: MarketParams, cfg: TreeConfig = TreeConfig(), tau: float | None = None, xtol: float = 1e-4
) -> tuple[float, float, float]:
    """Boundary probe at ``n`` and ``n/3`` steps plus their extrapolation.

    The tree's exercise boundary converges like ``n^(-1/2)``; returns
    ``(extrapolated, fine, coarse)``.
    """
    n = cfg.n
    coarse_cfg = TreeConfig(max(n // 3, 2), cfg.method)
    coarse = boundary_probe(params, coarse_cfg, tau, xtol)
    fine = boundary_probe(params, cfg, tau, xtol, bracket=(coarse - 0.02 * params.strike, coarse + xtol))
    a, b = coarse_cfg.n ** -0.5, n ** -0.5
    return fine - b * (coarse - fine) / (a - b), fine, coarse
