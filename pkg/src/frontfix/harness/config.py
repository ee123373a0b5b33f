"""Run configuration: one JSON document, with CLI flags layered on top."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..binomial import METHODS, TreeConfig
from ..errors import DomainError
from ..model import MarketParams
from .reference import PARAMS


@dataclass
class RunConfig:
    params: MarketParams = PARAMS["div_a"]
    h: float = 0.01
    x_max: float = 3.0
    grids: list[float] = field(default_factory=list)  # empty: command default
    pair: str = "DP"
    pairs: list[str] = field(default_factory=lambda: ["DP", "CK", "ST", "BS"])
    eps: float = 1e-5
    eps_list: list[float] = field(default_factory=lambda: [1e-5])
    spots: list[float] = field(default_factory=lambda: [80.0, 90.0, 100.0, 110.0, 120.0])
    mode: str = "rk4"
    k: float = 1e-5
    T: float | None = None  # defaults to the maturity in params
    tree_steps: int = 15001
    tree_method: str = "CRR"
    out: str = "reports"
    # optional gates: name -> tolerance / bound
    tolerances: dict = field(default_factory=dict)

    @property
    def maturity(self) -> float:
        return self.params.maturity if self.T is None else self.T

    @property
    def tree(self) -> TreeConfig:
        return TreeConfig(self.tree_steps, self.tree_method)

    def with_params_maturity(self) -> MarketParams:
        return self.params.with_maturity(self.maturity)


def parse_params(value) -> MarketParams:
    if isinstance(value, str):
        if value not in PARAMS:
            raise DomainError(f"unknown parameter set {value!r}; known: {', '.join(PARAMS)}")
        return PARAMS[value]
    if isinstance(value, dict):
        base = PARAMS["div_a"].as_dict()
        unknown = set(value) - set(base)
        if unknown:
            raise DomainError(f"unknown parameter fields {sorted(unknown)}")
        base.update(value)
        return MarketParams(**{k: float(v) for k, v in base.items()})
    raise DomainError("params must be a set label or an object")


def from_dict(doc: dict) -> RunConfig:
    names = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - names
    if unknown:
        raise DomainError(f"unknown config keys {sorted(unknown)}")
    kw = dict(doc)
    if "params" in kw:
        kw["params"] = parse_params(kw["params"])
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DomainError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise DomainError(f"{path}: top level must be an object")
    return from_dict(doc)


def validate(cfg: RunConfig) -> None:
    if cfg.mode not in ("rk4", "cn"):
        raise DomainError(f"mode must be 'rk4' or 'cn', got {cfg.mode!r}")
    if cfg.tree_method not in METHODS:
        raise DomainError(f"tree_method must be one of {METHODS}")
    if not cfg.eps > 0 or not all(e > 0 for e in cfg.eps_list):
        raise DomainError("tolerances must be positive")
    if not cfg.k > 0:
        raise DomainError("k must be positive")
    if any(not s > 0 for s in cfg.spots):
        raise DomainError("spots must be positive")


def override(cfg: RunConfig, **kw) -> RunConfig:
    """Copy of ``cfg`` with every non-None keyword applied."""
    kw = {k: v for k, v in kw.items() if v is not None}
    out = replace(cfg, **kw)
    validate(out)
    return out
