"""CSV/JSON report writers.

Every numeric CSV row carries a ``source`` column: ``solver``, ``oracle``
or ``paper-reference``.  Floats are written with ``repr`` so identical runs
give identical bytes; timing columns are the only nondeterministic fields.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..model import SolverState
from ..rk import RunStats

SOURCES = ("solver", "oracle", "paper-reference")
TIMING_FIELDS = ("total_cpu_seconds", "wall_seconds")


@dataclass
class Gate:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


@dataclass
class Report:
    """Rows for one CSV file plus gates and free-form metadata for JSON."""

    name: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    gates: list[Gate] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, source: str, **values) -> None:
        if source not in SOURCES:
            raise ValueError(f"unknown source tag {source!r}")
        unknown = set(values) - set(self.columns)
        if unknown:
            raise ValueError(f"unknown columns {sorted(unknown)}")
        self.rows.append({"source": source, **values})

    def gate(self, name: str, passed: bool, detail: str = "") -> Gate:
        g = Gate(name, bool(passed), detail)
        self.gates.append(g)
        return g

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        return repr(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def write_csv(report: Report, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ["source", *report.columns]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in report.rows:
            w.writerow([_fmt(row.get(c)) for c in header])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(report: Report, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {
        "name": report.name,
        "passed": report.passed,
        "gates": [{"name": g.name, "passed": g.passed, "detail": g.detail} for g in report.gates],
        "meta": report.meta,
        "rows": report.rows,
    }
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_report(report: Report, out_dir: Path) -> tuple[Path, Path]:
    return write_csv(report, out_dir / f"{report.name}.csv"), write_json(report, out_dir / f"{report.name}.json")


def write_step_trace(stats: RunStats, path: Path) -> Path:
    """Two columns ``tau,k`` per accepted step (Fig.-2 style data)."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tau", "k"])
        for t, k in zip(stats.taus, stats.steps):
            w.writerow([repr(float(t)), repr(float(k))])
    return path


def write_snapshot(state: SolverState, params: dict, path: Path) -> tuple[Path, Path]:
    """Three columns ``x,u,v`` plus a sidecar JSON with ``f_b``, ``tau`` and params."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u", "v"])
        for x, u, v in zip(state.grid.nodes, state.u, state.v):
            w.writerow([repr(float(x)), repr(float(u)), repr(float(v))])
    side = path.with_suffix(".json")
    side.write_text(
        json.dumps(_jsonable({"f_b": state.f_b, "tau": state.tau, "h": state.grid.h, "params": params}), indent=2, sort_keys=True)
        + "\n",
        encoding="utf-8",
    )
    return path, side

