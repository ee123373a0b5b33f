"""Benchmark command line.

Subcommands::

    price         adaptive run, prices/deltas at spots plus f_b(T), oracle columns
    convergence   fixed-step study on nested grids (rk4 or cn), Cauchy errors/orders
    pairs-bench   every (pair, h, eps) combination with run statistics and step traces
    oracle        binomial prices/deltas (and optionally the exercise boundary)
    table N       preset reproduction of a published table, N in {1, 2, 3, 5, 6}

Exit status is 0 iff every configured gate passes, 1 if a gate fails and
2 on configuration or solver errors.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .. import __version__
from ..binomial import TreeConfig, binomial_put, boundary_probe
from ..errors import FrontFixError
from . import reference as ref
from .config import RunConfig, load_config, override
from .reports import Report, write_report, write_snapshot, write_step_trace
from .studies import (
    AdaptiveRun,
    boundary_crosscheck,
    resolve_boundary_set,
    convergence_study,
    oracle_rows,
    pairs_bench,
    run_adaptive,
    solver_threads,
    spot_rows,
)

log = logging.getLogger("frontfix")

EXIT_OK, EXIT_GATE, EXIT_ERROR = 0, 1, 2
MIN_ORDER = 3.5


def _controller_gates(
    report: Report, runs: list[AdaptiveRun], min_step_fraction: float | None = 0.05, label: str = "controller"
) -> None:
    """No accepted step at or above eps; optionally, smallest step early in tau."""
    for r in runs:
        if not r.converged:
            continue
        s = r.stats
        tag = f"{label} {r.pair} h={r.h:g} eps={r.eps:g}"
        report.gate(f"{tag}: error below eps", s.max_accepted_error < r.eps, f"max accepted error {s.max_accepted_error:.3e}")
        if min_step_fraction is None:
            continue
        T = s.taus[-1] if len(s.taus) else math.nan
        frac = s.tau_of_min_step / T if T else math.nan
        report.gate(
            f"{tag}: early minimum step",
            frac <= min_step_fraction,
            f"min step {s.min_step:.3e} at tau/T={frac:.4f} (need <= {min_step_fraction:g})",
        )


def _run_row(r: AdaptiveRun) -> dict:
    s = r.stats
    return {
        "pair": r.pair,
        "h": r.h,
        "eps": r.eps,
        "f_b": r.state.f_b if r.converged else math.nan,
        "diverged": not r.converged,
        "accepted_steps": s.accepted_steps,
        "rejected_steps": s.rejected_steps,
        "failed_attempts": s.failed_attempts,
        "rhs_evaluations": s.rhs_evaluations,
        "min_step": s.min_step,
        "avg_step": s.avg_step,
        "max_step": s.max_step,
        "tau_of_min_step": s.tau_of_min_step,
        "max_accepted_error": s.max_accepted_error,
        "total_cpu_seconds": s.total_cpu_seconds,
        "wall_seconds": r.wall_seconds,
        "divergence_reason": s.divergence_reason,
    }


RUN_COLUMNS = [
    "pair", "h", "eps", "f_b", "diverged", "accepted_steps", "rejected_steps", "failed_attempts",
    "rhs_evaluations", "min_step", "avg_step", "max_step", "tau_of_min_step", "max_accepted_error",
    "total_cpu_seconds", "wall_seconds", "divergence_reason",
]


# --- commands -------------------------------------------------------------


def cmd_price(cfg: RunConfig, out: Path) -> Report:
    params = cfg.with_params_maturity()
    run = run_adaptive(params, cfg.h, cfg.pair, cfg.eps, cfg.x_max)
    rep = Report("price", ["quantity", "S", "pair", "h", "eps", "value"], meta={"params": params.as_dict()})
    if not run.converged:
        raise FrontFixError(f"{run.pair} run failed: {run.error}")
    rep.add("solver", quantity="f_b", pair=run.pair, h=cfg.h, eps=cfg.eps, value=run.state.f_b)
    oracle = {S: (p, d) for S, p, d in oracle_rows(params, cfg.spots, cfg.tree)}
    for S, price, delta in spot_rows(run.state, cfg.spots):
        rep.add("solver", quantity="price", S=S, pair=run.pair, h=cfg.h, eps=cfg.eps, value=price)
        rep.add("solver", quantity="delta", S=S, pair=run.pair, h=cfg.h, eps=cfg.eps, value=delta)
        p_o, d_o = oracle[S]
        rep.add("oracle", quantity="price", S=S, value=p_o)
        rep.add("oracle", quantity="delta", S=S, value=d_o)
        tol_p = cfg.tolerances.get("price_oracle")
        if tol_p is not None:
            rep.gate(f"price S={S:g} vs oracle", abs(price - p_o) <= tol_p, f"{price:.5f} vs {p_o:.5f}")
        tol_d = cfg.tolerances.get("delta_oracle")
        if tol_d is not None:
            rep.gate(f"delta S={S:g} vs oracle", abs(delta - d_o) <= tol_d, f"{delta:.5f} vs {d_o:.5f}")
    rep.meta["stats"] = run.stats.summary()
    _controller_gates(rep, [run], cfg.tolerances.get("min_step_fraction"))
    write_snapshot(run.state, params.as_dict(), out / "price_snapshot.csv")
    write_step_trace(run.stats, out / f"price_steps_{run.pair}.csv")
    return rep


def cmd_convergence(cfg: RunConfig, out: Path, name: str = "convergence") -> Report:
    params = cfg.with_params_maturity()
    grids = cfg.grids or [0.1, 0.05, 0.025]
    states, reports = convergence_study(cfg.mode, params, grids, cfg.k, cfg.maturity, cfg.x_max, solver_threads())
    rep = Report(name, ["quantity", "h", "f_b", "error", "order"], meta={"params": params.as_dict(), "mode": cfg.mode, "k": cfg.k})
    for s in states:
        rep.add("solver", quantity="f_b", h=s.grid.h, f_b=s.f_b)
    for q, r in reports.items():
        for j, h in enumerate(r.grids[1:]):
            order = r.orders[j - 1] if j >= 1 else None
            rep.add("solver", quantity=q, h=h, error=r.errors[j], order=order)
    min_order = cfg.tolerances.get("min_order")
    if min_order is not None:
        for q, r in reports.items():
            for h, o in zip(r.grids[2:], r.orders):
                rep.gate(f"{q} order at h={h:g}", o >= min_order, f"{o:.3f} (need >= {min_order})")
    for s in states:
        write_snapshot(s, params.as_dict(), out / f"{name}_snapshot_h{s.grid.h:g}.csv")
    rep.meta["reports"] = {q: vars(r) for q, r in reports.items()}
    return rep


def cmd_pairs_bench(
    cfg: RunConfig, out: Path, name: str = "pairs_bench", min_step_fraction: float | None = None
) -> tuple[Report, list[AdaptiveRun]]:
    params = cfg.with_params_maturity()
    runs = pairs_bench(params, cfg.pairs, [cfg.h] if not cfg.grids else cfg.grids, cfg.eps_list, cfg.x_max, solver_threads())
    rep = Report(name, RUN_COLUMNS, meta={"params": params.as_dict()})
    for r in runs:
        rep.add("solver", **_run_row(r))
        if r.converged:
            write_step_trace(r.stats, out / f"{name}_steps_{r.pair}_h{r.h:g}_eps{r.eps:g}.csv")
    _controller_gates(rep, runs, cfg.tolerances.get("min_step_fraction", min_step_fraction))
    return rep, runs


def cmd_oracle(cfg: RunConfig, out: Path) -> Report:
    params = cfg.with_params_maturity()
    rep = Report("oracle", ["quantity", "S", "method", "steps", "value"], meta={"params": params.as_dict()})
    tree = cfg.tree
    for S, p, d in oracle_rows(params, cfg.spots, tree):
        rep.add("oracle", quantity="price", S=S, method=tree.method, steps=tree.n, value=p)
        rep.add("oracle", quantity="delta", S=S, method=tree.method, steps=tree.n, value=d)
    if cfg.tolerances.get("boundary", False):
        rep.add("oracle", quantity="boundary", method=tree.method, steps=tree.n, value=boundary_probe(params, tree, xtol=1e-4))
    if cfg.tolerances.get("stability_check", True):
        # successive n-doubling differences at the money must shrink
        ns = (512, 1024, 2048, 4096)
        prices = [binomial_put(params, params.strike, TreeConfig(n, tree.method))[0] for n in ns]
        diffs = [abs(b - a) for a, b in zip(prices, prices[1:])]
        rep.gate("n-doubling stability", all(d1 < d0 for d0, d1 in zip(diffs, diffs[1:])), ", ".join(f"{d:.2e}" for d in diffs))
    return rep


# --- table presets --------------------------------------------------------


def table_rk4(cfg: RunConfig, out: Path, full: bool) -> Report:
    grids = [0.1, 0.05, 0.025, 0.0125] if full else (cfg.grids or [0.1, 0.05, 0.025])
    k = 1e-6 if full else cfg.k
    c = override(cfg, params=ref.PARAMS["nodiv"], mode="rk4", grids=grids, k=k, T=0.25)
    c.tolerances = {"min_order": MIN_ORDER, **cfg.tolerances}
    rep = cmd_convergence(c, out, "table1")
    fine = min(grids)
    f_b = next(r["f_b"] for r in rep.rows if r["quantity"] == "f_b" and r["h"] == fine)
    if fine in ref.RK4_BOUNDARY:
        rep.add("paper-reference", quantity="f_b", h=fine, f_b=ref.RK4_BOUNDARY[fine])
    if abs(fine - 0.0125) < 1e-12:
        rep.gate("finest boundary", abs(f_b - 86.805) <= 1e-2, f"{f_b:.5f} vs 86.805 +- 1e-2")
    return rep


def table_cn(cfg: RunConfig, out: Path, full: bool) -> Report:
    grids = [0.1, 0.05, 0.025, 0.0125, 0.00625] if full else (cfg.grids or [0.1, 0.05, 0.025, 0.0125])
    k = 2.5e-5 if full else 1e-4
    c = override(cfg, params=ref.PARAMS["nodiv"], mode="cn", grids=grids, k=k, T=0.5)
    c.tolerances = {"min_order": MIN_ORDER, **cfg.tolerances}
    rep = cmd_convergence(c, out, "table2")
    fb = {r["h"]: r["f_b"] for r in rep.rows if r["quantity"] == "f_b"}
    hs = sorted(fb)
    fine = hs[0]
    if fine in ref.CN_BOUNDARY:
        rep.add("paper-reference", quantity="f_b", h=fine, f_b=ref.CN_BOUNDARY[fine])
    if fine <= 0.0125 + 1e-12:
        rep.gate("finest boundary", abs(fb[fine] - 83.920) <= 1e-2, f"{fb[fine]:.5f} vs 83.920 +- 1e-2")
        if len(hs) >= 2:
            extrap = fb[fine] + (fb[fine] - fb[hs[1]]) / 15.0
            rep.gate("extrapolated boundary", abs(extrap - 83.920) <= 3e-2, f"{extrap:.5f} vs 83.920 +- 3e-2")
    return rep


def table_prices(cfg: RunConfig, out: Path, full: bool) -> Report:
    params = ref.PARAMS["div_a"]
    hs = [0.025, 0.0125, 0.01]
    pairs = ["DP", "CK", "ST", "BS"] if full else ["DP"]
    rep = Report("table3", ["S", "pair", "h", "price", "column"], meta={"params": params.as_dict(), "eps": 1e-5})
    runs = pairs_bench(params, pairs, hs, [1e-5], cfg.x_max, solver_threads(), warmup=False)
    oracle = {S: p for S, p, _ in oracle_rows(params, ref.SPOTS, TreeConfig(15001, "CRR"))}
    for i, S in enumerate(ref.SPOTS):
        rep.add("paper-reference", S=S, price=ref.PRICE_TRUE[i], column="True Value")
        for name, col in ref.PRICE_COMPARISON.items():
            rep.add("paper-reference", S=S, price=col[i], column=name)
        rep.add("oracle", S=S, price=oracle[S], column="CRR n=15001")
    for r in runs:
        if not r.converged:
            rep.gate(f"{r.pair} h={r.h:g} converged", False, r.error)
            continue
        for i, (S, price, _) in enumerate(spot_rows(r.state, ref.SPOTS)):
            rep.add("solver", S=S, pair=r.pair, h=r.h, price=price)
            published = ref.PRICE_RK.get((r.pair, r.h))
            if published is not None:
                rep.add("paper-reference", S=S, pair=r.pair, h=r.h, price=published[i], column=f"RK-{r.pair}")
            if r.pair == "DP" and r.h == 0.01:
                rep.gate(f"price S={S:g} vs RK-DP column", abs(price - published[i]) <= 5e-3, f"{price:.5f} vs {published[i]:.4f}")
                rep.gate(f"price S={S:g} vs oracle", abs(price - oracle[S]) <= 1.5e-2, f"{price:.5f} vs {oracle[S]:.5f}")
    _controller_gates(rep, runs)
    return rep


def table_pairs(cfg: RunConfig, out: Path, full: bool) -> Report:
    params = ref.PARAMS["div_a"]
    pairs = cfg.pairs
    grids = [0.025, 0.0125, 0.01] if full else [0.01]
    epss = [1e-3, 1e-4, 1e-5] if full else [1e-5]
    c = override(cfg, params=params, grids=grids, eps_list=epss, pairs=pairs, T=None)
    rep, runs = cmd_pairs_bench(c, out, "table5", min_step_fraction=0.05)
    base = {r.pair: r for r in runs if r.h == 0.01 and r.eps == 1e-5}
    for p, fb in ref.PAIR_BOUNDARY.items():
        rep.add("paper-reference", pair=p, h=0.01, eps=1e-5, f_b=fb, avg_step=ref.PAIR_AVG_STEP[p], total_cpu_seconds=ref.PAIR_CPU_SECONDS[p])
    ev = {p: r.stats.rhs_evaluations for p, r in base.items() if r.converged}
    if all(p in ev for p in ("DP", "ST", "CK", "BS")):
        rep.gate("DP < ST < CK (rhs evaluations)", ev["DP"] < ev["ST"] < ev["CK"], f"DP={ev['DP']} ST={ev['ST']} CK={ev['CK']}")
        rep.gate("BS < ST < CK (rhs evaluations)", ev["BS"] < ev["ST"] < ev["CK"], f"BS={ev['BS']} ST={ev['ST']} CK={ev['CK']}")
        fbs = [base[p].state.f_b for p in ("DP", "ST", "CK", "BS")]
        rep.gate("pair boundaries agree", max(fbs) - min(fbs) <= 5e-3, f"spread {max(fbs) - min(fbs):.2e}")
    _boundary_gates(rep)
    return rep


def _boundary_gates(rep: Report) -> None:
    """DP boundary at h = 0.0125 for the assumed set and the alternative.

    The published boundary is attributed to ``div_b``; when the oracle shows
    that it belongs to another set the oracle agreement on that set is the
    binding gate and both runs are reported.
    """
    checks = boundary_crosscheck({"div_b": ref.PARAMS["div_b"], "div_a": ref.PARAMS["div_a"]})
    for c in checks:
        rep.add("solver", **{**_run_row(c.run), "pair": f"DP[{c.label}]"})
        rep.add("oracle", pair=f"tree[{c.label}]", h=0.0125, f_b=c.oracle)
    assumed = checks[0]
    target = ref.BOUNDARY_TARGET
    if abs(assumed.f_b - target) <= 5e-3:
        chosen = assumed
    else:
        chosen = resolve_boundary_set(checks, target, 5e-2)
        rep.meta["boundary_mapping"] = {
            "assumed": assumed.label,
            "assumed_f_b": assumed.f_b,
            "assumed_oracle": assumed.oracle,
            "assumed_error": assumed.run.error,
            "resolved": chosen.label if chosen else None,
        }
        print(
            f"note: assumed set {assumed.label} gives f_b={assumed.f_b:.5f} (oracle {assumed.oracle:.5f}); "
            f"the published {target} matches {chosen.label if chosen else 'no set'}"
        )
    if chosen is None:
        rep.gate("boundary parameter mapping", False, "no parameter set reproduces the published boundary")
        return
    rep.gate(
        f"DP boundary h=0.0125 [{chosen.label}] vs oracle",
        abs(chosen.f_b - chosen.oracle) <= 5e-2,
        f"{chosen.f_b:.5f} vs {chosen.oracle:.5f} (probes {chosen.probes[0]:.4f}, {chosen.probes[1]:.4f})",
    )
    rep.gate(f"DP boundary h=0.0125 [{chosen.label}] vs table", abs(chosen.f_b - target) <= 5e-3, f"{chosen.f_b:.5f} vs {target}")
    _controller_gates(rep, [chosen.run])


def table_deltas(cfg: RunConfig, out: Path, full: bool) -> Report:
    params = ref.PARAMS["div_b"]
    hs = [0.075, 0.05, 0.03]
    rep = Report("table6", ["S", "pair", "h", "delta", "column"], meta={"params": params.as_dict(), "eps": 1e-5})
    runs = pairs_bench(params, ["DP"], hs, [1e-5], cfg.x_max, solver_threads(), warmup=False)
    oracle = {S: d for S, _, d in oracle_rows(params, ref.SPOTS, TreeConfig(15001, "LR"))}
    for i, S in enumerate(ref.SPOTS):
        rep.add("paper-reference", S=S, delta=ref.DELTA_TRUE[i], column="True Value")
        for name, col in ref.DELTA_COMPARISON.items():
            rep.add("paper-reference", S=S, delta=col[i], column=name)
        rep.add("oracle", S=S, delta=oracle[S], column="LR n=15001")
    for r in runs:
        if not r.converged:
            rep.gate(f"DP h={r.h:g} converged", False, r.error)
            continue
        for i, (S, _, delta) in enumerate(spot_rows(r.state, ref.SPOTS)):
            rep.add("solver", S=S, pair=r.pair, h=r.h, delta=delta)
            rep.add("paper-reference", S=S, pair=r.pair, h=r.h, delta=ref.DELTA_DP[r.h][i], column="RK-DP")
            if r.h == 0.03:
                rep.gate(f"delta S={S:g} vs True Value", abs(delta - ref.DELTA_TRUE[i]) <= 1e-3, f"{delta:.5f} vs {ref.DELTA_TRUE[i]}")
                rep.gate(f"delta S={S:g} vs oracle", abs(delta - oracle[S]) <= 1.5e-3, f"{delta:.5f} vs {oracle[S]:.5f}")
    _controller_gates(rep, runs)
    return rep


TABLES = {"1": table_rk4, "2": table_cn, "3": table_prices, "5": table_pairs, "6": table_deltas}


# --- entry point ----------------------------------------------------------


def _grid_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grid list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frontfix", description="American put front-fixing solver benchmarks")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--out", type=Path, help="output directory (default: reports)")
    common.add_argument("--pair", help="Runge-Kutta pair id (DP, CK, ST, BS)")
    common.add_argument("--eps", type=float, help="step-control tolerance")
    common.add_argument("--grid", type=_grid_list, help="grid spacing(s), comma separated")
    common.add_argument("--full-protocol", action="store_true", help="run the full published protocol (slow)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("price", "convergence", "pairs-bench", "oracle"):
        sub.add_parser(name, parents=[common])
    t = sub.add_parser("table", parents=[common])
    t.add_argument("number", choices=sorted(TABLES))
    return ap


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    kw = {}
    if args.pair:
        kw["pair"] = args.pair.upper()
        kw["pairs"] = [args.pair.upper()]
    if args.eps is not None:
        kw["eps"] = args.eps
        kw["eps_list"] = [args.eps]
    if args.grid:
        kw["grids"] = args.grid
        kw["h"] = args.grid[0]
    if args.out:
        kw["out"] = str(args.out)
    return override(cfg, **kw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = _resolve_config(args)
        out = Path(cfg.out)
        if args.command == "price":
            report = cmd_price(cfg, out)
        elif args.command == "convergence":
            report = cmd_convergence(cfg, out)
        elif args.command == "pairs-bench":
            report, _ = cmd_pairs_bench(cfg, out)
        elif args.command == "oracle":
            report = cmd_oracle(cfg, out)
        else:
            report = TABLES[args.number](cfg, out, args.full_protocol)
        csv_path, json_path = write_report(report, out)
    except (FrontFixError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for g in report.gates:
        print(g.line())
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK if report.passed else EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
