import csv
import json
import math

import numpy as np
import pytest

from conftest import NODIV
from frontfix.errors import DomainError
from frontfix.harness import cli
from frontfix.harness.config import RunConfig, from_dict, load_config, override, parse_params
from frontfix.harness.reference import PARAMS
from frontfix.harness.reports import Report, write_csv
from frontfix.harness.studies import (
    BoundaryCheck,
    cauchy_reports,
    check_nested,
    convergence_study,
    pairs_bench,
    resolve_boundary_set,
    solver_threads,
)
from frontfix.model import GridSpec, SolverState

FAST = {"params": {"strike": 100, "rate": 0.05, "dividend": 0.0, "volatility": 0.2, "maturity": 0.02}, "h": 0.1}


def _write(tmp_path, doc):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(doc))
    return path


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# --- configuration --------------------------------------------------------


def test_config_from_label_and_object(tmp_path):
    cfg = load_config(_write(tmp_path, {"params": "nodiv", "pair": "CK", "spots": [90, 100]}))
    assert cfg.params == PARAMS["nodiv"] and cfg.pair == "CK" and cfg.spots == [90, 100]
    cfg = from_dict({"params": {"dividend": 0.01}})
    assert cfg.params.dividend == 0.01 and cfg.params.strike == 100.0


@pytest.mark.parametrize(
    "doc",
    [{"bogus": 1}, {"params": "nope"}, {"params": {"spot": 1}}, {"mode": "euler"}, {"eps": -1.0}, {"spots": [0.0]}],
)
def test_config_rejects_bad_documents(doc):
    with pytest.raises(DomainError):
        from_dict(doc)


def test_config_rejects_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(DomainError):
        load_config(path)
    path.write_text("[1, 2]")
    with pytest.raises(DomainError):
        load_config(path)


def test_override_skips_none_and_validates():
    cfg = override(RunConfig(), pair=None, eps=1e-4)
    assert cfg.pair == "DP" and cfg.eps == 1e-4
    with pytest.raises(DomainError):
        override(RunConfig(), k=0.0)


def test_maturity_override():
    cfg = from_dict({"params": "div_a", "T": 0.1})
    assert cfg.with_params_maturity().maturity == 0.1
    assert parse_params("div_b").volatility == 0.4


def test_solver_threads_env(monkeypatch):
    monkeypatch.setenv("SOLVER_THREADS", "3")
    assert solver_threads() == 3
    monkeypatch.setenv("SOLVER_THREADS", "x")
    with pytest.raises(DomainError):
        solver_threads()


# --- convergence arithmetic -----------------------------------------------


def test_non_nested_grids_rejected():
    with pytest.raises(DomainError):
        check_nested([0.1, 0.03])
    assert check_nested([0.025, 0.1, 0.05]) == [0.1, 0.05, 0.025]


def _fake_state(h, f_b, offset):
    grid = GridSpec.from_spacing(h, 3.0)
    u = np.full(grid.M + 1, offset)
    u[0], u[-1] = 100.0 - f_b, 0.0
    v = np.zeros(grid.M + 1)
    v[0] = -f_b
    return SolverState(0.0, u, v, f_b, grid, 100.0)


def test_cauchy_errors_and_orders():
    # boundary errors 1, 1/16, 1/256: order 4 exactly
    states = [_fake_state(0.1, 90.0, 0.0), _fake_state(0.05, 89.0, 0.0), _fake_state(0.025, 89.0 - 1 / 16, 0.0)]
    reps = cauchy_reports(states)
    assert reps["boundary"].errors == [1.0, 1 / 16]
    assert reps["boundary"].orders == [4.0]
    assert reps["value"].errors[0] == pytest.approx(1.0)


def test_single_grid_gives_empty_reports():
    states, reps = convergence_study("rk4", NODIV.with_maturity(0.001), [0.1], 1e-4, 0.001)
    assert len(states) == 1
    assert all(r.errors == [] and r.orders == [] for r in reps.values())


def test_convergence_rejects_unknown_mode():
    with pytest.raises(DomainError):
        convergence_study("euler", NODIV, [0.1, 0.05], 1e-4, 0.001)


def test_boundary_set_resolution():
    dummy = None
    checks = [BoundaryCheck("b", dummy, 64.7, (0, 0)), BoundaryCheck("a", dummy, 80.06, (0, 0))]
    assert resolve_boundary_set(checks, 80.0628, 5e-2).label == "a"
    assert resolve_boundary_set(checks, 70.0, 5e-2) is None


# --- reports ----------------------------------------------------------------


def test_report_source_tags_enforced(tmp_path):
    rep = Report("r", ["x"])
    rep.add("solver", x=1.0)
    with pytest.raises(ValueError):
        rep.add("guess", x=1.0)
    with pytest.raises(ValueError):
        rep.add("oracle", y=1.0)
    path = write_csv(rep, tmp_path / "r.csv")
    assert path.read_text() == "source,x\nsolver,1.0\n"


def test_pairs_bench_records_unavailable_pair():
    runs = pairs_bench(NODIV.with_maturity(0.01), ["DP", "PP"], [0.1], [1e-5], warmup=False)
    assert [r.pair for r in runs] == ["DP", "PP"]
    assert runs[0].converged and not runs[1].converged
    assert runs[1].stats.diverged and "PP" in runs[1].error


# --- command line -----------------------------------------------------------


def test_cli_price_and_determinism(tmp_path, capsys):
    cfg = _write(tmp_path, {**FAST, "spots": [95.0, 100.0], "tree_steps": 501})
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert cli.main(["price", "--config", str(cfg), "--out", str(out1)]) == 0
    assert cli.main(["price", "--config", str(cfg), "--out", str(out2)]) == 0
    assert (out1 / "price.csv").read_bytes() == (out2 / "price.csv").read_bytes()
    rows = _rows(out1 / "price.csv")
    assert {r["source"] for r in rows} == {"solver", "oracle"}
    assert all(r["source"] in ("solver", "oracle", "paper-reference") for r in rows)
    assert (out1 / "price_snapshot.csv").exists() and (out1 / "price_snapshot.json").exists()
    trace = _rows(out1 / "price_steps_DP.csv")
    assert list(trace[0]) == ["tau", "k"]
    side = json.loads((out1 / "price_snapshot.json").read_text())
    assert set(side) == {"f_b", "tau", "h", "params"}


def test_cli_price_empty_spots(tmp_path):
    cfg = _write(tmp_path, {**FAST, "spots": []})
    assert cli.main(["price", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "price.csv")
    assert len(rows) == 1 and rows[0]["quantity"] == "f_b"


def test_cli_gate_failure_exit_code(tmp_path):
    doc = {**FAST, "spots": [100.0], "tree_steps": 501, "tolerances": {"price_oracle": 0.0}}
    assert cli.main(["price", "--config", str(_write(tmp_path, doc)), "--out", str(tmp_path)]) == 1


def test_cli_error_exit_codes(tmp_path, capsys):
    assert cli.main(["price", "--config", str(_write(tmp_path, {"mode": "x"})), "--out", str(tmp_path)]) == 2
    assert cli.main(["price", "--config", str(tmp_path / "missing.json")]) == 2
    assert cli.main(["convergence", "--grid", "0.1,0.03", "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_cli_convergence_single_grid(tmp_path):
    doc = {**FAST, "mode": "cn", "k": 1e-3}
    assert cli.main(["convergence", "--config", str(_write(tmp_path, doc)), "--grid", "0.1", "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "convergence.csv")
    assert [r["quantity"] for r in rows] == ["f_b"]


def test_cli_pairs_bench_with_unavailable_pair(tmp_path):
    doc = {**FAST, "pairs": ["DP", "PP"]}
    assert cli.main(["pairs-bench", "--config", str(_write(tmp_path, doc)), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "pairs_bench.csv")
    assert [(r["pair"], r["diverged"]) for r in rows] == [("DP", "false"), ("PP", "true")]


def test_cli_oracle(tmp_path):
    doc = {"params": "div_a", "tree_steps": 1001, "spots": [100.0]}
    assert cli.main(["oracle", "--config", str(_write(tmp_path, doc)), "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "oracle.csv")
    assert rows[0]["source"] == "oracle" and math.isclose(float(rows[0]["value"]), 5.1496, abs_tol=2e-2)


def test_cli_rejects_unknown_table():
    with pytest.raises(SystemExit):
        cli.main(["table", "4"])
