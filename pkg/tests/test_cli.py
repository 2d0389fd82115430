import csv
import json

import numpy as np
import pytest

from netestimands.cli import main
from netestimands.estimands import TREATED, UNTREATED, avg_direct_effect, efao, efao_contrast, eao
from netestimands.graph import biclique
from netestimands.policy import CompletelyRandomized, HomogeneousBernoulli
from netestimands.science import TreatedNeighborCount, random_table, tabulate, write_table_csv

K23 = {"type": "biclique", "u": 2, "v": 3}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return path


def run(tmp_path, *args):
    return main([str(a) for a in args])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def eval_scenario(**extra):
    sc = {
        "graph": K23,
        "outcome_model": {"family": "treated_neighbor_count"},
        "policy": {"family": "completely_randomized", "m": 1},
        "estimands": [
            {"estimand": "efao_contrast", "focal": "treated", "focal2": "untreated"},
            {"estimand": "avg_direct_effect"},
        ],
    }
    sc.update(extra)
    return sc


def test_eval_cr1_example(tmp_path):
    path = write(tmp_path, "s.json", eval_scenario())
    assert run(tmp_path, "eval", path, "--out", tmp_path / "out") == 0
    rows = read_rows(tmp_path / "out" / "results.csv")
    assert [r["estimand"] for r in rows] == ["efao_contrast[treated,untreated]", "avg_direct_effect"]
    for r in rows:
        assert float(r["value"]) == pytest.approx(-0.6, abs=1e-12)
        assert r["method"] == "exact" and float(r["std_error"]) == 0.0


def test_eval_own_treatment_eao(tmp_path):
    sc = {
        "graph": K23,
        "outcome_model": {"family": "own_treatment", "tau": 1},
        "policy": {"family": "homogeneous_bernoulli", "p": 0.4},
        "estimands": [{"estimand": "eao"}],
        "output": {"dir": "res"},
    }
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc)) == 0
    (row,) = read_rows(tmp_path / "res" / "results.csv")
    assert float(row["value"]) == pytest.approx(0.4)


def test_eval_round_trip_equals_library(tmp_path):
    g = biclique(2, 3)
    table = random_table(g, 3)
    write_table_csv(table, tmp_path / "table.csv")
    sc = {
        "graph": K23,
        "outcome_model": {"family": "explicit_table", "path": "table.csv"},
        "policies": [{"family": "homogeneous_bernoulli", "p": "1/3"}, {"family": "completely_randomized", "m": 2}],
        "estimands": [
            {"estimand": "eao"},
            {"estimand": "efao", "focal": "treated", "label": "treated efao"},
            {"estimand": "efao_contrast", "focal": "treated", "focal2": "untreated"},
            {"estimand": "avg_direct_effect"},
        ],
    }
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 0
    rows = read_rows(tmp_path / "o" / "results.csv")
    pis = [HomogeneousBernoulli(5, 1 / 3), CompletelyRandomized(5, 2)]
    expected = []
    for fn in (
        lambda pi: eao(pi, table),
        lambda pi: efao(pi, table, TREATED),
        lambda pi: efao_contrast(pi, table, TREATED, UNTREATED),
        lambda pi: avg_direct_effect(pi, table),
    ):
        expected += [fn(pi) for pi in pis]
    assert len(rows) == len(expected)
    for row, res in zip(rows, expected):
        assert float(row["value"]) == res.value
        assert float(row["event_probability"]) == res.event_probability
    assert rows[2]["estimand"] == "treated efao"


def test_mc_output_is_byte_identical(tmp_path):
    path = write(tmp_path, "s.json", eval_scenario(policy={"family": "homogeneous_bernoulli", "p": 0.5}))
    for out in ("a", "b"):
        assert run(tmp_path, "eval", path, "--mode", "mc", "--samples", 5000, "--seed", 9, "--out", tmp_path / out) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    rows = read_rows(tmp_path / "a" / "results.csv")
    assert rows[0]["method"] == "monte_carlo" and rows[0]["n_samples"] == "5000"
    run(tmp_path, "eval", path, "--mode", "mc", "--samples", 5000, "--seed", 10, "--out", tmp_path / "c")
    assert (tmp_path / "c" / "results.csv").read_bytes() != a


def test_flags_override_config(tmp_path):
    sc = eval_scenario(engine={"mode": "monte_carlo", "n_samples": 100}, output={"dir": "cfg"})
    path = write(tmp_path, "s.json", sc)
    assert run(tmp_path, "eval", path, "--mode", "exact", "--out", tmp_path / "flag") == 0
    assert not (tmp_path / "cfg").exists()
    assert read_rows(tmp_path / "flag" / "results.csv")[0]["method"] == "exact"


@pytest.mark.parametrize(
    "patch,needle",
    [
        ({"policy": {"family": "completely_random", "m": 1}}, "$.policy.family"),
        ({"policy": {"family": "completely_randomized", "m": 9}}, "$.policy.m"),
        ({"graph": {"type": "biclique", "u": 2, "v": 3, "w": 1}}, "$.graph.w: unknown key"),
        ({"estimands": [{"estimand": "efao"}]}, "$.estimands[0].focal"),
        ({"estimands": [{"estimand": "avg_po_by_exposure", "level": 1}]}, "exposure_map"),
        ({"extra": 1}, "$.extra"),
        ({"policy": {"family": "heterogeneous_bernoulli", "p": [0.5, 0.5]}}, "expected 5 probabilities"),
        ({"policy": {"family": "homogeneous_bernoulli", "p": "1/0"}}, "$.policy.p"),
    ],
)
def test_validation_errors_exit_2(tmp_path, capsys, patch, needle):
    path = write(tmp_path, "s.json", eval_scenario(**patch))
    assert run(tmp_path, "eval", path, "--out", tmp_path / "o") == 2
    assert needle in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_unknown_level_rejected_before_computing(tmp_path, capsys):
    sc = eval_scenario(
        exposure_map={"family": "neighbor_count_capped", "cap": 2},
        estimands=[{"estimand": "efao", "focal": {"variant": "by_exposure", "level": 3}}],
    )
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc)) == 2
    assert "$.estimands[0].focal.level" in capsys.readouterr().err


def test_invalid_json_reports_position(tmp_path, capsys):
    path = write(tmp_path, "s.json", '{"graph": {"type": "biclique",\n  "u": 2,,}}')
    assert run(tmp_path, "eval", path) == 2
    assert "line 2, column" in capsys.readouterr().err


def test_missing_scenario_file(tmp_path, capsys):
    assert run(tmp_path, "eval", tmp_path / "nope.json") == 2
    assert "cannot read scenario" in capsys.readouterr().err


def test_zero_probability_exit_3_without_output(tmp_path, capsys):
    sc = eval_scenario(
        policy={"family": "completely_randomized", "m": 0},
        estimands=[{"estimand": "eao"}, {"estimand": "efao", "focal": "treated"}],
    )
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 3
    assert "zero probability" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_enumeration_cap_exit_3(tmp_path, capsys):
    sc = eval_scenario(graph={"type": "biclique", "u": 2, "v": 3, "copies": 5}, estimands=[{"estimand": "eao"}])
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc), "--cap", 20) == 3
    assert "25" in capsys.readouterr().err
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc), "--mode", "mc", "--samples", 2000, "--out", tmp_path / "mc") == 0


def test_eval_policy_free_estimands(tmp_path):
    sc = eval_scenario(
        exposure_map={"family": "neighbor_count_capped", "cap": 2},
        outcome_model={"family": "one_treated_neighbor_indicator", "c_by_degree": {"3": 3, "2": 0}},
        estimands=[
            {"estimand": "gate"},
            {"estimand": "avg_po_by_exposure", "level": 1},
            {"estimand": "eao_decomposition", "m": 1},
            {"estimand": "welfare", "components": [{"focal": "treated", "weight": 0.5}, {"focal": "untreated", "weight": 0.5}]},
            {"estimand": "avg_indirect_effect"},
            {"estimand": "eate"},
        ],
    )
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 0
    rows = {r["estimand"]: r for r in read_rows(tmp_path / "o" / "results.csv")}
    assert float(rows["avg_po_by_exposure[1]"]["value"]) == pytest.approx(1.2)
    assert float(rows["eate"]["value"]) == pytest.approx(0.0)
    d = [float(rows[f"eao_decomposition[m=1].{k}"]["value"]) for k in ("delta", "direct", "spillover")]
    assert d[1] + d[2] == pytest.approx(d[0], abs=1e-12)
    assert rows["gate"]["policy"] == "-"


# ---------------------------------------------------------------- equiv


def test_equiv_cr_random_tables(tmp_path):
    sc = {"graph": K23, "policy": {"family": "completely_randomized", "m": 2},
          "equiv": {"random_tables": {"count": 20, "seed": 0}}}
    assert run(tmp_path, "equiv", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 0
    rep = json.loads((tmp_path / "o" / "equivalence.json").read_text())
    (pol,) = rep["policies"]
    assert pol["verdict"] == "equal" and pol["max_residual"] < 1e-9
    assert len(pol["tables"]) == 20


def test_equiv_bernoulli_asymptotic(tmp_path):
    sc = {"graph": K23, "outcome_model": {"family": "treated_neighbor_count"},
          "policy": {"family": "homogeneous_bernoulli", "p": 0.3}, "equiv": {"copies": [1, 2, 4, 8]}}
    assert run(tmp_path, "equiv", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 0
    pol = json.loads((tmp_path / "o" / "equivalence.json").read_text())["policies"][0]
    series = [c["residual"] for c in pol["tables"][0]["copy_series"]]
    assert all(b < a for a, b in zip(series, series[1:]))
    assert pol["verdict"] == "asymptotic"


def test_equiv_baseline_correlated(tmp_path):
    sc = {"graph": K23, "outcome_model": {"family": "constant_baseline", "b": [1, 2, 3, 4, 5]},
          "policy": {"family": "heterogeneous_bernoulli", "p": [0.1, 0.3, 0.5, 0.7, 0.9]}}
    assert run(tmp_path, "equiv", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 0
    pol = json.loads((tmp_path / "o" / "equivalence.json").read_text())["policies"][0]
    assert pol["verdict"] == "not-equal"


# ---------------------------------------------------------------- biclique


def test_biclique_curves_and_tables(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "biclique", "--u", 2, "--v", 3, "--y-left", "1,3,0.5", "--y-right", "2,0,4", "--out", out) == 0
    rows = read_rows(out / "curve_level_0.csv")
    high = [r for r in rows if r["solve_for"] == "high"]
    assert len(high) == 101
    for r in high:
        x = float(r["p_degree_u"])
        assert abs(float(r["p_degree_v"]) - (1 - (1 - x) ** 1.5)) < 1e-9
    assert {r["solve_for"] for r in rows} == {"high", "low"}
    joint = json.loads((out / "joint_residual.json").read_text())
    assert joint["min_residual"] > 0
    table = read_rows(out / "closed_form_vs_exact.csv")
    assert len(table) == 3 * 3 * 6


def test_biclique_equal_sides(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "biclique", "--u", 2, "--v", 2, "--out", out) == 0
    for d in (0, 2):
        for r in read_rows(out / f"curve_level_{d}.csv"):
            assert float(r["p_degree_u"]) == pytest.approx(float(r["p_degree_v"]), abs=1e-9)
    assert json.loads((out / "joint_residual.json").read_text())["min_residual"] == 0.0
    assert not (out / "closed_form_vs_exact.csv").exists()


def test_biclique_wrong_orientation(tmp_path, capsys):
    assert run(tmp_path, "biclique", "--u", 3, "--v", 2, "--out", tmp_path / "o") == 2
    assert "swap" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_biclique_from_scenario(tmp_path):
    sc = {"biclique": {"u": 1, "v": 2, "y_left": [0, 1], "y_right": [1, 0], "p_grid": [0.5], "copies": [1, 2],
                       "curve_grid": 0.1}}
    assert run(tmp_path, "biclique", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 0
    assert len(read_rows(tmp_path / "o" / "closed_form_vs_exact.csv")) == 2 * 2


def test_biclique_needs_sizes(tmp_path, capsys):
    assert run(tmp_path, "biclique", "--u", 2) == 2
    assert "need u and v" in capsys.readouterr().err


# ---------------------------------------------------------------- decide


def degree_targeted_decide(values=("1/3", "1/2"), tables=None):
    tables = tables or [
        {"name": "A", "model": {"family": "one_treated_neighbor_indicator", "c_by_degree": {"3": 3, "2": 0}}},
        {"name": "B", "model": {"family": "one_treated_neighbor_indicator", "c_by_degree": {"3": 0, "2": 2}}},
    ]
    return {
        "graph": K23,
        "exposure_map": {"family": "neighbor_count_capped", "cap": 2},
        "decide": {"policy_family": "homogeneous_bernoulli", "values": list(values), "tables": tables},
    }


def test_decide_degree_targeted(tmp_path):
    out = tmp_path / "o"
    assert run(tmp_path, "decide", write(tmp_path, "s.json", degree_targeted_decide()), "--out", out) == 0
    rows = read_rows(out / "decision.csv")
    picked = {r["table"]: r["parameter"] for r in rows if r["selected"] == "1"}
    assert picked == {"A": "1/3", "B": "1/2"}
    eaos = {(r["table"], r["parameter"]): float(r["eao"]) for r in rows}
    assert eaos[("A", "1/3")] == pytest.approx(8 / 15) and eaos[("A", "1/2")] == pytest.approx(0.45)
    assert eaos[("B", "1/2")] == pytest.approx(0.6)
    ybar = read_rows(out / "exposure_averages.csv")
    a = [float(r["avg_po"]) for r in ybar if r["table"] == "A"]
    b = [float(r["avg_po"]) for r in ybar if r["table"] == "B"]
    assert a == b == pytest.approx([0.0, 1.2, 0.0])


def test_decide_single_and_tied(tmp_path):
    sc = degree_targeted_decide(values=[0.5])
    assert run(tmp_path, "decide", write(tmp_path, "s.json", sc), "--out", tmp_path / "a") == 0
    assert all(r["selected"] == "1" for r in read_rows(tmp_path / "a" / "decision.csv"))
    sc = degree_targeted_decide(values=[0.7, 0.2, 0.5], tables=[{"name": "C", "model": {"family": "constant_baseline", "b": 1}}])
    assert run(tmp_path, "decide", write(tmp_path, "s.json", sc), "--out", tmp_path / "b") == 0
    (sel,) = [r for r in read_rows(tmp_path / "b" / "decision.csv") if r["selected"] == "1"]
    assert sel["parameter"] == "0.2"


def test_decide_requires_section(tmp_path, capsys):
    assert run(tmp_path, "decide", write(tmp_path, "s.json", {"graph": K23})) == 2
    assert "$.decide" in capsys.readouterr().err


def test_edge_list_graph(tmp_path):
    (tmp_path / "g.txt").write_text("1 3\n1 4\n1 5\n2 3\n2 4\n2 5\n")
    sc = eval_scenario(graph={"type": "edge_list", "path": "g.txt"})
    assert run(tmp_path, "eval", write(tmp_path, "s.json", sc), "--out", tmp_path / "o") == 0
    assert float(read_rows(tmp_path / "o" / "results.csv")[0]["value"]) == pytest.approx(-0.6)
    (tmp_path / "bad.txt").write_text("1 3\n1\n")
    sc = eval_scenario(graph={"type": "edge_list", "path": "bad.txt"})
    assert run(tmp_path, "eval", write(tmp_path, "s2.json", sc)) == 2


def test_console_entry_point(tmp_path):
    import subprocess
    import sys

    path = write(tmp_path, "s.json", eval_scenario())
    proc = subprocess.run(
        [sys.executable, "-m", "netestimands.cli", "eval", str(path), "--out", str(tmp_path / "o")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "netestimands.cli", "eval"], capture_output=True, text=True)
    assert proc.returncode == 2


SCENARIOS = sorted((__import__("pathlib").Path(__file__).parent.parent / "scenarios").glob("*.json"))


@pytest.mark.parametrize("path", SCENARIOS, ids=lambda p: p.stem)
def test_shipped_scenarios_run(tmp_path, path):
    command = path.stem.split("_")[0]
    assert run(tmp_path, command, path, "--out", tmp_path / "o") == 0
    assert any((tmp_path / "o").iterdir())
