"""Command-line front end: ``netestimands {eval,equiv,biclique,decide}``.

Exit codes: 0 success, 2 invalid scenario or arguments, 3 computation error.
All outputs are assembled in memory and written only after every
computation succeeded, so a failed run leaves no partial files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import estimands as est
from .biclique import closed_form_table, exposure_matching_curve, joint_matching_residual
from .config import (
    BicliqueSection,
    Scenario,
    ScenarioError,
    grid_policy,
    load_scenario,
    parse_biclique,
    parse_scenario,
)
from .engine import EXACT, MONTE_CARLO, EstimandResult
from .exposure import NeighborCountCapped
from .science import ScienceTable, lazy_table, random_table, tabulate

EXIT_OK, EXIT_INVALID, EXIT_COMPUTE = 0, 2, 3

RESULT_COLUMNS = ("policy", "estimand", "value", "std_error", "method", "event_probability", "n_samples")


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def write_outputs(out_dir: Path, files: dict[str, str]) -> list[Path]:
    """Write every file via a temporary name and an atomic rename."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        target = out_dir / name
        tmp = out_dir / f".{name}.tmp"
        tmp.write_text(text)
        os.replace(tmp, target)
        written.append(target)
    return written


def build_table(sc: Scenario, model=None) -> ScienceTable:
    model = model or sc.model
    if sc.engine.mode == MONTE_CARLO and sc.graph.n > sc.engine.cap:
        return lazy_table(model, sc.graph)
    return tabulate(model, sc.graph, sc.engine.cap)


def _require(sc: Scenario, *keys: str) -> None:
    attrs = {"graph": "graph", "outcome_model": "model", "policy": "policies"}
    for key in keys:
        if not getattr(sc, attrs[key]):
            raise ScenarioError(f"$.{key}", "missing required key")


# ---------------------------------------------------------------------------
# subcommands


def _rows(policy: str, label: str, r: EstimandResult) -> list:
    return [policy, label, float(r.value), float(r.std_error), r.method, float(r.event_probability), r.n_samples]


def evaluate(sc: Scenario) -> list[list]:
    """Result rows for every (policy, estimand) request; policy-free estimands appear once."""
    _require(sc, "graph", "outcome_model")
    if not sc.estimands:
        raise ScenarioError("$.estimands", "no estimands requested")
    needs_policy = {"eao", "efao", "efao_contrast", "welfare", "avg_direct_effect", "avg_indirect_effect", "eate"}
    if any(r.estimand in needs_policy for r in sc.estimands):
        _require(sc, "policy")
    table = build_table(sc)
    s, cap = sc.engine, sc.engine.cap
    rows = []
    for req in sc.estimands:
        if req.estimand == "gate":
            rows.append(_rows("-", req.label, EstimandResult(est.gate(table))))
        elif req.estimand == "avg_po_by_exposure":
            rows.append(_rows("-", req.label, EstimandResult(est.avg_po_by_exposure(table, sc.exposure, req.level, cap))))
        elif req.estimand == "eao_decomposition":
            dec = est.eao_decomposition(table, req.m, cap)
            for part in dec._fields:
                rows.append(_rows("-", f"{req.label}.{part}", EstimandResult(getattr(dec, part))))
        else:
            for pi in sc.policies:
                rows.append(_rows(est.describe_policy(pi), req.label, _policy_estimand(req, pi, table, s)))
    return rows


def _policy_estimand(req, pi, table, s) -> EstimandResult:
    name = req.estimand
    if name == "eao":
        return est.eao(pi, table, s)
    if name == "efao":
        return est.efao(pi, table, req.focal, s)
    if name == "efao_contrast":
        return est.efao_contrast(pi, table, req.focal, req.focal2, s)
    if name == "welfare":
        return est.welfare(pi, table, req.components, s)
    if name == "avg_direct_effect":
        return est.avg_direct_effect(pi, table, s)
    if name == "avg_indirect_effect":
        return est.avg_indirect_effect(pi, table, req.neighborhood, s)
    return est.eate(table, pi, s)


def run_eval(sc: Scenario) -> dict[str, str]:
    return {"results.csv": csv_text(RESULT_COLUMNS, evaluate(sc))}


def _combine(verdicts: list[str]) -> str:
    if all(v == "equal" for v in verdicts):
        return "equal"
    if all(v in ("equal", "asymptotic") for v in verdicts):
        return "asymptotic"
    return "not-equal"


def run_equiv(sc: Scenario) -> dict[str, str]:
    _require(sc, "graph", "policy")
    g = sc.graph
    if sc.equiv.random_tables:
        tables = [
            (f"random_table(seed={sc.equiv.table_seed + k})", random_table(g, sc.equiv.table_seed + k))
            for k in range(sc.equiv.random_tables)
        ]
    else:
        _require(sc, "outcome_model")
        tables = [("outcome_model", tabulate(sc.model, g, sc.engine.cap))]
    out = []
    for pi in sc.policies:
        reports = []
        for name, table in tables:
            rep = est.equivalence_report(table, g, pi, sc.engine, sc.equiv.copies)
            reports.append({"table": name, **rep.to_dict()})
        out.append({
            "policy": est.describe_policy(pi),
            "verdict": _combine([r["verdict"] for r in reports]),
            "max_residual": max(r["max_residual"] for r in reports),
            "tables": reports,
        })
    return {"equivalence.json": json_text({"copies": list(sc.equiv.copies), "policies": out})}


def run_biclique(sec: BicliqueSection, cap: int = 20) -> dict[str, str]:
    u, v = sec.u, sec.v
    files = {}
    omitted = {}
    for d in range(u + 1):
        rows = []
        for solve_for in ("high", "low"):
            curve = exposure_matching_curve(u, v, d, sec.curve_grid, solve_for)
            omitted[f"level_{d}_solve_{solve_for}"] = len(curve.omitted)
            rows += [[p.level, solve_for, p.p_low, p.p_high, p.branch, p.residual] for p in curve.points]
        files[f"curve_level_{d}.csv"] = csv_text(
            ("level", "solve_for", "p_degree_u", "p_degree_v", "branch", "residual"), rows
        )
    jr = joint_matching_residual(u, v, sec.joint_grid, sec.margin)
    files["joint_residual.json"] = json_text({
        "u": u, "v": v, "grid": sec.joint_grid, "margin": sec.margin,
        "min_residual": jr.min_residual, "p_degree_u": jr.p_low, "p_degree_v": jr.p_high,
        "omitted_grid_points": omitted,
    })
    spec = sec.spec
    if spec is not None:
        rows = closed_form_table(spec, sec.p_grid, sec.copies, cap)
        keys = list(rows[0]) if rows else []
        files["closed_form_vs_exact.csv"] = csv_text(keys, [[r[k] for k in keys] for r in rows])
    return files


def run_decide(sc: Scenario) -> dict[str, str]:
    _require(sc, "graph")
    if sc.decide is None:
        raise ScenarioError("$.decide", "missing required key")
    dec, g = sc.decide, sc.graph
    emap = sc.exposure or NeighborCountCapped(2)
    decisions, averages = [], []
    for name, model in dec.tables:
        table = build_table(sc, model)
        results = [(text, value, est.eao(grid_policy(dec.family, value, g.n), table, sc.engine)) for text, value in dec.values]
        best = est.select_policy([(value, r.value) for _, value, r in results])
        for k, (text, value, r) in enumerate(results):
            decisions.append([name, dec.family, text, value, float(r.value), float(r.std_error), r.method, int(k == best)])
        ybar = est.exposure_averages(table, emap, sc.engine.cap)
        for level, (label, y) in enumerate(zip(emap.level_names(g), ybar)):
            averages.append([name, level, label, float(y)])
    return {
        "decision.csv": csv_text(("table", "family", "parameter", "parameter_value", "eao", "std_error", "method", "selected"), decisions),
        "exposure_averages.csv": csv_text(("table", "level", "level_name", "avg_po"), averages),
    }


# ---------------------------------------------------------------------------
# argument handling


def _floats(text: str) -> list[float]:
    from fractions import Fraction

    try:
        return [float(Fraction(t)) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netestimands", description="Exact and Monte Carlo estimands under network interference.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_required=True):
        if scenario_required:
            p.add_argument("scenario", type=Path, help="scenario JSON file")
        else:
            p.add_argument("scenario", type=Path, nargs="?", help="optional scenario JSON file")
        p.add_argument("--mode", choices=("exact", "mc"), help="computation mode")
        p.add_argument("--samples", type=int, help="Monte Carlo sample count")
        p.add_argument("--seed", type=int, help="Monte Carlo seed")
        p.add_argument("--cap", type=int, help="largest unit count for exact enumeration")
        p.add_argument("--workers", type=int, help="threads for exact enumeration")
        p.add_argument("--out", type=Path, help="output directory")
        return p

    common(sub.add_parser("eval", help="evaluate requested estimands"))
    common(sub.add_parser("equiv", help="compare the two averaging routes"))
    common(sub.add_parser("decide", help="pick the best policy on a grid by EAO"))
    b = common(sub.add_parser("biclique", help="closed forms and matching curves on K_{u,v}"), scenario_required=False)
    b.add_argument("--u", type=int)
    b.add_argument("--v", type=int)
    b.add_argument("--y-left", type=_floats, help="outcomes of the degree-v units by level")
    b.add_argument("--y-right", type=_floats, help="outcomes of the degree-u units by level")
    b.add_argument("--p-grid", type=_floats)
    b.add_argument("--copies", type=lambda t: [int(x) for x in t.split(",")])
    return parser


def apply_flags(sc: Scenario, args) -> Scenario:
    changes = {}
    if args.mode is not None:
        changes["mode"] = EXACT if args.mode == "exact" else MONTE_CARLO
    for flag, key in (("samples", "n_samples"), ("seed", "seed"), ("cap", "cap"), ("workers", "workers")):
        value = getattr(args, flag)
        if value is not None:
            if value < (0 if flag == "seed" else 1):
                raise ScenarioError(f"--{flag}", f"invalid value {value}")
            changes[key] = value
    if changes:
        sc.engine = replace(sc.engine, **changes)
    if args.out is not None:
        sc.output_dir = args.out
    return sc


def _biclique_section(sc: Scenario, args) -> BicliqueSection:
    raw = {}
    sec = sc.biclique
    if sec is not None:
        raw = {k: getattr(sec, k) for k in ("u", "v", "y_left", "y_right", "p_grid", "copies", "curve_grid", "joint_grid", "margin")}
        raw = {k: list(x) if isinstance(x, tuple) else x for k, x in raw.items() if x is not None}
    for flag, key in (("u", "u"), ("v", "v"), ("y_left", "y_left"), ("y_right", "y_right"), ("p_grid", "p_grid"), ("copies", "copies")):
        value = getattr(args, flag)
        if value is not None:
            raw[key] = value
    if "u" not in raw or "v" not in raw:
        raise ScenarioError("$.biclique", "need u and v (scenario biclique section or --u/--v)")
    return parse_biclique(raw, "$.biclique")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.scenario is not None:
            sc = load_scenario(args.scenario)
        else:
            sc = parse_scenario({})
        sc = apply_flags(sc, args)
        if args.command == "biclique":
            section = _biclique_section(sc, args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: invalid scenario: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        if args.command == "eval":
            files = run_eval(sc)
        elif args.command == "equiv":
            files = run_equiv(sc)
        elif args.command == "decide":
            files = run_decide(sc)
        else:
            files = run_biclique(section, sc.engine.cap)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for path in write_outputs(sc.output_dir, files):
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
