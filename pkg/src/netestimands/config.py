"""Scenario files: JSON documents validated in full before any computation.

Units and graph labels in scenario files are 1-based. Unknown keys are
errors. Probabilities may be written as numbers or as ``"a/b"`` strings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .biclique import BicliqueSpec
from .engine import EXACT, MONTE_CARLO, EngineSettings
from .estimands import (
    FULL_POPULATION,
    TREATED,
    UNTREATED,
    FocalMapping,
    by_exposure,
    neighbor_union,
    non_neighbor_intersection,
)
from .exposure import ExposureMap, NeighborCountCapped, OwnAndAnyNeighbor, OwnTreatmentExposure
from .graph import Graph, NeighborhoodStructure, biclique, disjoint_copies, empty_graph, read_edge_list, unique_pairs
from .policy import (
    AllOrNone,
    CompletelyRandomized,
    HeterogeneousBernoulli,
    HomogeneousBernoulli,
    Policy,
    bernoulli_by_degree,
)
from .science import (
    ConstantBaseline,
    ExplicitTable,
    ExposureResponse,
    LinearCombination,
    OneTreatedNeighborIndicator,
    OutcomeModel,
    OwnTreatment,
    TreatedNeighborCount,
    read_table_csv,
)


class ScenarioError(ValueError):
    """Invalid scenario; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


ESTIMANDS = (
    "eao",
    "efao",
    "efao_contrast",
    "welfare",
    "avg_direct_effect",
    "avg_indirect_effect",
    "eate",
    "gate",
    "avg_po_by_exposure",
    "eao_decomposition",
)


@dataclass
class EstimandRequest:
    estimand: str
    label: str
    focal: Optional[FocalMapping] = None
    focal2: Optional[FocalMapping] = None
    components: list[tuple[FocalMapping, float]] = field(default_factory=list)
    neighborhood: Optional[NeighborhoodStructure] = None
    level: Optional[int] = None
    m: Optional[int] = None


@dataclass
class EquivSection:
    copies: tuple[int, ...] = (1, 2, 4, 8)
    random_tables: int = 0
    table_seed: int = 0


@dataclass
class BicliqueSection:
    u: int
    v: int
    y_left: Optional[tuple[float, ...]] = None
    y_right: Optional[tuple[float, ...]] = None
    p_grid: tuple[float, ...] = (0.3, 0.5, 0.7)
    copies: tuple[int, ...] = (1, 2, 4, 8, 16, 32)
    curve_grid: float = 0.01
    joint_grid: float = 0.005
    margin: float = 0.05

    @property
    def spec(self) -> Optional[BicliqueSpec]:
        if self.y_left is None:
            return None
        return BicliqueSpec(self.u, self.v, self.y_left, self.y_right)


@dataclass
class DecideSection:
    family: str
    values: list[tuple[str, float]]
    tables: list[tuple[str, OutcomeModel]]


@dataclass
class Scenario:
    graph: Optional[Graph] = None
    model: Optional[OutcomeModel] = None
    exposure: Optional[ExposureMap] = None
    policies: list[Policy] = field(default_factory=list)
    estimands: list[EstimandRequest] = field(default_factory=list)
    engine: EngineSettings = field(default_factory=EngineSettings)
    output_dir: Path = Path("results")
    equiv: EquivSection = field(default_factory=EquivSection)
    biclique: Optional[BicliqueSection] = None
    decide: Optional[DecideSection] = None


# ---------------------------------------------------------------------------
# primitive readers


def _obj(node: Any, path: str, required: tuple[str, ...] = (), optional: tuple[str, ...] = ()) -> dict:
    if not isinstance(node, dict):
        raise ScenarioError(path, f"expected an object, got {type(node).__name__}")
    for key in node:
        if key not in required and key not in optional:
            raise ScenarioError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in node:
            raise ScenarioError(f"{path}.{key}", "missing required key")
    return node


def _int(node: Any, path: str, lo: Optional[int] = None, hi: Optional[int] = None) -> int:
    if isinstance(node, bool) or not isinstance(node, int):
        raise ScenarioError(path, f"expected an integer, got {node!r}")
    if lo is not None and node < lo:
        raise ScenarioError(path, f"must be at least {lo}, got {node}")
    if hi is not None and node > hi:
        raise ScenarioError(path, f"must be at most {hi}, got {node}")
    return node


def _float(node: Any, path: str) -> float:
    if isinstance(node, str):
        try:
            return float(Fraction(node))
        except (ValueError, ZeroDivisionError):
            raise ScenarioError(path, f"cannot parse number {node!r}") from None
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise ScenarioError(path, f"expected a number, got {node!r}")
    return float(node)


def _prob(node: Any, path: str) -> float:
    x = _float(node, path)
    if not 0.0 <= x <= 1.0:
        raise ScenarioError(path, f"probability must lie in [0, 1], got {x}")
    return x


def _list(node: Any, path: str) -> list:
    if not isinstance(node, list):
        raise ScenarioError(path, f"expected a list, got {type(node).__name__}")
    return node


def _str(node: Any, path: str, choices: Optional[tuple[str, ...]] = None) -> str:
    if not isinstance(node, str):
        raise ScenarioError(path, f"expected a string, got {node!r}")
    if choices is not None and node not in choices:
        raise ScenarioError(path, f"unknown value {node!r}; expected one of {', '.join(choices)}")
    return node


def _degree_map(node: Any, path: str, value) -> dict[int, float]:
    obj = _obj(node, path, optional=tuple(node) if isinstance(node, dict) else ())
    out = {}
    for key, x in obj.items():
        try:
            deg = int(key)
        except ValueError:
            raise ScenarioError(f"{path}.{key}", "degree keys must be integers") from None
        out[deg] = value(x, f"{path}.{key}")
    return out


def _per_unit(node: Any, path: str, n: int, value=_float):
    if isinstance(node, list):
        if len(node) != n:
            raise ScenarioError(path, f"expected {n} entries (one per unit), got {len(node)}")
        return tuple(value(x, f"{path}[{k}]") for k, x in enumerate(node))
    return value(node, path)


# ---------------------------------------------------------------------------
# sections


def parse_graph(node: Any, path: str, base: Path) -> Graph:
    kind = _str(_obj(node, path, ("type",), tuple(node) if isinstance(node, dict) else ()).get("type"), f"{path}.type",
                ("biclique", "edge_list", "edges", "empty"))
    if kind == "biclique":
        obj = _obj(node, path, ("type", "u", "v"), ("copies",))
        g = biclique(_int(obj["u"], f"{path}.u", 1), _int(obj["v"], f"{path}.v", 1))
    elif kind == "edge_list":
        obj = _obj(node, path, ("type", "path"), ("n", "copies"))
        file = base / _str(obj["path"], f"{path}.path")
        n = _int(obj["n"], f"{path}.n", 1) if "n" in obj else None
        try:
            g = read_edge_list(file, n)
        except OSError as exc:
            raise ScenarioError(f"{path}.path", f"cannot read {file}: {exc.strerror}") from None
        except ValueError as exc:
            raise ScenarioError(f"{path}.path", f"{file}: {exc}") from None
    elif kind == "edges":
        obj = _obj(node, path, ("type", "n", "edges"), ("copies",))
        n = _int(obj["n"], f"{path}.n", 1)
        edges = []
        for k, e in enumerate(_list(obj["edges"], f"{path}.edges")):
            p = f"{path}.edges[{k}]"
            e = _list(e, p)
            if len(e) != 2:
                raise ScenarioError(p, "an edge is a pair of unit labels")
            a, b = _int(e[0], p, 1, n), _int(e[1], p, 1, n)
            if a == b:
                raise ScenarioError(p, f"self-loop at unit {a}")
            edges.append((a - 1, b - 1))
        g = Graph.from_edges(n, edges)
    else:
        obj = _obj(node, path, ("type", "n"), ("copies",))
        g = empty_graph(_int(obj["n"], f"{path}.n", 1))
    if "copies" in obj:
        g = disjoint_copies(g, _int(obj["copies"], f"{path}.copies", 1))
    return g


def parse_exposure(node: Any, path: str) -> ExposureMap:
    obj = _obj(node, path, ("family",), ("cap",))
    family = _str(obj["family"], f"{path}.family", ("own_treatment", "neighbor_count_capped", "own_and_any_neighbor"))
    if family != "neighbor_count_capped" and "cap" in obj:
        raise ScenarioError(f"{path}.cap", f"not a parameter of {family}")
    if family == "own_treatment":
        return OwnTreatmentExposure()
    if family == "own_and_any_neighbor":
        return OwnAndAnyNeighbor()
    return NeighborCountCapped(_int(obj.get("cap", 2), f"{path}.cap", 1))


MODEL_FAMILIES = (
    "own_treatment",
    "treated_neighbor_count",
    "one_treated_neighbor_indicator",
    "constant_baseline",
    "explicit_table",
    "random_table",
    "exposure_response",
    "linear_combination",
)


def _coefficients(obj: dict, key: str, path: str, g: Graph, default: float):
    by_deg = f"{key}_by_degree"
    if key in obj and by_deg in obj:
        raise ScenarioError(path, f"give either {key} or {by_deg}, not both")
    if by_deg in obj:
        table = _degree_map(obj[by_deg], f"{path}.{by_deg}", _float)
        missing = sorted({int(d) for d in g.degrees} - set(table))
        if missing:
            raise ScenarioError(f"{path}.{by_deg}", f"no value for degree {missing[0]}")
        return tuple(table[int(d)] for d in g.degrees)
    if key in obj:
        return _per_unit(obj[key], f"{path}.{key}", g.n)
    return default


def parse_model(node: Any, path: str, g: Graph, base: Path, exposure: Optional[ExposureMap]) -> OutcomeModel:
    head = _obj(node, path, ("family",), tuple(node) if isinstance(node, dict) else ())
    family = _str(head["family"], f"{path}.family", MODEL_FAMILIES)
    if family == "own_treatment":
        obj = _obj(node, path, ("family",), ("alpha", "tau"))
        return OwnTreatment(_float(obj.get("alpha", 0.0), f"{path}.alpha"), _float(obj.get("tau", 1.0), f"{path}.tau"))
    if family == "treated_neighbor_count":
        _obj(node, path, ("family",))
        return TreatedNeighborCount()
    if family == "one_treated_neighbor_indicator":
        obj = _obj(node, path, ("family",), ("c", "c_by_degree"))
        return OneTreatedNeighborIndicator(_coefficients(obj, "c", path, g, 1.0))
    if family == "constant_baseline":
        obj = _obj(node, path, ("family",), ("b", "b_by_degree"))
        return ConstantBaseline(_coefficients(obj, "b", path, g, 0.0))
    if family == "explicit_table":
        obj = _obj(node, path, ("family",), ("path", "values"))
        if ("path" in obj) == ("values" in obj):
            raise ScenarioError(path, "explicit_table needs exactly one of path or values")
        try:
            if "path" in obj:
                model = read_table_csv(base / _str(obj["path"], f"{path}.path")).model
            else:
                model = ExplicitTable(_list(obj["values"], f"{path}.values"))
        except OSError as exc:
            raise ScenarioError(f"{path}.path", f"cannot read table: {exc.strerror}") from None
        except ValueError as exc:
            raise ScenarioError(path, str(exc)) from None
        if model.values.shape[0] != g.n:
            raise ScenarioError(path, f"table has {model.values.shape[0]} units but the graph has {g.n}")
        return model
    if family == "random_table":
        obj = _obj(node, path, ("family", "seed"), ("scale",))
        from .science import random_table

        seed = _int(obj["seed"], f"{path}.seed", 0)
        if g.n > 20:
            raise ScenarioError(path, f"random tables are dense; {g.n} units is too many")
        return random_table(g, seed, _float(obj.get("scale", 1.0), f"{path}.scale")).model
    if family == "exposure_response":
        obj = _obj(node, path, ("family",), ("exposure", "values", "by_label"))
        emap = parse_exposure(obj["exposure"], f"{path}.exposure") if "exposure" in obj else exposure
        if emap is None:
            raise ScenarioError(path, "exposure_response needs an exposure map (here or at top level)")
        k = emap.num_levels(g)
        if ("values" in obj) == ("by_label" in obj):
            raise ScenarioError(path, "give exactly one of values or by_label")
        if "values" in obj:
            rows = [_list(r, f"{path}.values[{i}]") for i, r in enumerate(_list(obj["values"], f"{path}.values"))]
            if len(rows) != g.n:
                raise ScenarioError(f"{path}.values", f"expected {g.n} rows, got {len(rows)}")
        else:
            if g.labels is None:
                raise ScenarioError(f"{path}.by_label", "graph has no unit labels")
            labelled = _obj(obj["by_label"], f"{path}.by_label", tuple(sorted(set(g.labels))))
            rows = [_list(labelled[lab], f"{path}.by_label.{lab}") for lab in g.labels]
        out = []
        for i, row in enumerate(rows):
            if len(row) != k:
                raise ScenarioError(f"{path}", f"unit {i + 1} needs {k} outcomes (one per level), got {len(row)}")
            out.append(tuple(_float(x, f"{path}.values[{i}]") for x in row))
        return ExposureResponse(emap, tuple(out))
    obj = _obj(node, path, ("family", "terms"))
    terms = []
    for k, t in enumerate(_list(obj["terms"], f"{path}.terms")):
        tp = f"{path}.terms[{k}]"
        t = _obj(t, tp, ("weight", "model"))
        terms.append((_float(t["weight"], f"{tp}.weight"), parse_model(t["model"], f"{tp}.model", g, base, exposure)))
    return LinearCombination(tuple(terms))


POLICY_FAMILIES = ("homogeneous_bernoulli", "heterogeneous_bernoulli", "completely_randomized", "all_or_none", "conditioned")


def parse_policy(node: Any, path: str, g: Graph) -> Policy:
    head = _obj(node, path, ("family",), tuple(node) if isinstance(node, dict) else ())
    family = _str(head["family"], f"{path}.family", POLICY_FAMILIES)
    n = g.n
    if family == "homogeneous_bernoulli":
        obj = _obj(node, path, ("family", "p"))
        return HomogeneousBernoulli(n, _prob(obj["p"], f"{path}.p"))
    if family == "heterogeneous_bernoulli":
        obj = _obj(node, path, ("family",), ("p", "p_by_degree"))
        if ("p" in obj) == ("p_by_degree" in obj):
            raise ScenarioError(path, "give exactly one of p or p_by_degree")
        if "p" in obj:
            ps = _list(obj["p"], f"{path}.p")
            if len(ps) != n:
                raise ScenarioError(f"{path}.p", f"expected {n} probabilities, got {len(ps)}")
            return HeterogeneousBernoulli(tuple(_prob(x, f"{path}.p[{k}]") for k, x in enumerate(ps)))
        table = _degree_map(obj["p_by_degree"], f"{path}.p_by_degree", _prob)
        try:
            return bernoulli_by_degree(g, table)
        except ValueError as exc:
            raise ScenarioError(f"{path}.p_by_degree", str(exc)) from None
    if family == "completely_randomized":
        obj = _obj(node, path, ("family", "m"))
        return CompletelyRandomized(n, _int(obj["m"], f"{path}.m", 0, n))
    if family == "all_or_none":
        obj = _obj(node, path, ("family",), ("q",))
        return AllOrNone(n, _prob(obj.get("q", 0.5), f"{path}.q"))
    obj = _obj(node, path, ("family", "base", "fixed"))
    base = parse_policy(obj["base"], f"{path}.base", g)
    fixed = {}
    for key, val in _obj(obj["fixed"], f"{path}.fixed", optional=tuple(obj["fixed"]) if isinstance(obj["fixed"], dict) else ()).items():
        try:
            unit = int(key)
        except ValueError:
            raise ScenarioError(f"{path}.fixed.{key}", "unit keys must be integers") from None
        if not 1 <= unit <= n:
            raise ScenarioError(f"{path}.fixed.{key}", f"unit out of range 1..{n}")
        fixed[unit - 1] = _int(val, f"{path}.fixed.{key}", 0, 1)
    return base.condition(fixed)


def parse_neighborhood(node: Any, path: str, g: Graph) -> NeighborhoodStructure:
    if node == "graph":
        return NeighborhoodStructure.from_graph(g)
    obj = _obj(node, path, ("unique_pairs",))
    targets = [_int(t, f"{path}.unique_pairs[{k}]", 1, g.n) - 1 for k, t in enumerate(_list(obj["unique_pairs"], f"{path}.unique_pairs"))]
    try:
        return unique_pairs(g.n, targets)
    except ValueError as exc:
        raise ScenarioError(f"{path}.unique_pairs", f"{exc} (0-based index)") from None


def parse_focal(node: Any, path: str, g: Graph, exposure: Optional[ExposureMap]) -> FocalMapping:
    simple = {"treated": TREATED, "untreated": UNTREATED, "full_population": FULL_POPULATION}
    if isinstance(node, str):
        if node in simple:
            return simple[node]
        raise ScenarioError(path, f"unknown focal mapping {node!r}; use treated, untreated, full_population or an object")
    head = _obj(node, path, ("variant",), tuple(node) if isinstance(node, dict) else ())
    variant = _str(head["variant"], f"{path}.variant",
                   ("treated", "untreated", "full_population", "neighbor_union", "non_neighbor_intersection", "by_exposure"))
    if variant in simple:
        _obj(node, path, ("variant",))
        return simple[variant]
    if variant == "by_exposure":
        obj = _obj(node, path, ("variant", "level"))
        if exposure is None:
            raise ScenarioError(path, "by_exposure focal mapping needs a top-level exposure_map")
        level = _int(obj["level"], f"{path}.level", 0, exposure.num_levels(g) - 1)
        return by_exposure(exposure, level)
    obj = _obj(node, path, ("variant", "neighborhood"))
    ns = parse_neighborhood(obj["neighborhood"], f"{path}.neighborhood", g)
    return neighbor_union(ns) if variant == "neighbor_union" else non_neighbor_intersection(ns)


def parse_estimand(node: Any, path: str, g: Graph, exposure: Optional[ExposureMap]) -> EstimandRequest:
    head = _obj(node, path, ("estimand",), tuple(node) if isinstance(node, dict) else ())
    name = _str(head["estimand"], f"{path}.estimand", ESTIMANDS)
    params = {
        "efao": (("focal",), ()),
        "efao_contrast": (("focal", "focal2"), ()),
        "welfare": (("components",), ()),
        "avg_indirect_effect": ((), ("neighborhood",)),
        "avg_po_by_exposure": (("level",), ()),
        "eao_decomposition": (("m",), ()),
    }.get(name, ((), ()))
    obj = _obj(node, path, ("estimand",) + params[0], ("label",) + params[1])
    req = EstimandRequest(name, _str(obj["label"], f"{path}.label") if "label" in obj else name)
    if "focal" in obj:
        req.focal = parse_focal(obj["focal"], f"{path}.focal", g, exposure)
        if "label" not in obj:
            req.label = f"{name}[{req.focal.label}]"
    if "focal2" in obj:
        req.focal2 = parse_focal(obj["focal2"], f"{path}.focal2", g, exposure)
        if "label" not in obj:
            req.label = f"{name}[{req.focal.label},{req.focal2.label}]"
    if name == "welfare":
        for k, c in enumerate(_list(obj["components"], f"{path}.components")):
            cp = f"{path}.components[{k}]"
            c = _obj(c, cp, ("focal", "weight"))
            req.components.append((parse_focal(c["focal"], f"{cp}.focal", g, exposure), _float(c["weight"], f"{cp}.weight")))
    if name == "avg_indirect_effect":
        req.neighborhood = parse_neighborhood(obj.get("neighborhood", "graph"), f"{path}.neighborhood", g)
        empty = [i for i, s in enumerate(req.neighborhood.sets) if not s]
        if empty:
            raise ScenarioError(f"{path}.neighborhood", f"unit {empty[0] + 1} has an empty neighborhood")
    if name == "avg_po_by_exposure":
        if exposure is None:
            raise ScenarioError(path, "avg_po_by_exposure needs a top-level exposure_map")
        req.level = _int(obj["level"], f"{path}.level", 0, exposure.num_levels(g) - 1)
        if "label" not in obj:
            req.label = f"avg_po_by_exposure[{exposure.level_names(g)[req.level]}]"
    if name == "eao_decomposition":
        req.m = _int(obj["m"], f"{path}.m", 1, g.n)
        if "label" not in obj:
            req.label = f"eao_decomposition[m={req.m}]"
    return req


def parse_engine(node: Any, path: str) -> EngineSettings:
    obj = _obj(node, path, optional=("mode", "n_samples", "seed", "cap", "workers"))
    mode = _str(obj.get("mode", EXACT), f"{path}.mode", (EXACT, "mc", MONTE_CARLO))
    return EngineSettings(
        mode=MONTE_CARLO if mode == "mc" else mode,
        n_samples=_int(obj.get("n_samples", 100_000), f"{path}.n_samples", 1),
        seed=_int(obj.get("seed", 0), f"{path}.seed", 0),
        cap=_int(obj.get("cap", 20), f"{path}.cap", 1, 30),
        workers=_int(obj.get("workers", 1), f"{path}.workers", 1),
    )


def parse_biclique(node: Any, path: str) -> BicliqueSection:
    obj = _obj(node, path, ("u", "v"), ("y_left", "y_right", "p_grid", "copies", "curve_grid", "joint_grid", "margin"))
    u, v = _int(obj["u"], f"{path}.u", 1), _int(obj["v"], f"{path}.v", 1)
    if u > v:
        raise ScenarioError(path, f"expected u <= v, got u={u}, v={v}; swap u and v (and the outcome halves)")
    sec = BicliqueSection(u, v)
    if ("y_left" in obj) != ("y_right" in obj):
        raise ScenarioError(path, "give both y_left and y_right or neither")
    if "y_left" in obj:
        for key in ("y_left", "y_right"):
            ys = _list(obj[key], f"{path}.{key}")
            if len(ys) != u + 1:
                raise ScenarioError(f"{path}.{key}", f"need {u + 1} outcomes (levels 0..{u}), got {len(ys)}")
            setattr(sec, key, tuple(_float(y, f"{path}.{key}[{k}]") for k, y in enumerate(ys)))
    if "p_grid" in obj:
        sec.p_grid = tuple(_prob(p, f"{path}.p_grid[{k}]") for k, p in enumerate(_list(obj["p_grid"], f"{path}.p_grid")))
    if "copies" in obj:
        sec.copies = tuple(_int(c, f"{path}.copies[{k}]", 1) for k, c in enumerate(_list(obj["copies"], f"{path}.copies")))
    for key in ("curve_grid", "joint_grid"):
        if key in obj:
            step = _float(obj[key], f"{path}.{key}")
            if not 0.0 < step <= 0.5:
                raise ScenarioError(f"{path}.{key}", "grid step must lie in (0, 0.5]")
            setattr(sec, key, step)
    if "margin" in obj:
        sec.margin = _float(obj["margin"], f"{path}.margin")
        if not 0.0 < sec.margin < 0.5:
            raise ScenarioError(f"{path}.margin", "margin must lie in (0, 0.5)")
    return sec


GRID_FAMILIES = ("homogeneous_bernoulli", "completely_randomized", "all_or_none")


def grid_policy(family: str, value: float, n: int) -> Policy:
    if family == "homogeneous_bernoulli":
        return HomogeneousBernoulli(n, value)
    if family == "completely_randomized":
        return CompletelyRandomized(n, int(value))
    return AllOrNone(n, value)


def parse_decide(node: Any, path: str, g: Graph, base: Path, exposure: Optional[ExposureMap]) -> DecideSection:
    obj = _obj(node, path, ("policy_family", "values", "tables"))
    family = _str(obj["policy_family"], f"{path}.policy_family", GRID_FAMILIES)
    values = []
    for k, x in enumerate(_list(obj["values"], f"{path}.values")):
        vp = f"{path}.values[{k}]"
        if family == "completely_randomized":
            values.append((str(x), float(_int(x, vp, 0, g.n))))
        else:
            values.append((str(x), _prob(x, vp)))
    if not values:
        raise ScenarioError(f"{path}.values", "policy grid is empty")
    tables = []
    for k, t in enumerate(_list(obj["tables"], f"{path}.tables")):
        tp = f"{path}.tables[{k}]"
        t = _obj(t, tp, ("name", "model"))
        tables.append((_str(t["name"], f"{tp}.name"), parse_model(t["model"], f"{tp}.model", g, base, exposure)))
    if not tables:
        raise ScenarioError(f"{path}.tables", "need at least one table")
    return DecideSection(family, values, tables)


TOP_KEYS = ("graph", "outcome_model", "exposure_map", "policy", "policies", "estimands", "engine", "output", "equiv", "biclique", "decide")


def parse_scenario(data: Any, base: Path = Path(".")) -> Scenario:
    obj = _obj(data, "$", optional=TOP_KEYS)
    sc = Scenario()
    if "engine" in obj:
        sc.engine = parse_engine(obj["engine"], "$.engine")
    if "output" in obj:
        out = _obj(obj["output"], "$.output", optional=("dir",))
        if "dir" in out:
            sc.output_dir = base / _str(out["dir"], "$.output.dir")
    if "biclique" in obj:
        sc.biclique = parse_biclique(obj["biclique"], "$.biclique")
    if "graph" not in obj:
        if any(k in obj for k in ("outcome_model", "policy", "policies", "estimands", "decide", "exposure_map")):
            raise ScenarioError("$.graph", "missing required key")
        return sc
    g = sc.graph = parse_graph(obj["graph"], "$.graph", base)
    if "exposure_map" in obj:
        sc.exposure = parse_exposure(obj["exposure_map"], "$.exposure_map")
    if "outcome_model" in obj:
        sc.model = parse_model(obj["outcome_model"], "$.outcome_model", g, base, sc.exposure)
    if "policy" in obj and "policies" in obj:
        raise ScenarioError("$", "give either policy or policies, not both")
    if "policy" in obj:
        sc.policies = [parse_policy(obj["policy"], "$.policy", g)]
    elif "policies" in obj:
        sc.policies = [parse_policy(p, f"$.policies[{k}]", g) for k, p in enumerate(_list(obj["policies"], "$.policies"))]
    if "estimands" in obj:
        sc.estimands = [parse_estimand(e, f"$.estimands[{k}]", g, sc.exposure) for k, e in enumerate(_list(obj["estimands"], "$.estimands"))]
    if "equiv" in obj:
        eq = _obj(obj["equiv"], "$.equiv", optional=("copies", "random_tables"))
        sec = EquivSection()
        if "copies" in eq:
            sec.copies = tuple(_int(c, f"$.equiv.copies[{k}]", 1) for k, c in enumerate(_list(eq["copies"], "$.equiv.copies")))
        if "random_tables" in eq:
            rt = _obj(eq["random_tables"], "$.equiv.random_tables", ("count",), ("seed",))
            sec.random_tables = _int(rt["count"], "$.equiv.random_tables.count", 1)
            sec.table_seed = _int(rt.get("seed", 0), "$.equiv.random_tables.seed", 0)
        sc.equiv = sec
    if "decide" in obj:
        sc.decide = parse_decide(obj["decide"], "$.decide", g, base, sc.exposure)
    return sc


def load_scenario(path: Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError("", f"cannot read scenario {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("", f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_scenario(data, Path(path).parent)
