"""Estimand catalog for the two averaging routes over the science table.

Assignments-then-units estimands (direct/indirect effects, EATE, average
potential outcomes by exposure) first take expectations per unit and then
average over units. Units-then-assignments estimands (EAO, EFAO and their
contrasts) first average over a focal set of units within each assignment
and then take the expectation over the policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .assignments import popcounts
from .engine import (
    EXACT,
    Batch,
    EngineSettings,
    EstimandResult,
    Functional,
    combination,
    exact_means,
)
from .errors import EnumerationTooLarge, UnattainableLevel, ZeroProbabilityEvent
from .exposure import ExposureMap, level_outcomes
from .graph import Graph, NeighborhoodStructure
from .policy import AllOrNone, CompletelyRandomized, HeterogeneousBernoulli, HomogeneousBernoulli, Policy
from .science import DEFAULT_CAP, ScienceTable

# dual-route agreement threshold for the "equal" verdict
EQUAL_TOL = 1e-9


@dataclass(frozen=True)
class FocalMapping:
    """Rule sending a treated set ``S`` to the focal units ``N_S``.

    For the neighborhood variants unit ``i`` is focal when some ``j`` in
    ``N_i`` is treated (``neighbor_union``) or when none is
    (``non_neighbor_intersection``). With symmetric neighborhoods this is the
    same as ``N_S = union of N_j over treated j`` and its complement.
    """

    variant: str
    neighborhood: Optional[NeighborhoodStructure] = None
    exposure: Optional[ExposureMap] = None
    level: Optional[int] = None
    fn: Optional[Callable[[np.ndarray, Graph], np.ndarray]] = field(default=None, compare=False)
    name: str = ""

    VARIANTS = (
        "treated",
        "untreated",
        "neighbor_union",
        "non_neighbor_intersection",
        "by_exposure",
        "full_population",
        "custom",
    )

    def __post_init__(self):
        if self.variant not in self.VARIANTS:
            raise ValueError(f"unknown focal variant {self.variant!r}")
        if self.variant in ("neighbor_union", "non_neighbor_intersection") and self.neighborhood is None:
            raise ValueError(f"{self.variant} needs a neighborhood structure")
        if self.variant == "by_exposure" and (self.exposure is None or self.level is None):
            raise ValueError("by_exposure needs an exposure map and a level")
        if self.variant == "custom" and self.fn is None:
            raise ValueError("custom focal mapping needs a function")

    @property
    def label(self) -> str:
        if self.name:
            return self.name
        if self.variant == "by_exposure":
            return f"exposure={self.level}"
        return self.variant

    def indicator(self, z: np.ndarray, g: Graph) -> np.ndarray:
        """``(m, n)`` boolean membership of each unit in ``N_S``."""
        v = self.variant
        if v == "treated":
            return z
        if v == "untreated":
            return ~z
        if v == "full_population":
            return np.ones_like(z, dtype=bool)
        if v in ("neighbor_union", "non_neighbor_intersection"):
            if self.neighborhood.n != g.n:
                raise ValueError(f"neighborhood has {self.neighborhood.n} units, graph has {g.n}")
            hit = (z.astype(np.float64) @ self.neighborhood.matrix.T) > 0
            return hit if v == "neighbor_union" else ~hit
        if v == "by_exposure":
            return self.exposure.levels(z, g) == self.level
        out = np.asarray(self.fn(z, g), dtype=bool)
        if out.shape != z.shape:
            raise ValueError(f"custom focal mapping returned shape {out.shape}, expected {z.shape}")
        return out


TREATED = FocalMapping("treated")
UNTREATED = FocalMapping("untreated")
FULL_POPULATION = FocalMapping("full_population")


def neighbor_union(ns: NeighborhoodStructure) -> FocalMapping:
    return FocalMapping("neighbor_union", neighborhood=ns)


def non_neighbor_intersection(ns: NeighborhoodStructure) -> FocalMapping:
    return FocalMapping("non_neighbor_intersection", neighborhood=ns)


def by_exposure(emap: ExposureMap, level: int) -> FocalMapping:
    return FocalMapping("by_exposure", exposure=emap, level=level)


def _settings(settings: Optional[EngineSettings]) -> EngineSettings:
    return settings or EngineSettings()


def _focal_functional(fm: FocalMapping) -> Functional:
    def value(b: Batch):
        a = fm.indicator(b.z, b.table.graph)
        count = a.sum(axis=1)
        set_form = np.where(a, b.y, 0.0).sum(axis=1) / count
        n = b.z.shape[1]
        unit_form = (np.where(a, b.y, 0.0) / (count / n)[:, None]).mean(axis=1)
        return np.stack([set_form, unit_form], axis=1)

    def event(b: Batch):
        return fm.indicator(b.z, b.table.graph).any(axis=1)

    return Functional(value, event, name=f"efao[{fm.label}]", event_name=f"focal set {fm.label} nonempty")


def eao(pi: Policy, table: ScienceTable, settings: Optional[EngineSettings] = None) -> EstimandResult:
    """Expected average outcome ``E_pi[mean_i Y_i]``."""
    f = Functional(lambda b: b.y.mean(axis=1), name="eao")
    return combination([(1.0, f)], pi, table, _settings(settings))


def unit_means(pi: Policy, table: ScienceTable, settings: Optional[EngineSettings] = None) -> np.ndarray:
    """``E_pi[Y_i]`` for every unit (assignments first)."""
    f = Functional(lambda b: b.y, name="unit means")
    return exact_means(f, pi, table, _settings(settings))[0]


def efao_forms(pi: Policy, table: ScienceTable, fm: FocalMapping, settings: Optional[EngineSettings] = None) -> tuple[float, float, float]:
    """Exact EFAO as a focal-set average and as a per-unit weighted average.

    Returns ``(set_form, unit_form, event_probability)``.
    """
    theta, den = exact_means(_focal_functional(fm), pi, table, _settings(settings))
    return float(theta[0]), float(theta[1]), float(den[0])


def efao(pi: Policy, table: ScienceTable, fm: FocalMapping, settings: Optional[EngineSettings] = None) -> EstimandResult:
    """Expected focal average outcome ``E_pi[mean_{i in N_S} Y_i | N_S nonempty]``.

    In exact mode the per-unit weighted form is computed in the same pass and
    must agree with the set form.
    """
    settings = _settings(settings)
    if settings.mode == EXACT:
        set_form, unit_form, prob = efao_forms(pi, table, fm, settings)
        if abs(set_form - unit_form) > 1e-9 * max(1.0, abs(set_form)):
            raise ArithmeticError(f"EFAO forms disagree: {set_form!r} vs {unit_form!r}")
        return EstimandResult(set_form, EXACT, 0.0, prob)
    return combination([(np.array([1.0, 0.0]), _focal_functional(fm))], pi, table, settings)


def efao_contrast(
    pi: Policy,
    table: ScienceTable,
    fm: FocalMapping,
    fm2: FocalMapping,
    settings: Optional[EngineSettings] = None,
) -> EstimandResult:
    """``efao(fm) - efao(fm2)``; the event probability reported is the smaller one."""
    w = np.array([1.0, 0.0])
    terms = [(w, _focal_functional(fm)), (-w, _focal_functional(fm2))]
    return combination(terms, pi, table, _settings(settings))


def welfare(
    pi: Policy,
    table: ScienceTable,
    components: Sequence[tuple[FocalMapping, float]],
    settings: Optional[EngineSettings] = None,
) -> EstimandResult:
    """Weighted sum of EFAOs, ``sum_k w_k * efao(fm_k)``."""
    if not components:
        return EstimandResult(0.0)
    terms = [(np.array([float(w), 0.0]), _focal_functional(fm)) for fm, w in components]
    return combination(terms, pi, table, _settings(settings))


def avg_direct_effect(pi: Policy, table: ScienceTable, settings: Optional[EngineSettings] = None) -> EstimandResult:
    """``mean_i [E(Y_i | Z_i=1) - E(Y_i | Z_i=0)]``."""
    n = table.n
    treated = Functional(
        lambda b: b.y, lambda b: b.z, name="direct[1]",
        event_name=lambda k: f"Z_{k + 1}=1 (unit {k + 1} is never treated)",
    )
    control = Functional(
        lambda b: b.y, lambda b: ~b.z, name="direct[0]",
        event_name=lambda k: f"Z_{k + 1}=0 (unit {k + 1} is always treated)",
    )
    w = np.full(n, 1.0 / n)
    return combination([(w, treated), (-w, control)], pi, table, _settings(settings))


def avg_indirect_effect(
    pi: Policy,
    table: ScienceTable,
    ns: NeighborhoodStructure,
    settings: Optional[EngineSettings] = None,
) -> EstimandResult:
    """``mean_i mean_{j in N_i} [E(Y_i | Z_j=1) - E(Y_i | Z_j=0)]``."""
    if ns.n != table.n:
        raise ValueError(f"neighborhood has {ns.n} units but table has {table.n}")
    empty = [i for i, s in enumerate(ns.sets) if not s]
    if empty:
        raise ValueError(f"unit {empty[0] + 1} has an empty neighborhood")
    pairs = [(i, j) for i, s in enumerate(ns.sets) for j in sorted(s)]
    units = np.array([i for i, _ in pairs])
    nbrs = np.array([j for _, j in pairs])
    w = np.array([1.0 / (ns.n * len(ns.sets[i])) for i, _ in pairs])

    def name(value):
        return lambda k: f"Z_{nbrs[k] + 1}={value} (neighbor of unit {units[k] + 1})"

    on = Functional(lambda b: b.y[:, units], lambda b: b.z[:, nbrs], name="indirect[1]", event_name=name(1))
    off = Functional(lambda b: b.y[:, units], lambda b: ~b.z[:, nbrs], name="indirect[0]", event_name=name(0))
    return combination([(w, on), (-w, off)], pi, table, _settings(settings))


def _eate_value(b: Batch) -> np.ndarray:
    n = b.z.shape[1]
    values = b.table.values
    total = np.zeros(b.z.shape[0])
    for i in range(n):
        if values is not None and b.masks is not None:
            hi = values[i, b.masks | (1 << i)]
            lo = values[i, b.masks & ~(1 << i)]
        else:
            z = b.z.copy()
            z[:, i] = True
            hi = b.outcomes(z)[:, i]
            z[:, i] = False
            lo = b.outcomes(z)[:, i]
        total += hi - lo
    return total / n


def eate(table: ScienceTable, pi: Policy, settings: Optional[EngineSettings] = None) -> EstimandResult:
    """Expected ATE: ``mean_i E[y_i(1, Z_-i) - y_i(0, Z_-i)]`` over the unconditional law of ``Z_-i``."""
    f = Functional(_eate_value, name="eate")
    return combination([(1.0, f)], pi, table, _settings(settings))


def gate(table: ScienceTable) -> float:
    """Global average treatment effect ``mean_i [y_i(all treated) - y_i(none treated)]``."""
    n = table.n
    ones = np.ones((1, n), dtype=bool)
    return float(np.mean(table.outcomes(ones)[0] - table.outcomes(~ones)[0]))


def exposure_averages(table: ScienceTable, emap: ExposureMap, cap: int = DEFAULT_CAP) -> np.ndarray:
    """``Ybar(d)`` for every level; NaN for levels some unit cannot reach."""
    per_unit = level_outcomes(table, emap, cap)
    return per_unit.mean(axis=0)


def avg_po_by_exposure(table: ScienceTable, emap: ExposureMap, d: int, cap: int = DEFAULT_CAP) -> float:
    """``Ybar(d) = mean_i y_i(d)`` under a map consistent with the table."""
    k = emap.num_levels(table.graph)
    if not 0 <= d < k:
        raise ValueError(f"level {d} out of range 0..{k - 1}")
    per_unit = level_outcomes(table, emap, cap)
    missing = np.flatnonzero(np.isnan(per_unit[:, d]))
    if missing.size:
        raise UnattainableLevel(int(missing[0]), d)
    return float(per_unit[:, d].mean())


class EAODecomposition(NamedTuple):
    delta: float
    direct: float
    spillover: float


def eao_decomposition(table: ScienceTable, m: int, cap: int = DEFAULT_CAP) -> EAODecomposition:
    """Split ``EAO(CR(m)) - EAO(CR(m-1))`` into the newly treated unit's change and everyone else's.

    A CR(m) assignment is drawn as a CR(m-1) assignment plus one uniformly
    chosen untreated unit ``j``; ``direct`` is the expected change in
    ``y_j / n`` and ``spillover`` the expected change in ``sum_{i != j} y_i / n``.
    ``delta`` is computed independently from the two EAOs.
    """
    n = table.n
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in 1..{n}, got {m}")
    settings = EngineSettings(cap=cap)
    delta = (
        eao(CompletelyRandomized(n, m), table, settings).value
        - eao(CompletelyRandomized(n, m - 1), table, settings).value
    )
    values = table.dense(cap)
    base = np.flatnonzero(popcounts(n) == m - 1).astype(np.int64)
    direct = spill = 0.0
    for j in range(n):
        sel = base[(base >> j) & 1 == 0]
        change = values[:, sel | (1 << j)] - values[:, sel]
        own = change[j].sum()
        direct += own
        spill += change.sum() - own
    weight = 1.0 / (math.comb(n, m - 1) * (n - m + 1) * n)
    return EAODecomposition(float(delta), float(direct * weight), float(spill * weight))


# ---------------------------------------------------------------------------
# disjoint copies under product policies


def _component_moments(table: ScienceTable, pi: Policy, fm: FocalMapping, cap: int):
    if pi.n != table.n:
        raise ValueError(f"policy has {pi.n} units but table has {table.n}")
    n = table.n
    if n > cap:
        raise EnumerationTooLarge(n, cap)
    masks = np.arange(1 << n, dtype=np.int64)
    p = pi.pmf_masks(masks)
    z = ((masks[:, None] >> np.arange(n)) & 1).astype(bool)
    a = fm.indicator(z, table.graph)
    y = table.dense(cap).T
    count = a.sum(axis=1)
    total = np.where(a, y, 0.0).sum(axis=1)
    prob = np.bincount(count, weights=p, minlength=n + 1)
    mass = np.bincount(count, weights=p * total, minlength=n + 1)
    return prob, mass


def efao_copies(
    table: ScienceTable,
    pi: Policy,
    fm: FocalMapping,
    copies: int,
    cap: int = DEFAULT_CAP,
) -> EstimandResult:
    """Exact EFAO on ``copies`` disjoint copies of a component.

    ``table`` and ``pi`` describe one component; the union's outcomes depend
    only on each copy's own assignment and the union policy is the product of
    independent copies of ``pi``. The focal membership must be component-local.
    Per component, the law of (focal count, focal outcome sum) is enumerated
    once; copies combine by convolution over the focal count.
    """
    if copies < 1:
        raise ValueError(f"copies must be positive, got {copies}")
    prob_c, mass_c = _component_moments(table, pi, fm, cap)
    prob, mass = np.array([1.0]), np.array([0.0])
    for _ in range(copies):
        mass = np.convolve(mass, prob_c) + np.convolve(prob, mass_c)
        prob = np.convolve(prob, prob_c)
    t = np.arange(prob.size)
    event = prob[1:].sum()
    if event <= 0:
        raise ZeroProbabilityEvent(f"focal set {fm.label} nonempty")
    return EstimandResult(float((mass[1:] / t[1:]).sum() / event), EXACT, 0.0, float(event))


def efao_contrast_copies(table, pi, fm, fm2, copies, cap: int = DEFAULT_CAP) -> EstimandResult:
    a = efao_copies(table, pi, fm, copies, cap)
    b = efao_copies(table, pi, fm2, copies, cap)
    return EstimandResult(a.value - b.value, EXACT, 0.0, min(a.event_probability, b.event_probability))


# ---------------------------------------------------------------------------
# equivalence reports


@dataclass(frozen=True)
class RoutePair:
    left: str
    right: str
    left_value: float
    right_value: float

    @property
    def residual(self) -> float:
        return abs(self.left_value - self.right_value)


@dataclass(frozen=True)
class CopyPoint:
    copies: int
    contrast: float
    eate: float

    @property
    def residual(self) -> float:
        return abs(self.contrast - self.eate)


@dataclass
class EquivalenceReport:
    scenario: str
    pairs: list[RoutePair]
    copy_series: list[CopyPoint]
    verdict: str

    @property
    def max_residual(self) -> float:
        return max((p.residual for p in self.pairs), default=0.0)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "verdict": self.verdict,
            "max_residual": self.max_residual,
            "pairs": [
                {"left": p.left, "right": p.right, "left_value": p.left_value,
                 "right_value": p.right_value, "residual": p.residual}
                for p in self.pairs
            ],
            "copy_series": [
                {"copies": c.copies, "contrast": c.contrast, "eate": c.eate, "residual": c.residual}
                for c in self.copy_series
            ],
        }


def describe_policy(pi: Policy) -> str:
    if isinstance(pi, HomogeneousBernoulli):
        return f"homogeneous_bernoulli(p={pi.p})"
    if isinstance(pi, CompletelyRandomized):
        return f"completely_randomized(m={pi.m})"
    if isinstance(pi, AllOrNone):
        return f"all_or_none(q={pi.q})"
    if isinstance(pi, HeterogeneousBernoulli):
        return f"heterogeneous_bernoulli(p={list(pi.p)})"
    return pi.family


def equivalence_report(
    table: ScienceTable,
    g: Graph,
    pi: Policy,
    settings: Optional[EngineSettings] = None,
    copies: Sequence[int] = (1, 2, 4, 8),
    tol: float = EQUAL_TOL,
) -> EquivalenceReport:
    """Compare the treated-minus-untreated EFAO contrast with its assignments-first counterpart.

    Completely randomized: against the average direct effect. All-or-none:
    against GATE and the average direct effect. Bernoulli: against EATE; for
    homogeneous Bernoulli also over disjoint copies of ``g``. Verdict is
    ``equal`` if every residual is below ``tol``, ``asymptotic`` if the copy
    series strictly decreases, else ``not-equal``.
    """
    if g.n != table.n:
        raise ValueError(f"graph has {g.n} units but table has {table.n}")
    settings = replace_mode_exact(settings)
    contrast = efao_contrast(pi, table, TREATED, UNTREATED, settings).value
    name = "efao_contrast(treated,untreated)"
    pairs: list[RoutePair] = []
    series: list[CopyPoint] = []
    if isinstance(pi, AllOrNone):
        pairs.append(RoutePair(name, "gate", contrast, gate(table)))
        pairs.append(RoutePair(name, "avg_direct_effect", contrast, avg_direct_effect(pi, table, settings).value))
    elif isinstance(pi, (HomogeneousBernoulli, HeterogeneousBernoulli)):
        e = eate(table, pi, settings).value
        pairs.append(RoutePair(name, "eate", contrast, e))
        if isinstance(pi, HomogeneousBernoulli):
            for k in copies:
                c = efao_contrast_copies(table, pi, TREATED, UNTREATED, k, settings.cap).value
                series.append(CopyPoint(k, c, e))
    else:
        pairs.append(RoutePair(name, "avg_direct_effect", contrast, avg_direct_effect(pi, table, settings).value))

    if all(p.residual < tol for p in pairs) and all(c.residual < tol for c in series):
        verdict = "equal"
    elif len(series) > 1 and all(b.residual < a.residual for a, b in zip(series, series[1:])):
        verdict = "asymptotic"
    else:
        verdict = "not-equal"
    return EquivalenceReport(describe_policy(pi), pairs, series, verdict)


def replace_mode_exact(settings: Optional[EngineSettings]) -> EngineSettings:
    return replace(_settings(settings), mode=EXACT)


def select_policy(candidates: Sequence[tuple[float, float]], rel_tol: float = 1e-12) -> int:
    """Index of the best ``(parameter, value)``; near-ties go to the smaller parameter."""
    if not candidates:
        raise ValueError("no candidate policies")
    order = sorted(range(len(candidates)), key=lambda k: candidates[k][0])
    best = order[0]
    for k in order[1:]:
        v, top = candidates[k][1], candidates[best][1]
        if v > top + rel_tol * max(1.0, abs(top)):
            best = k
    return best
