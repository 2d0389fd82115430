"""Closed forms for disjoint unions of bicliques K_{u,v}.

Orientation: the ``u`` left units have degree ``v`` and outcomes
``y_left[d]``; the ``v`` right units have degree ``u`` and outcomes
``y_right[d]``. Exposure is the number of treated neighbors capped at ``u``.
Under homogeneous Bernoulli(p) a left unit is at level ``d`` with probability
``f_p(v, d)`` and a right unit with probability ``f_p(u, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exposure import NeighborCountCapped
from .graph import Graph, biclique
from .science import ExposureResponse

ROOT_TOL = 1e-10
BRACKETS = 200


def f_binom(k: int, d: int, p: float, capped: bool = False) -> float:
    """``C(k,d) p^d (1-p)^(k-d)``; with ``capped`` the upper tail ``P(X >= d)``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not 0 <= d <= k:
        raise ValueError(f"level {d} out of range 0..{k}")
    if capped:
        return sum(math.comb(k, j) * p**j * (1.0 - p) ** (k - j) for j in range(d, k + 1))
    return math.comb(k, d) * p**d * (1.0 - p) ** (k - d)


def capped_pmf(k: int, top: int, p) -> np.ndarray:
    """Law of ``min(Binomial(k, p), top)``; ``p`` may be an array (levels on the last axis)."""
    p = np.asarray(p, dtype=np.float64)[..., None]
    j = np.arange(k + 1)
    coef = np.array([math.comb(k, x) for x in j], dtype=np.float64)
    pmf = coef * p**j * (1.0 - p) ** (k - j)
    out = pmf[..., : top + 1].copy()
    out[..., top] = pmf[..., top:].sum(axis=-1)
    return out


def exposure_prob(k: int, d: int, top: int, p: float) -> float:
    """Probability a unit with ``k`` neighbors sits at capped level ``d``."""
    return f_binom(k, d, p, capped=(d == top))


@dataclass(frozen=True)
class BicliqueSpec:
    u: int
    v: int
    y_left: tuple[float, ...]
    y_right: tuple[float, ...]

    def __post_init__(self):
        if self.u < 1 or self.v < 1:
            raise ValueError("biclique sides must be positive")
        if self.u > self.v:
            raise ValueError(f"expected u <= v, got u={self.u}, v={self.v}; swap the halves")
        object.__setattr__(self, "y_left", tuple(float(x) for x in self.y_left))
        object.__setattr__(self, "y_right", tuple(float(x) for x in self.y_right))
        for name, ys in (("y_left", self.y_left), ("y_right", self.y_right)):
            if len(ys) != self.cap + 1:
                raise ValueError(f"{name} needs {self.cap + 1} outcomes (levels 0..{self.cap}), got {len(ys)}")

    @property
    def cap(self) -> int:
        return self.u

    def _check_level(self, d: int) -> None:
        if not 0 <= d <= self.cap:
            raise ValueError(f"level {d} out of range 0..{self.cap}")

    def left_prob(self, d: int, p: float) -> float:
        return exposure_prob(self.v, d, self.cap, p)

    def right_prob(self, d: int, p: float) -> float:
        return exposure_prob(self.u, d, self.cap, p)

    def graph(self) -> Graph:
        return biclique(self.u, self.v)

    def exposure_map(self) -> NeighborCountCapped:
        return NeighborCountCapped(self.cap)

    def outcome_model(self) -> ExposureResponse:
        """Exposure-respecting model on :meth:`graph` with these outcomes."""
        rows = [self.y_left] * self.u + [self.y_right] * self.v
        return ExposureResponse(self.exposure_map(), tuple(rows))

    def swapped(self) -> "BicliqueSpec":
        """Same biclique with the two halves' outcomes exchanged."""
        return BicliqueSpec(self.u, self.v, self.y_right, self.y_left)


def avg_po_closed_form(spec: BicliqueSpec, d: int) -> float:
    """``(u y_left[d] + v y_right[d]) / (u + v)``."""
    spec._check_level(d)
    return (spec.u * spec.y_left[d] + spec.v * spec.y_right[d]) / (spec.u + spec.v)


def efao_by_exposure_closed_form(spec: BicliqueSpec, d: int, p: float) -> float:
    """Large-union limit of the EFAO over units at exposure ``d`` under Bernoulli(p)."""
    spec._check_level(d)
    wl = spec.u * spec.left_prob(d, p)
    wr = spec.v * spec.right_prob(d, p)
    if wl + wr <= 0.0:
        raise ZeroDivisionError(f"level {d} is unreachable at p={p}")
    return (wl * spec.y_left[d] + wr * spec.y_right[d]) / (wl + wr)


def difference_sign(spec: BicliqueSpec, d: int, p: float) -> int:
    """``sgn[(y_right[d] - y_left[d]) (f_p(u,d) - f_p(v,d))]``."""
    spec._check_level(d)
    return int(np.sign((spec.y_right[d] - spec.y_left[d]) * (spec.right_prob(d, p) - spec.left_prob(d, p))))


# ---------------------------------------------------------------------------
# exposure-matching curves under degree-class Bernoulli policies


@dataclass(frozen=True)
class CurvePoint:
    level: int
    p_low: float  # treatment probability of the degree-u (right) class
    p_high: float  # treatment probability of the degree-v (left) class
    branch: int
    residual: float


@dataclass
class MatchingCurve:
    level: int
    solve_for: str
    points: list[CurvePoint]
    omitted: list[float]


def level_gap(u: int, v: int, d: int, p_low, p_high):
    """``P(left unit at d) - P(right unit at d)``.

    Left units (degree ``v``) see right-class treatments at rate ``p_low``;
    right units (degree ``u``) see left-class treatments at rate ``p_high``.
    """
    left = capped_pmf(v, u, p_low)[..., d]
    right = capped_pmf(u, u, p_high)[..., d]
    return left - right


def bisect(fn, lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    flo = fn(lo)
    if flo == 0.0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_roots(fn, brackets: int = BRACKETS, tol: float = ROOT_TOL) -> list[float]:
    """All sign-change roots of ``fn`` on [0, 1] plus exact zeros at bracket nodes.

    ``fn`` must accept a float and, for speed, may also accept an array.
    """
    xs = np.linspace(0.0, 1.0, brackets + 1)
    try:
        fs = np.broadcast_to(np.asarray(fn(xs), dtype=np.float64), xs.shape).tolist()
    except TypeError:
        fs = [float(fn(float(x))) for x in xs]
    roots: list[float] = []
    for k in range(brackets):
        a, b, fa, fb = float(xs[k]), float(xs[k + 1]), fs[k], fs[k + 1]
        if fa == 0.0:
            roots.append(a)
        elif fb != 0.0 and (fa < 0) != (fb < 0):
            roots.append(bisect(fn, a, b, tol))
    if fs[-1] == 0.0:
        roots.append(1.0)
    out: list[float] = []
    for r in sorted(roots):
        if not out or r - out[-1] > 1e3 * tol:
            out.append(r)
    return out


def _grid(step: float, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    count = int(round((hi - lo) / step))
    return lo + step * np.arange(count + 1)


def exposure_matching_curve(u: int, v: int, d: int, grid: float = 0.01, solve_for: str = "high") -> MatchingCurve:
    """Degree-class probabilities that equalize the chance of exposure level ``d``.

    With ``solve_for="high"`` the grid runs over the degree-``u`` class
    probability and every matching degree-``v`` class probability is solved
    for; ``"low"`` swaps the roles. Level 0 uses the closed form
    ``(1 - a)^v = (1 - b)^u``; other levels use bracketed bisection. Grid
    points without a root in [0, 1] are listed in ``omitted``.
    """
    if u > v:
        raise ValueError(f"expected u <= v, got u={u}, v={v}")
    if not 0 <= d <= u:
        raise ValueError(f"level {d} out of range 0..{u}")
    if solve_for not in ("high", "low"):
        raise ValueError("solve_for must be 'high' or 'low'")
    points, omitted = [], []
    for x in _grid(grid):
        x = float(x)
        if solve_for == "high":
            gap = lambda y: level_gap(u, v, d, x, y)
            if d == 0:
                roots = [1.0 - (1.0 - x) ** (v / u)]
            else:
                roots = find_roots(lambda y: -gap(y))
        else:
            gap = lambda y: level_gap(u, v, d, y, x)
            if d == 0:
                roots = [1.0 - (1.0 - x) ** (u / v)]
            else:
                roots = find_roots(gap)
        if not roots:
            omitted.append(x)
        for b, r in enumerate(roots):
            res = abs(float(gap(r)))
            if solve_for == "high":
                points.append(CurvePoint(d, x, r, b, res))
            else:
                points.append(CurvePoint(d, r, x, b, res))
    return MatchingCurve(d, solve_for, points, omitted)


@dataclass(frozen=True)
class JointResidual:
    min_residual: float
    p_low: float
    p_high: float


def joint_matching_residual(u: int, v: int, grid: float = 0.005, margin: float = 0.05) -> JointResidual:
    """Smallest, over a grid on ``[margin, 1-margin]^2``, of the largest level gap.

    A strictly positive value means no interior degree-class Bernoulli policy
    on the grid equalizes every exposure level at once. Ties go to the
    lexicographically smallest ``(p_low, p_high)``.
    """
    if not 0.0 < margin < 0.5:
        raise ValueError(f"margin must lie in (0, 0.5), got {margin}")
    if u > v:
        raise ValueError(f"expected u <= v, got u={u}, v={v}")
    axis = _grid(grid, margin, 1.0 - margin)
    left = capped_pmf(v, u, axis)  # (A, levels), indexed by p_low
    right = capped_pmf(u, u, axis)  # (B, levels), indexed by p_high
    worst = np.abs(left[:, None, :] - right[None, :, :]).max(axis=-1)
    k = int(np.argmin(worst))
    a, b = divmod(k, axis.size)
    return JointResidual(float(worst[a, b]), float(axis[a]), float(axis[b]))


def closed_form_table(
    spec: BicliqueSpec,
    ps: Sequence[float],
    copies: Sequence[int],
    cap: int = 20,
) -> list[dict]:
    """Exact EFAO by exposure on disjoint copies vs. the closed-form limit."""
    from .estimands import by_exposure, efao_copies
    from .policy import HomogeneousBernoulli
    from .science import tabulate

    g = spec.graph()
    table = tabulate(spec.outcome_model(), g, cap)
    emap = spec.exposure_map()
    rows = []
    for p in ps:
        pi = HomogeneousBernoulli(g.n, p)
        for d in range(spec.cap + 1):
            limit = efao_by_exposure_closed_form(spec, d, p)
            avg = avg_po_closed_form(spec, d)
            sign = difference_sign(spec, d, p)
            for k in copies:
                exact = efao_copies(table, pi, by_exposure(emap, d), k, cap).value
                rows.append({
                    "p": float(p), "level": d, "copies": k,
                    "exact_efao": exact, "closed_form": limit,
                    "abs_gap": abs(exact - limit), "avg_po": avg,
                    "limit_minus_avg": limit - avg, "sign_formula": sign,
                })
    return rows
