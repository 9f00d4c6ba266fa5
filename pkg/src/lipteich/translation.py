"""Translation distance of a mapping class and its four-type behaviour.

The displacement of a class at a point is the certified metric lower
bound between the point and its image; the translation distance is the
infimum of displacement over the whole space, approached here by
multistart derivative-free simplex search on the two-parameter chart
(the displacement is a max-type objective, so gradient methods are out).

A class is elliptic / parabolic / hyperbolic according to whether the
infimum is zero and attained, zero and not attained, or positive and
attained; the pseudo-hyperbolic type (positive, not attained) cannot
occur on this surface but stays in the report vocabulary for the
exploratory holonomy mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize as _scipy_minimize

from .curves import MCGMatrix, Slope, classify_matrix
from .errors import ChartDomainError, InputError, PreconditionError
from .metric import dl_estimate
from .torus_teich import (
    AnalysisConfig,
    MarkovPoint,
    _log_length_table,
    _program,
    act_on_point,
    length_from_trace,
    point_from_chart,
    systole,
)

__all__ = [
    "TDistReport",
    "PinchReport",
    "ActionTypeReport",
    "MinimizeOptions",
    "displacement",
    "minimize_displacement",
    "pinch_scan",
    "orbit_audit",
    "classify_action",
    "systole_inequality_check",
]

_INVALID_PENALTY = 1e6  # finite so the simplex can recover from bad vertices


@dataclass(frozen=True)
class MinimizeOptions:
    """Knobs for the translation-distance search.

    budget is the slope budget of the reported displacement; the search
    itself runs on search_budget (the objective landscape barely moves
    with the budget, only the certified value does) and polishes on
    polish_budget before the final full-budget evaluation.
    """

    budget: int = 200
    restarts: int = 8
    seed: int = 0
    tolerance: float = 1e-4
    search_budget: Optional[int] = None
    polish_budget: Optional[int] = None
    max_iter: int = 400

    def resolved_search_budget(self) -> int:
        return self.search_budget if self.search_budget is not None else min(64, self.budget)

    def resolved_polish_budget(self) -> int:
        return self.polish_budget if self.polish_budget is not None else min(200, self.budget)

    def to_dict(self):
        return {
            "budget": self.budget,
            "restarts": self.restarts,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "search_budget": self.resolved_search_budget(),
            "polish_budget": self.resolved_polish_budget(),
            "max_iter": self.max_iter,
        }


@dataclass(frozen=True)
class TDistReport:
    a_est: float
    argmin_point: MarkovPoint
    restarts: int
    evaluations: int
    converged: bool
    seed: int
    budget: int
    restart_values: tuple = ()

    def to_dict(self):
        return {
            "a_est": self.a_est,
            "argmin_point": self.argmin_point.to_dict(),
            "restarts": self.restarts,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "seed": self.seed,
            "budget": self.budget,
            "restart_values": [[float(u), float(v), float(val)] for u, v, val in self.restart_values],
        }


@dataclass(frozen=True)
class PinchReport:
    """Displacement along a family pinching the invariant curve."""

    samples: tuple  # ((epsilon, displacement, systole), ...)
    limit_estimate: float

    def to_dict(self):
        return {
            "samples": [[float(e), float(d), float(s)] for e, d, s in self.samples],
            "limit_estimate": self.limit_estimate,
        }


@dataclass(frozen=True)
class ActionTypeReport:
    type: str  # Elliptic | Parabolic | Hyperbolic | PseudoHyperbolic
    evidence: dict = field(default_factory=dict)

    def to_dict(self):
        return {"type": self.type, "evidence": self.evidence}


def displacement(point: MarkovPoint, m: MCGMatrix, q_max: int) -> float:
    """Certified lower bound for the distance from a point to its image."""
    return dl_estimate(point, act_on_point(m, point), q_max).value


def _objective(m: MCGMatrix, q_max: int):
    evals = [0]

    def f(uv):
        evals[0] += 1
        best = _INVALID_PENALTY
        for branch in ("plus", "minus"):
            try:
                point = point_from_chart(uv[0], uv[1], branch)
            except ChartDomainError:
                continue
            best = min(best, displacement(point, m, q_max))
        return best

    return f, evals


def _best_branch_point(u: float, v: float, m: MCGMatrix, q_max: int) -> MarkovPoint:
    best = None
    best_val = math.inf
    for branch in ("plus", "minus"):
        try:
            point = point_from_chart(u, v, branch)
        except ChartDomainError:
            continue
        val = displacement(point, m, q_max)
        if val < best_val:
            best, best_val = point, val
    if best is None:
        raise ChartDomainError(f"chart point ({u}, {v}) invalid on both branches")
    return best


_START_GRID = (
    (0.0, 0.0),
    (1.2, 0.0),
    (0.0, 1.2),
    (1.2, 1.2),
    (-0.6, 0.6),
    (0.6, -0.6),
    (2.0, 0.8),
    (0.8, 2.0),
)


def minimize_displacement(m: MCGMatrix, opts: Optional[MinimizeOptions] = None) -> TDistReport:
    """Estimate the translation distance by multistart simplex search.

    Both chart branches are evaluated at every simplex vertex so the
    search covers the whole space without tracking a fundamental domain.
    Restarts are independent and the winner is chosen by value, ties by
    chart coordinates, so the result is deterministic for a given seed.
    The reported estimate is the displacement of the argmin at the full
    budget; converged means the polish simplex shrank below tolerance.
    """
    opts = opts or MinimizeOptions()
    rng = np.random.default_rng(opts.seed)
    starts = []
    for k in range(opts.restarts):
        base = _START_GRID[k % len(_START_GRID)]
        jitter = rng.uniform(-0.25, 0.25, size=2)
        starts.append((base[0] + jitter[0], base[1] + jitter[1]))

    f_search, search_evals = _objective(m, opts.resolved_search_budget())
    results = []
    for start in starts:
        res = _scipy_minimize(
            f_search,
            np.asarray(start),
            method="Nelder-Mead",
            options={"xatol": 1e-4, "fatol": 1e-12, "maxiter": opts.max_iter},
        )
        results.append((float(res.fun), float(res.x[0]), float(res.x[1])))
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    best_val, best_u, best_v = results[0]

    # polish near the incumbent; cheap budgets suffice when the value is
    # already tiny (an attained zero is zero at every budget)
    polish_budget = opts.resolved_search_budget() if best_val < 1e-4 else opts.resolved_polish_budget()
    f_polish, polish_evals = _objective(m, polish_budget)
    res = _scipy_minimize(
        f_polish,
        np.asarray([best_u, best_v]),
        method="Nelder-Mead",
        options={"xatol": opts.tolerance * 1e-2 if best_val < 1e-4 else opts.tolerance,
                 "fatol": 1e-14,
                 "maxiter": opts.max_iter},
    )
    simplex = res.final_simplex[0]
    diameter = float(np.max(np.abs(simplex - simplex[0])))
    converged = bool(diameter < opts.tolerance)
    argmin = _best_branch_point(float(res.x[0]), float(res.x[1]), m, polish_budget)
    a_est = displacement(argmin, m, opts.budget)
    return TDistReport(
        a_est=a_est,
        argmin_point=argmin,
        restarts=opts.restarts,
        evaluations=search_evals[0] + polish_evals[0],
        converged=converged,
        seed=opts.seed,
        budget=opts.budget,
        restart_values=tuple((u, v, val) for val, u, v in results),
    )


def _conjugator_to_vertical(slope: Slope) -> MCGMatrix:
    """A mapping class sending the given slope to 1/0."""
    p, q = slope.p, slope.q
    g, a, b = _xgcd(p, q)
    assert g == 1
    return MCGMatrix(a, b, -q, p)


def _xgcd(a: int, b: int):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        quot = old_r // r
        old_r, r = r, old_r - quot * r
        old_s, s = s, old_s - quot * s
        old_t, t = t, old_t - quot * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


DEFAULT_PINCH_GRID = (1e-1, 1e-2, 1e-3, 1e-4)


def pinch_scan(
    m: MCGMatrix,
    eps_grid: Sequence[float] = DEFAULT_PINCH_GRID,
    q_max: int = 200,
) -> PinchReport:
    """Displacement along the family pinching the invariant curve.

    The class is conjugated so its invariant slope becomes 1/0 and the
    displacement is evaluated (in the conjugated frame, an isometry) on
    the symmetric family (y/sqrt(y-2), y, y/sqrt(y-2)) with y = 2 + eps.
    The limit estimate extrapolates the last three samples by a
    geometric-decay fit.
    """
    grid = [float(e) for e in eps_grid]
    if len(grid) < 3:
        raise InputError("pinch grid needs at least three epsilons")
    if any(e <= 0 for e in grid) or any(a <= b for a, b in zip(grid, grid[1:])):
        raise InputError("pinch grid must be strictly decreasing and positive")
    nt = classify_matrix(m)
    if nt.tag != "Reducible":
        raise PreconditionError(f"pinch scan requires a reducible class, got {nt.tag}")
    conj = _conjugator_to_vertical(nt.invariant_slope)
    m_vert = conj @ m @ conj.inverse()
    samples = []
    for eps in grid:
        y = 2.0 + eps
        x = y / math.sqrt(eps)
        point = MarkovPoint(x, y, x)
        samples.append((eps, displacement(point, m_vert, q_max), length_from_trace(y)))
    d1, d2, d3 = (s[1] for s in samples[-3:])
    denom = (d3 - d2) - (d2 - d1)
    if denom != 0.0 and abs((d3 - d2) / (d2 - d1 if d2 != d1 else 1.0)) < 1.0:
        limit = d3 - (d3 - d2) ** 2 / denom  # Aitken extrapolation
    else:
        limit = d3
    return PinchReport(samples=tuple(samples), limit_estimate=float(limit))


def orbit_audit(m: MCGMatrix, point: MarkovPoint, k_max: int, q_max: int):
    """Additivity defects along an orbit.

    For -k_max <= i <= j <= k_max the defect is
    (j - i) * displacement(point) - d(image_i, image_j), which vanishes on
    an invariant geodesic through the point.  Distances between images are
    evaluated by rebasing the curve tables at the input point, which keeps
    the arithmetic well conditioned however distorted the images are.
    """
    if k_max < 1:
        raise InputError("k_max must be at least 1")
    step = displacement(point, m, q_max)
    m_inv = m.inverse()
    tables = {}
    for k in range(-k_max, k_max + 1):
        tables[k] = _log_length_table(point, q_max, m_inv.power(k))
    defects = []
    for i in range(-k_max, k_max + 1):
        for j in range(i, k_max + 1):
            if i == j:
                defects.append((i, j, 0.0))
                continue
            dist = float(np.max(tables[j] - tables[i]))
            defects.append((i, j, (j - i) * step - dist))
    return defects


def classify_action(m: MCGMatrix, opts: Optional[MinimizeOptions] = None) -> ActionTypeReport:
    """Four-type classification with numeric evidence.

    Periodic classes are elliptic: the minimizer exhibits a fixed point.
    Reducible classes are parabolic: the pinch scan exhibits positive
    displacement tending to zero.  Anosov classes are hyperbolic: the
    minimizer attains a positive value and the orbit audit supports
    additivity along an invariant geodesic.
    """
    opts = opts or MinimizeOptions()
    nt = classify_matrix(m)
    if nt.tag == "Periodic":
        report = minimize_displacement(m, opts)
        return ActionTypeReport(
            type="Elliptic",
            evidence={
                "fixed_point": report.argmin_point.to_dict(),
                "displacement": report.a_est,
                "tdist": report.to_dict(),
            },
        )
    if nt.tag == "Reducible":
        pinch = pinch_scan(m, q_max=min(opts.budget, 200))
        return ActionTypeReport(
            type="Parabolic",
            evidence={
                "invariant_slope": str(nt.invariant_slope),
                "pinch": pinch.to_dict(),
            },
        )
    report = minimize_displacement(m, opts)
    audit = orbit_audit(m, report.argmin_point, k_max=2, q_max=opts.budget)
    max_defect = max(abs(d) for _, _, d in audit)
    return ActionTypeReport(
        type="Hyperbolic",
        evidence={
            "tdist": report.to_dict(),
            "dilatation": nt.dilatation,
            "orbit_audit": {"k_max": 2, "max_abs_defect": max_defect},
        },
    )


def systole_inequality_check(
    point: MarkovPoint, m: MCGMatrix, cfg: Optional[AnalysisConfig] = None
) -> bool:
    """Check exp(displacement) >= delta0 / systole for an irreducible class.

    A truncation slack factor (1 + cfg.tolerance) keeps the boundary case
    (systole exactly delta0 at a fixed point) on the true side.
    """
    cfg = cfg or AnalysisConfig()
    nt = classify_matrix(m)
    if nt.tag == "Reducible":
        raise PreconditionError("the systole inequality requires an irreducible class")
    _, sys_len = systole(point, cfg)
    lipschitz = math.exp(displacement(point, m, cfg.slope_budget))
    return lipschitz * (1.0 + cfg.tolerance) >= cfg.delta0 / sys_len
