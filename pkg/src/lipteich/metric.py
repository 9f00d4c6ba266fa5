"""The asymmetric Lipschitz metric via truncated curve suprema.

d(X, Y) is the log of the supremum over essential simple closed curves of
the length ratio length_Y / length_X.  Every curve's ratio is dominated by
the optimal Lipschitz constant, so a maximum over any finite curve set is
a certified lower bound; the reports therefore carry a convergence trace
in the budget rather than any unproven upper bound.

Measured laminations on the torus are a single slope (rational or not)
with a positive weight; irrational slopes are normalised so that the
intersection with a curve p/q is weight * |p - slope * q|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .curves import BASIS, MCGMatrix, Slope, apply_class, classify_matrix
from .errors import ConvergenceError, InputError, PreconditionError
from .torus_teich import MarkovPoint, _log_length_table, _program, act_on_point, length_of_slope

__all__ = [
    "TorusLamination",
    "DLReport",
    "SandwichReport",
    "dl_estimate",
    "lamination_intersection",
    "lamination_length",
    "ratio_for_lamination",
    "sandwich_check",
]


@dataclass(frozen=True)
class TorusLamination:
    """A measured lamination: a slope with a positive weight.

    A Slope-valued slope means weight copies of that curve, so the length
    is weight * curve length.  A float slope sigma is the lamination of
    irrational direction (sigma, 1): intersection with p/q is
    weight * |p - sigma q| and the length is the convergent limit
    weight * lim length(p_k/q_k) / q_k.  A float that happens to be
    rational is still read in the (sigma, 1) normalisation, which differs
    from the curve normalisation by the denominator.
    """

    slope: Union[Slope, float]
    weight: float = 1.0

    def __post_init__(self):
        if self.weight <= 0 or not math.isfinite(self.weight):
            raise InputError(f"lamination weight must be positive, got {self.weight}")
        if isinstance(self.slope, float) and math.isinf(self.slope):
            # the vertical direction is the curve 1/0
            object.__setattr__(self, "slope", Slope(1, 0))
        if not isinstance(self.slope, (Slope, float, int)):
            raise InputError(f"lamination slope must be a Slope or a real, got {self.slope!r}")

    @property
    def is_curve(self) -> bool:
        return isinstance(self.slope, Slope)


@dataclass(frozen=True)
class DLReport:
    """Certified lower bound for d(X, Y) from a finite curve budget."""

    value: float
    argmax_slope: Slope
    budget_used: int
    convergence: tuple  # ((budget, value), ...) non-decreasing in budget

    def to_dict(self):
        return {
            "value": self.value,
            "argmax_slope": str(self.argmax_slope),
            "budget_used": self.budget_used,
            "convergence": [[int(b), float(v)] for b, v in self.convergence],
        }


@dataclass(frozen=True)
class SandwichReport:
    """Comparison of orbit lengths with scaled lamination intersections."""

    fitted_c: float
    residuals: tuple  # ((m, slope, residual), ...)
    max_m: int
    weight: float

    @property
    def min_residual(self) -> float:
        return min(r for _, _, r in self.residuals)

    def to_dict(self):
        return {
            "fitted_c": self.fitted_c,
            "weight": self.weight,
            "max_m": self.max_m,
            "residuals": [[int(m), str(s), float(r)] for m, s, r in self.residuals],
        }


def _budget_ladder(q_max: int) -> list[int]:
    ladder = []
    b = 1
    while b < q_max:
        ladder.append(b)
        b *= 2
    ladder.append(q_max)
    return ladder


def dl_estimate(x_point: MarkovPoint, y_point: MarkovPoint, q_max: int) -> DLReport:
    """Max over all slopes with max(|p|, |q|) <= q_max of log(len_Y / len_X).

    Deterministic: exact ties in the maximum are broken by canonical slope
    order, never by evaluation order, so parallel and serial runs agree.
    """
    if q_max < 1:
        raise InputError("slope budget must be at least 1")
    prog = _program(q_max)
    vals = _log_length_table(y_point, q_max) - _log_length_table(x_point, q_max)
    value = float(vals.max())
    tied = np.flatnonzero(vals == value)
    argmax = prog.slopes[int(tied[np.argmin(prog.canon_rank[tied])])]
    # running maximum in the documented budget order
    ordered = vals[prog.order_by_max_pq]
    running = np.maximum.accumulate(ordered)
    sorted_budgets = prog.max_pq[prog.order_by_max_pq]
    convergence = []
    for b in _budget_ladder(q_max):
        idx = int(np.searchsorted(sorted_budgets, b, side="right")) - 1
        convergence.append((b, float(running[idx])))
    return DLReport(value=value, argmax_slope=argmax, budget_used=q_max, convergence=tuple(convergence))


def _dl_over_slopes(x_point: MarkovPoint, y_point: MarkovPoint, slopes: Sequence[Slope]) -> float:
    """Max log-ratio over an explicit curve set (used for matched-set checks)."""
    best = -math.inf
    for s in slopes:
        val = math.log(length_of_slope(y_point, s)) - math.log(length_of_slope(x_point, s))
        if val > best:
            best = val
    return best


def lamination_intersection(lam: TorusLamination, s: Slope) -> float:
    """Intersection pairing of a lamination with a curve class."""
    if lam.is_curve:
        return lam.weight * abs(lam.slope.p * s.q - s.p * lam.slope.q)
    return lam.weight * abs(s.p - float(lam.slope) * s.q)


def _convergents(value: float):
    """Continued-fraction convergents p_k / q_k of a real number.

    Terminates only when the expansion is exact (the value is rational in
    double precision); callers impose their own iteration caps.
    """
    p_prev, q_prev = 1, 0
    p_cur, q_cur = math.floor(value), 1
    rest = value - math.floor(value)
    yield p_cur, q_cur
    while rest > 1e-18:
        rest = 1.0 / rest
        a = math.floor(rest)
        rest -= a
        p_cur, p_prev = a * p_cur + p_prev, p_cur
        q_cur, q_prev = a * q_cur + q_prev, q_cur
        yield p_cur, q_cur


_LAMINATION_ITERATION_CAP = 64


def lamination_length(point: MarkovPoint, lam: TorusLamination, tol: float = 1e-9) -> float:
    """Length of a measured lamination.

    Rational (curve) laminations are exact: weight times the curve length.
    Irrational slopes are the limit of weight * length(p_k/q_k) / q_k over
    continued-fraction convergents, iterated until the relative change of
    successive values stays below tol for two steps in a row (one step can
    stall by accident, e.g. when two early convergents have equal length).
    A float whose expansion terminates is an exact direction and returns
    its final convergent value.
    """
    if tol <= 0:
        raise InputError("tolerance must be positive")
    if lam.is_curve:
        return lam.weight * length_of_slope(point, lam.slope)
    sigma = float(lam.slope)
    prev = None
    cur = None
    stable = 0
    for step, (p, q) in enumerate(_convergents(sigma)):
        if q == 0:
            continue
        if step > _LAMINATION_ITERATION_CAP:
            raise ConvergenceError(
                f"lamination length did not stabilise to tol={tol} within "
                f"{_LAMINATION_ITERATION_CAP} convergents; tolerance too tight"
            )
        cur = lam.weight * length_of_slope(point, Slope(p, q)) / q
        if prev is not None and abs(cur - prev) <= tol * abs(cur):
            stable += 1
            if stable >= 2:
                return cur
        else:
            stable = 0
        prev = cur
    # the expansion terminated: sigma is an exact rational direction
    return cur


def ratio_for_lamination(
    x_point: MarkovPoint, y_point: MarkovPoint, lam: TorusLamination, tol: float = 1e-9
) -> float:
    """log(len_Y(lam) / len_X(lam)); always a lower bound for d(X, Y)."""
    len_x = lamination_length(x_point, lam, tol)
    len_y = lamination_length(y_point, lam, tol)
    if not (len_x > 0 and math.isfinite(len_x) and len_y > 0 and math.isfinite(len_y)):
        raise PreconditionError("degenerate lamination length")
    return math.log(len_y / len_x)


def sandwich_check(
    x_point: MarkovPoint,
    m: MCGMatrix,
    alphas: Optional[Sequence[Slope]] = None,
    m_max: int = 8,
) -> SandwichReport:
    """Compare orbit lengths with scaled intersections of the expanding lamination.

    For an Anosov class with dilatation K and unstable (measure-expanding)
    slope sigma, the intersection of the m-th image of the unstable
    lamination with a curve alpha is w * K^m * |p - sigma q|.  The single
    weight w is fitted to the sampled lengths by least squares constrained
    by the pointwise lower bound (intersection <= length), so residuals
    length - intersection are nonnegative by construction; fitted_c is
    their maximum.
    """
    if m_max < 2:
        raise InputError("m_max must be at least 2")
    nt = classify_matrix(m)
    if nt.tag != "Anosov":
        raise PreconditionError(f"sandwich check requires an Anosov class, got {nt.tag}")
    if alphas is None:
        alphas = BASIS
    sigma = nt.unstable_slope
    dilatation = nt.dilatation
    lengths = []
    gains = []
    labels = []
    # Orbit lengths are evaluated by pulling curves back through integer
    # matrix powers: length at the m-th image point of alpha equals the
    # length at the base point of m_inv^m(alpha).  This stays exact for
    # arbitrarily deep iterates, where the image points themselves would
    # overflow double-precision traces.
    pullback = MCGMatrix.identity()
    m_inv = m.inverse()
    for step in range(m_max + 1):
        scale = dilatation**step
        for alpha in alphas:
            lengths.append(length_of_slope(x_point, apply_class(pullback, alpha)))
            gains.append(scale * abs(alpha.p - sigma * alpha.q))
            labels.append((step, alpha))
        pullback = m_inv @ pullback
    lengths_arr = np.asarray(lengths)
    gains_arr = np.asarray(gains)
    w_ls = float(lengths_arr @ gains_arr / (gains_arr @ gains_arr))
    weight = min(w_ls, float(np.min(lengths_arr / gains_arr)))
    residuals_arr = lengths_arr - weight * gains_arr
    residuals = tuple(
        (step, alpha, float(r)) for (step, alpha), r in zip(labels, residuals_arr)
    )
    return SandwichReport(
        fitted_c=float(residuals_arr.max()),
        residuals=residuals,
        max_m=m_max,
        weight=weight,
    )
