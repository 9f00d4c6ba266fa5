"""Teichmüller space of the once-punctured torus in Fricke trace coordinates.

A marked cusped hyperbolic torus is recorded by the traces (x, y, z) of
the curves of slopes 0/1, 1/0 and 1/1.  Valid triples have all entries
greater than 2 and satisfy the Fricke relation x^2 + y^2 + z^2 = x y z.
That this locus is exactly the space of marked structures is classical
and assumed here; no discreteness test is run.

Traces of all other slopes follow from the Farey exchange identity: two
triangles of the Farey tessellation sharing the edge {u, v} have third
vertices whose traces t, t' satisfy t + t' = t(u) t(v).  Starting from the
base triangle {0/1, 1/0, 1/1} every slope is reached by a finite descent.
All trace arithmetic is carried in log space: deeply wound curves have
traces far beyond double range while their lengths stay modest.

Hyperbolic length and trace are related by length = 2 arccosh(trace / 2).

Everything here is immutable after construction and all operations are
pure, so unrestricted parallel use is safe; the per-point memo table
only ever inserts values that recomputation would reproduce exactly.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .curves import BASIS, MCGMatrix, Slope, apply_class, enumerate_slopes
from .errors import ChartDomainError, ConvergenceError, InputError, PreconditionError

__all__ = [
    "MarkovPoint",
    "TraceCache",
    "AnalysisConfig",
    "trace_of_slope",
    "log_trace_of_slope",
    "length_of_slope",
    "length_from_trace",
    "act_on_point",
    "systole",
    "point_from_chart",
]

_LOG2 = math.log(2.0)

# Collar constant: two distinct closed geodesics both shorter than this are
# disjoint, hence equal on the punctured torus where distinct slopes cross.
# It is the length L solving sinh(w) sinh(L/2) = 1 with collar half-width
# w = L/2, i.e. L = 2 arcsinh(1).
DEFAULT_COLLAR_CONSTANT = 2.0 * math.asinh(1.0)


@dataclass(frozen=True)
class MarkovPoint:
    """Trace triple (x, y, z) of the slopes 0/1, 1/0, 1/1."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for name, value in (("x", self.x), ("y", self.y), ("z", self.z)):
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise InputError(f"trace {name} must be a finite number, got {value!r}")
            if value <= 2.0:
                raise InputError(f"trace {name} = {value} must exceed 2")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "z", float(self.z))
        if self.relation_residual() > 1e-9:
            raise InputError(
                f"triple ({self.x}, {self.y}, {self.z}) violates the Fricke "
                f"relation x^2+y^2+z^2 = xyz (relative residual "
                f"{self.relation_residual():.3e})"
            )

    def relation_residual(self) -> float:
        """|x^2+y^2+z^2 - xyz| / xyz, computed without overflow."""
        # divide the relation through by xyz before summing
        s = self.x / self.y / self.z + self.y / self.x / self.z + self.z / self.x / self.y
        return abs(s - 1.0)

    def to_dict(self):
        return {"x": self.x, "y": self.y, "z": self.z}

    @classmethod
    def from_dict(cls, data) -> "MarkovPoint":
        try:
            return cls(float(data["x"]), float(data["y"]), float(data["z"]))
        except (KeyError, TypeError) as exc:
            raise InputError(f"point must be a JSON object with keys x, y, z: {data!r}") from exc


@dataclass(frozen=True)
class AnalysisConfig:
    """Tunable constants shared by the metric and translation routines."""

    delta0: float = DEFAULT_COLLAR_CONSTANT
    slope_budget: int = 200
    tolerance: float = 1e-6
    thin_epsilon: float = 0.03

    def __post_init__(self):
        if self.delta0 <= 0:
            raise InputError("delta0 must be positive")
        if self.slope_budget < 1:
            raise InputError("slope budget must be at least 1")
        if self.tolerance <= 0:
            raise InputError("tolerance must be positive")

    def to_dict(self):
        return {
            "delta0": self.delta0,
            "slope_budget": self.slope_budget,
            "tolerance": self.tolerance,
            "thin_epsilon": self.thin_epsilon,
        }


def _flip_log(u_a: float, u_b: float, u_c: float) -> float:
    """log(exp(u_a) exp(u_b) - exp(u_c)), the Farey exchange in log space.

    Valid on the trace locus, where the exchanged trace is always positive.
    The difference loses all precision when the new trace is smaller than
    the product by more than the float resolution of the logs; that only
    happens at extremely distorted points, and is reported rather than
    silently absorbed.
    """
    d = u_c - u_a - u_b
    if d >= -4e-16:
        raise ConvergenceError(
            "Farey trace recursion lost all precision: the exchanged trace "
            "is too small relative to its triangle (extremely distorted "
            "point); evaluate at a thicker point via relabeling instead"
        )
    return u_a + u_b + math.log1p(-math.exp(d))


def length_from_trace(t: float) -> float:
    """Geodesic length 2 arccosh(t / 2) of a curve with trace t."""
    if t <= 2.0:
        raise PreconditionError(f"trace {t} <= 2: degenerate (non-hyperbolic) structure")
    return 2.0 * math.acosh(t / 2.0)


def _length_from_log_trace(u: float) -> float:
    """Length from the log of the trace, stable for arbitrarily large traces."""
    w = u - _LOG2
    if w <= 0.0:
        raise PreconditionError("trace <= 2: degenerate (non-hyperbolic) structure")
    # arccosh(e^w) = w + log(1 + sqrt(1 - e^(-2w)))
    return 2.0 * (w + math.log1p(math.sqrt(-math.expm1(-2.0 * w))))


class TraceCache:
    """Memoised log-traces of slopes at one fixed point.

    Cached values equal recomputation from scratch exactly: the descent is
    deterministic and every memo entry is the value that descent produces.
    """

    def __init__(self, point: MarkovPoint):
        self.point = point
        ux = math.log(point.x)
        uy = math.log(point.y)
        uz = math.log(point.z)
        self._memo = {
            Slope(0, 1): ux,
            Slope(1, 0): uy,
            Slope(1, 1): uz,
            Slope(-1, 1): _flip_log(ux, uy, uz),
        }

    def log_trace(self, s: Slope) -> float:
        memo = self._memo
        hit = memo.get(s)
        if hit is not None:
            return hit
        # Mirror p -> -p swaps the triangles on the two sides of the edge
        # {0/1, 1/0}; descend in the positive tree with the mirrored base.
        mirror = s.p < 0
        tp, tq = (-s.p, s.q) if mirror else (s.p, s.q)
        sign = -1 if mirror else 1
        lp, lq, ul = 0, 1, memo[Slope(0, 1)]
        rp, rq, ur = 1, 0, memo[Slope(1, 0)]
        mp, mq = 1, 1
        um = memo[Slope(sign, 1)]
        while True:
            cross = tp * mq - mp * tq
            if cross == 0:
                memo[s] = um
                return um
            if cross < 0:  # target inside (left, mediant)
                new_u = _flip_log(ul, um, ur)
                rp, rq, ur = mp, mq, um
            else:  # target inside (mediant, right)
                new_u = _flip_log(um, ur, ul)
                lp, lq, ul = mp, mq, um
            mp, mq = lp + rp, lq + rq
            um = new_u
            memo[Slope(sign * mp, mq)] = um

    def trace(self, s: Slope) -> float:
        return math.exp(self.log_trace(s))

    def length(self, s: Slope) -> float:
        return _length_from_log_trace(self.log_trace(s))


@lru_cache(maxsize=512)
def _cache_for(point: MarkovPoint) -> TraceCache:
    return TraceCache(point)


def trace_of_slope(point: MarkovPoint, s: Slope) -> float:
    """Trace of the curve of slope s (overflows to inf for monster slopes)."""
    return _cache_for(point).trace(s)


def log_trace_of_slope(point: MarkovPoint, s: Slope) -> float:
    """Log of the trace; finite whenever the length is representable."""
    return _cache_for(point).log_trace(s)


def length_of_slope(point: MarkovPoint, s: Slope) -> float:
    """Hyperbolic length of the geodesic of slope s."""
    return _cache_for(point).length(s)


def act_on_point(m: MCGMatrix, point: MarkovPoint) -> MarkovPoint:
    """Image of a point under a mapping class.

    The action relabels curves: the new triple consists of the traces at
    the old point of the preimages of the three basis slopes, so that
    length(act(m, X), s) = length(X, apply_class(m^-1, s)) for every s.
    """
    m_inv = m.inverse()
    cache = _cache_for(point)
    logs = [cache.log_trace(apply_class(m_inv, s)) for s in BASIS]
    if max(logs) >= 709.0:  # exp would overflow double precision
        raise InputError(
            "image traces overflow double precision; the point is too "
            "distorted for this mapping class"
        )
    return MarkovPoint(*(math.exp(u) for u in logs))


def systole(point: MarkovPoint, cfg: AnalysisConfig | None = None):
    """Shortest curve and its length, by Farey exchange descent.

    Repeatedly flips the triangle vertex whose exchange strictly decreases
    its trace (largest decrease first, index order on ties).  Each accepted
    move strictly decreases one trace within the discrete length spectrum
    of the point, so the descent terminates; the minimum over the terminal
    triangle is the systole, ties broken by canonical slope order.
    """
    del cfg  # accepted for signature uniformity; the descent needs no knobs
    cache = _cache_for(point)
    tri = [(s, cache.log_trace(s)) for s in BASIS]
    while True:
        best_i = -1
        best_gain = 0.0
        flips = []
        for i in range(3):
            (sa, ua), (sb, ub) = tri[(i + 1) % 3], tri[(i + 2) % 3]
            u_new = _flip_log(ua, ub, tri[i][1])
            flips.append(u_new)
            gain = tri[i][1] - u_new
            if gain > best_gain:
                best_gain = gain
                best_i = i
        if best_i < 0:
            break
        i = best_i
        (sa, _), (sb, _) = tri[(i + 1) % 3], tri[(i + 2) % 3]
        new_slope = _farey_flip(sa, sb, tri[i][0])
        tri[i] = (new_slope, flips[i])
        cache._memo.setdefault(new_slope, flips[i])
    slope, u = min(tri, key=lambda entry: (entry[1], entry[0].canonical_key))
    return slope, _length_from_log_trace(u)


def _farey_flip(sa: Slope, sb: Slope, out: Slope) -> Slope:
    """Third vertex of the other Farey triangle on the edge {sa, sb}."""
    plus = Slope(sa.p + sb.p, sa.q + sb.q)
    minus = Slope(sa.p - sb.p, sa.q - sb.q)
    return minus if plus == out else plus


def _short_slope(point: MarkovPoint) -> Slope:
    """A slope in the short part of the spectrum, found tolerantly.

    Same exchange descent as the systole search, but when an exchange
    underflows the log representation the new curve is unresolvably
    short, which settles the search; only the slope is needed (it roots
    the bulk table evaluation), never its exact length.
    """
    cache = _cache_for(point)
    tri = [(s, cache.log_trace(s)) for s in BASIS]
    while True:
        best_i = -1
        best_gain = 0.0
        flips = []
        for i in range(3):
            (sa, ua), (sb, ub) = tri[(i + 1) % 3], tri[(i + 2) % 3]
            try:
                u_new = _flip_log(ua, ub, tri[i][1])
            except ConvergenceError:
                return _farey_flip(sa, sb, tri[i][0])
            flips.append(u_new)
            gain = tri[i][1] - u_new
            if gain > best_gain:
                best_gain = gain
                best_i = i
        if best_i < 0:
            break
        i = best_i
        (sa, _), (sb, _) = tri[(i + 1) % 3], tri[(i + 2) % 3]
        tri[i] = (_farey_flip(sa, sb, tri[i][0]), flips[i])
    return min(tri, key=lambda entry: (entry[1], entry[0].canonical_key))[0]


def point_from_chart(u: float, v: float, branch: str = "minus") -> MarkovPoint:
    """Unconstrained chart for the optimizer: x = 2 + e^u, y = 2 + e^v.

    z solves z^2 - xyz + x^2 + y^2 = 0; the two roots are both valid and
    are exchanged by the exchange relabeling z -> xy - z.  Outside the
    discriminant domain the chart point does not exist.
    """
    if branch not in ("plus", "minus"):
        raise InputError(f"branch must be 'plus' or 'minus', got {branch!r}")
    x = 2.0 + math.exp(u)
    y = 2.0 + math.exp(v)
    disc = x * x * y * y - 4.0 * (x * x + y * y)
    if disc < 0.0:
        raise ChartDomainError(f"chart point (u={u}, v={v}) has negative discriminant {disc}")
    root = math.sqrt(disc)
    z = (x * y + root) / 2.0 if branch == "plus" else (x * y - root) / 2.0
    return MarkovPoint(x, y, z)


# ---------------------------------------------------------------------------
# Bulk evaluation: log-lengths of every slope within a budget.
#
# The in-budget slopes form a subtree of the Farey tessellation (a mediant
# never has smaller max(|p|, q) than its parents), so one breadth-first pass
# computes each trace exactly once.  The exchange program is built once per
# budget and replayed per point.
# ---------------------------------------------------------------------------


class _FareyProgram:
    """The in-budget subtree of the Farey tessellation, as an exchange plan.

    Slots 0..3 hold the slopes 0/1, 1/0, 1/1, -1/1; every further slot is
    one exchange (dst, a, b, c): trace(dst) = trace(a) trace(b) - trace(c),
    where {a, b, dst} and {a, b, c} are the two triangles on the edge
    {a, b}.  The dual tree of triangles is kept with its adjacency so a
    table can also be evaluated outward from any interior triangle.
    """

    def __init__(self, q_max: int):
        slopes = enumerate_slopes(q_max)
        n = len(slopes)
        seed = [Slope(0, 1), Slope(1, 0), Slope(1, 1), Slope(-1, 1)]
        steps = []  # (dst_slot, parent_a, parent_b, flipped_out)
        slot_of = {s: i for i, s in enumerate(seed)}
        next_slot = len(seed)
        # triangle 0: (0/1, 1/0, 1/1); triangle 1: its mirror (0/1, 1/0, -1/1)
        triangles = [(0, 1, 2), (0, 1, 3)]
        # adjacency entries: (other_tri, edge_slot_1, edge_slot_2, my_off, other_off)
        tri_adj = [[(1, 0, 1, 2, 3)], [(0, 0, 1, 3, 2)]]
        tri_of_slot = {2: 0, 3: 1}
        # positive tree from the base triangle, mirrored for negative slopes
        for sign, z_slot, root_tri in ((1, 2, 0), (-1, 3, 1)):
            queue = deque()
            queue.append(((0, 1, 0), (sign, 1, z_slot), 1, root_tri))
            queue.append(((sign, 1, z_slot), (sign, 0, 1), 0, root_tri))
            while queue:
                (lp, lq, ls), (rp, rq, rs), out_slot, parent_tri = queue.popleft()
                mp, mq = lp + rp, lq + rq
                if max(abs(mp), mq) > q_max:
                    continue
                slot = next_slot
                next_slot += 1
                slot_of[Slope(mp, mq)] = slot
                steps.append((slot, ls, rs, out_slot))
                tri = len(triangles)
                triangles.append((ls, rs, slot))
                tri_adj.append([(parent_tri, ls, rs, slot, out_slot)])
                tri_adj[parent_tri].append((tri, ls, rs, out_slot, slot))
                tri_of_slot[slot] = tri
                queue.append(((lp, lq, ls), (mp, mq, slot), rs, tri))
                queue.append(((mp, mq, slot), (rp, rq, rs), ls, tri))
        if next_slot != n:
            raise AssertionError(f"farey walk covered {next_slot} slopes, expected {n}")
        slope_of_slot = [None] * n
        for s, slot in slot_of.items():
            slope_of_slot[slot] = s
        self.q_max = q_max
        self.slopes = slopes
        self.steps = steps
        self.slope_of_slot = slope_of_slot
        self.slot_of = slot_of
        self.triangles = triangles
        self.tri_adj = tri_adj
        self.tri_of_slot = tri_of_slot
        self.slot_of_enum = np.array([slot_of[s] for s in slopes], dtype=np.intp)
        self.max_pq = np.array([max(abs(s.p), s.q) for s in slopes], dtype=np.int64)
        keys = sorted(range(n), key=lambda i: slopes[i].canonical_key)
        canon_rank = np.empty(n, dtype=np.int64)
        canon_rank[np.array(keys, dtype=np.intp)] = np.arange(n)
        self.canon_rank = canon_rank
        self.order_by_max_pq = np.argsort(self.max_pq, kind="stable")
        self._plan_cache = {}

    def triangle_near(self, direction: Slope) -> int:
        """The in-budget triangle closest to a slope direction."""
        sign = -1 if direction.p < 0 else 1
        tp, tq = abs(direction.p), direction.q
        if tq == 0:  # the vertical slope is a vertex of both base triangles
            return 0
        lp, lq = 0, 1
        rp, rq = 1, 0
        mp, mq = 1, 1
        tri = 0 if sign == 1 else 1
        while True:
            # stop once the direction is a vertex of the current triangle
            if tp * lq == lp * tq or tp * rq == rp * tq or tp * mq == mp * tq:
                return tri
            if tp * mq - mp * tq < 0:
                rp, rq = mp, mq
            else:
                lp, lq = mp, mq
            mp, mq = lp + rp, lq + rq
            slot = self.slot_of.get(Slope(sign * mp, mq))
            if slot is None:
                return tri
            tri = self.tri_of_slot[slot]

    def bfs_plan(self, root_tri: int):
        """Exchange plan visiting every triangle outward from root_tri.

        Returns the root's vertex slots and a list of steps
        (dst, a, b, c) in an order where each destination is the one
        unknown vertex of the next triangle.  Plans are cached per root:
        repeated evaluations at nearby points share them.
        """
        cached = self._plan_cache.get(root_tri)
        if cached is not None:
            return cached
        root_vertices = self.triangles[root_tri]
        plan = []
        seen = [False] * len(self.triangles)
        seen[root_tri] = True
        queue = deque([root_tri])
        while queue:
            tri = queue.popleft()
            for other, e1, e2, my_off, other_off in self.tri_adj[tri]:
                if seen[other]:
                    continue
                seen[other] = True
                plan.append((other_off, e1, e2, my_off))
                queue.append(other)
        if len(self._plan_cache) >= 8:
            self._plan_cache.pop(next(iter(self._plan_cache)))
        self._plan_cache[root_tri] = (root_vertices, plan)
        return root_vertices, plan


@lru_cache(maxsize=8)
def _program(q_max: int) -> _FareyProgram:
    return _FareyProgram(q_max)


def _lengths_from_log_traces(u_arr: np.ndarray) -> np.ndarray:
    w = u_arr - _LOG2
    return 2.0 * (w + np.log1p(np.sqrt(-np.expm1(-2.0 * w))))


@lru_cache(maxsize=48)
def _log_length_table(point: MarkovPoint, q_max: int, base: MCGMatrix | None = None) -> np.ndarray:
    """log(length) of every slope of enumerate_slopes(q_max), in that order.

    With a base matrix B the table holds the lengths of B(s) instead of s,
    i.e. the lengths of s at the image point of B^-1; the exchange plan is
    the same because the projective action maps Farey triangles to Farey
    triangles.

    Tables are evaluated outward from the triangle nearest the shortest
    (image) curve: every exchange then computes the longest vertex of its
    triangle, which keeps the arithmetic well conditioned however
    distorted the point is.  (A forward evaluation from the standard base
    would have to cross the wrapped region around the short curves, where
    chains of near-cancelling exchanges amplify rounding without bound.)
    The occasional exchange that still resolves poorly falls back to a
    direct descent, whose fan recursions are forward stable.
    """
    prog = _program(q_max)
    n = len(prog.slopes)
    u = [0.0] * n
    cache = _cache_for(point)
    log1p = math.log1p
    exp = math.exp
    slope_of_slot = prog.slope_of_slot
    if base is None:
        direction = _short_slope(point)
        image = None
    else:
        direction = apply_class(base.inverse(), _short_slope(point))
        image = lambda s: apply_class(base, s)
    root_vertices, plan = prog.bfs_plan(prog.triangle_near(direction))

    def slot_by_descent(slot: int) -> float:
        s = slope_of_slot[slot]
        return cache.log_trace(s if image is None else image(s))

    for slot in root_vertices:
        u[slot] = slot_by_descent(slot)
    log2_floor = _LOG2 + 1e-12
    for dst, a, b, c in plan:
        ua = u[a]
        ub = u[b]
        d = u[c] - ua - ub
        if d >= -1e-9 * (abs(ua) + abs(ub) + 1.0):
            u[dst] = slot_by_descent(dst)
            continue
        val = ua + ub + log1p(-exp(d))
        if val <= log2_floor:  # traces exceed 2, so this is numeric corruption
            val = slot_by_descent(dst)
        u[dst] = val
    u_arr = np.asarray(u)[prog.slot_of_enum]
    out = np.log(_lengths_from_log_traces(u_arr))
    out.flags.writeable = False
    return out
