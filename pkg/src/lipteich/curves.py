"""Simple closed curves on the once-punctured torus and the mapping-class action.

An essential simple closed curve is recorded by its slope p/q, a reduced
rational with 1/0 standing for the vertical curve.  Orientation-preserving
mapping classes are integer 2x2 matrices of determinant one acting on
slopes as column vectors, (p, q) |-> (a p + b q, c p + d q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .errors import InputError

__all__ = [
    "Slope",
    "MCGMatrix",
    "NTType",
    "intersection_number",
    "enumerate_slopes",
    "apply_class",
    "classify_matrix",
]


def _sign(n: int) -> int:
    return (n > 0) - (n < 0)


@dataclass(frozen=True)
class Slope:
    """A curve class p/q in canonical form: q > 0, or (q, p) = (0, 1).

    The constructor reduces by gcd and fixes the sign, so equal curves
    compare equal.
    """

    p: int
    q: int

    def __post_init__(self):
        p, q = self.p, self.q
        if p == 0 and q == 0:
            raise InputError("slope 0/0 is not a curve")
        g = math.gcd(abs(p), abs(q))
        p //= g
        q //= g
        if q < 0 or (q == 0 and p < 0):
            p, q = -p, -q
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def from_string(cls, text: str) -> "Slope":
        try:
            p_str, q_str = text.strip().split("/")
            return cls(int(p_str), int(q_str))
        except (ValueError, TypeError) as exc:
            raise InputError(f"cannot parse slope {text!r}; expected 'p/q'") from exc

    def __str__(self) -> str:
        return f"{self.p}/{self.q}"

    @property
    def canonical_key(self):
        """Sort key used to break exact ties deterministically."""
        return (abs(self.p), abs(self.q), _sign(self.p))

    @property
    def enumeration_key(self):
        """Sort key of the documented enumeration order."""
        return (abs(self.q), abs(self.p), _sign(self.p))

    @property
    def value(self) -> float:
        """The slope as an extended real (inf for the vertical curve)."""
        return math.inf if self.q == 0 else self.p / self.q


BASIS = (Slope(0, 1), Slope(1, 0), Slope(1, 1))


@dataclass(frozen=True)
class MCGMatrix:
    """An orientation-preserving mapping class as an integer matrix, det = 1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        for entry in (self.a, self.b, self.c, self.d):
            if not isinstance(entry, int):
                raise InputError("matrix entries must be integers")
        if self.a * self.d - self.b * self.c != 1:
            raise InputError(
                f"matrix {self.to_list()} has determinant "
                f"{self.a * self.d - self.b * self.c}, expected 1"
            )

    @classmethod
    def identity(cls) -> "MCGMatrix":
        return cls(1, 0, 0, 1)

    @classmethod
    def from_string(cls, text: str) -> "MCGMatrix":
        try:
            a, b, c, d = (int(part) for part in text.strip().split(","))
        except (ValueError, TypeError) as exc:
            raise InputError(f"cannot parse matrix {text!r}; expected 'a,b,c,d'") from exc
        return cls(a, b, c, d)

    def to_list(self):
        return [self.a, self.b, self.c, self.d]

    @property
    def trace(self) -> int:
        return self.a + self.d

    def inverse(self) -> "MCGMatrix":
        return MCGMatrix(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "MCGMatrix") -> "MCGMatrix":
        return MCGMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def power(self, n: int) -> "MCGMatrix":
        if n < 0:
            return self.inverse().power(-n)
        result = MCGMatrix.identity()
        base = self
        while n:
            if n & 1:
                result = result @ base
            base = base @ base
            n >>= 1
        return result

    def is_identity_up_to_sign(self) -> bool:
        return self.b == 0 and self.c == 0 and abs(self.a) == 1 and self.a == self.d


@dataclass(frozen=True)
class NTType:
    """Nielsen-Thurston data of a mapping class.

    tag is one of "Periodic", "Reducible", "Anosov".  Periodic classes
    carry their order as a matrix; reducible ones their invariant slope;
    Anosov ones the dilatation and the two (irrational) eigen-slopes.
    The unstable slope is the one whose measured lamination is expanded
    by the class, the stable one is contracted.
    """

    tag: str
    order: Optional[int] = None
    invariant_slope: Optional[Slope] = None
    dilatation: Optional[float] = None
    stable_slope: Optional[float] = None
    unstable_slope: Optional[float] = None


def intersection_number(s1: Slope, s2: Slope) -> int:
    """Geometric intersection number of two curve classes."""
    return abs(s1.p * s2.q - s2.p * s1.q)


def enumerate_slopes(q_max: int) -> list[Slope]:
    """All canonical slopes with max(|p|, |q|) <= q_max.

    Ordered by (|q|, |p|, sign p); duplicate-free.
    """
    if q_max < 1:
        raise InputError("slope budget must be at least 1")
    slopes = [Slope(1, 0)]
    for q in range(1, q_max + 1):
        for p in range(-q_max, q_max + 1):
            if math.gcd(abs(p), q) == 1:
                slopes.append(Slope(p, q))
    slopes.sort(key=lambda s: s.enumeration_key)
    return slopes


def apply_class(m: MCGMatrix, s: Slope) -> Slope:
    """Image of a curve class under a mapping class (column convention)."""
    return Slope(m.a * s.p + m.b * s.q, m.c * s.p + m.d * s.q)


def _periodic_order(m: MCGMatrix) -> int:
    if m == MCGMatrix.identity():
        return 1
    t = m.trace
    if t == -2:
        return 2  # -identity
    return {0: 4, 1: 6, -1: 3}[t]


def _parabolic_fixed_slope(m: MCGMatrix) -> Slope:
    # eigenvector of the +/-1 eigenvalue; (b, eig - a) unless that vanishes
    eig = 1 if m.trace == 2 else -1
    if m.b != 0 or eig - m.a != 0:
        return Slope(m.b, eig - m.a)
    return Slope(0, 1)


def classify_matrix(m: MCGMatrix) -> NTType:
    """Nielsen-Thurston type of a mapping class from its trace.

    |trace| < 2 or +/-identity is periodic; |trace| = 2 otherwise is
    reducible (a twist power, with its fixed slope); |trace| > 2 is
    Anosov with dilatation (|trace| + sqrt(trace^2 - 4)) / 2.
    """
    t = m.trace
    if m.is_identity_up_to_sign() or abs(t) < 2:
        return NTType(tag="Periodic", order=_periodic_order(m))
    if abs(t) == 2:
        return NTType(tag="Reducible", invariant_slope=_parabolic_fixed_slope(m))
    disc = math.sqrt(t * t - 4)
    dilatation = (abs(t) + disc) / 2
    # eigenvalues with matching sign of the trace; c != 0 whenever |trace| > 2
    # for an integer determinant-one matrix, so (mu - d)/c is always defined.
    mu_big = (t + disc) / 2 if t > 0 else (t - disc) / 2
    mu_small = (t - disc) / 2 if t > 0 else (t + disc) / 2
    unstable = (mu_big - m.d) / m.c
    stable = (mu_small - m.d) / m.c
    return NTType(
        tag="Anosov",
        dilatation=dilatation,
        stable_slope=stable,
        unstable_slope=unstable,
    )
