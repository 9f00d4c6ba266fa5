"""Length-spectrum oracle for matrix representations of surface groups.

A hyperbolic structure is given concretely by generator matrices of
determinant one; closed curves are conjugacy classes of words in the
generators, their geodesic lengths come from traces, and mapping classes
act through free-group automorphisms.  This engine is generic (any
number of generators, any genus) and is used both to cross-validate the
trace-coordinate engine on the punctured torus and to explore structures
the trace coordinates do not cover.

Words use signed 1-based generator indices; the text form is letters
with case for inversion ("a b A B" or compactly "abAB").  Words are
stored cyclically reduced, which loses nothing here: traces, lengths and
the ratio bounds only depend on the conjugacy class.

Curve simplicity is never tested: the ratio of any closed-curve lengths
is dominated by the optimal Lipschitz constant, so non-simple classes
are still valid witnesses for the metric lower bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

from .curves import Slope
from .errors import InputError, PreconditionError

__all__ = [
    "GroupWord",
    "FreeAutomorphism",
    "FuchsianRep",
    "WordRatioReport",
    "word_trace",
    "geodesic_length",
    "apply_automorphism",
    "push_forward_rep",
    "dl_lower_bound",
    "torus_slope_word",
    "punctured_torus_fixture",
    "rep_from_traces",
    "genus2_octagon_fixture",
    "builtin_fixture",
    "load_rep",
    "dump_rep",
]

Matrix = Tuple[Tuple[float, float], Tuple[float, float]]

_IDENTITY: Matrix = ((1.0, 0.0), (0.0, 1.0))


def _mat_mul(m1: Matrix, m2: Matrix) -> Matrix:
    (a1, b1), (c1, d1) = m1
    (a2, b2), (c2, d2) = m2
    return (
        (a1 * a2 + b1 * c2, a1 * b2 + b1 * d2),
        (c1 * a2 + d1 * c2, c1 * b2 + d1 * d2),
    )


def _mat_inv(m: Matrix) -> Matrix:
    (a, b), (c, d) = m  # determinant one
    return ((d, -b), (-c, a))


def _free_reduce(letters) -> tuple:
    out = []
    for letter in letters:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def _cyclic_reduce(letters: tuple) -> tuple:
    start, end = 0, len(letters)
    while end - start >= 2 and letters[start] == -letters[end - 1]:
        start += 1
        end -= 1
    return letters[start:end]


@dataclass(frozen=True)
class GroupWord:
    """A cyclically reduced word in signed 1-based generator indices."""

    letters: tuple = ()

    def __post_init__(self):
        letters = tuple(int(g) for g in self.letters)
        if any(g == 0 for g in letters):
            raise InputError("generator indices are signed and start at 1; 0 is invalid")
        object.__setattr__(self, "letters", _cyclic_reduce(_free_reduce(letters)))

    @classmethod
    def parse(cls, text: str) -> "GroupWord":
        tokens = text.split()
        if len(tokens) == 1 and len(tokens[0]) > 1:
            tokens = list(tokens[0])
        letters = []
        for token in tokens:
            if len(token) != 1 or not token.isalpha():
                raise InputError(f"cannot read word letter {token!r}")
            idx = ord(token.lower()) - ord("a") + 1
            letters.append(-idx if token.isupper() else idx)
        return cls(tuple(letters))

    def __str__(self) -> str:
        if not self.letters:
            return ""
        return " ".join(
            chr(ord("a") + abs(g) - 1).upper() if g < 0 else chr(ord("a") + g - 1)
            for g in self.letters
        )

    def __len__(self) -> int:
        return len(self.letters)

    def inverse(self) -> "GroupWord":
        return GroupWord(tuple(-g for g in reversed(self.letters)))

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return GroupWord(self.letters + other.letters)


@dataclass(frozen=True)
class FreeAutomorphism:
    """Generator images of a free-group automorphism plus its declared inverse.

    Inverses are supplied, not computed: inverting a free-group
    automorphism is out of scope, but the round trip is verified on every
    generator at construction time.
    """

    images: tuple  # GroupWord per generator
    inverse_images: tuple

    def __post_init__(self):
        if len(self.images) != len(self.inverse_images):
            raise InputError("automorphism images and inverse images must match in rank")
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "inverse_images", tuple(self.inverse_images))
        rank = len(self.images)
        for word in (*self.images, *self.inverse_images):
            if any(abs(g) > rank for g in word.letters):
                raise InputError("automorphism image uses a generator outside the rank")
        for gen in range(1, rank + 1):
            for first, second in ((self.images, self.inverse_images), (self.inverse_images, self.images)):
                image = _substitute(GroupWord((gen,)), first)
                round_trip = _substitute(image, second)
                if round_trip.letters != (gen,):
                    raise InputError(
                        f"automorphism round trip failed on generator {gen}: got {round_trip}"
                    )

    @property
    def rank(self) -> int:
        return len(self.images)

    def inverse(self) -> "FreeAutomorphism":
        return FreeAutomorphism(self.inverse_images, self.images)

    @classmethod
    def from_strings(cls, images: Sequence[str], inverse_images: Sequence[str]) -> "FreeAutomorphism":
        return cls(
            tuple(GroupWord.parse(w) for w in images),
            tuple(GroupWord.parse(w) for w in inverse_images),
        )


def _substitute(word: GroupWord, images: Sequence[GroupWord]) -> GroupWord:
    letters = []
    for g in word.letters:
        image = images[abs(g) - 1]
        letters.extend(image.letters if g > 0 else image.inverse().letters)
    return GroupWord(tuple(letters))


def apply_automorphism(sigma: FreeAutomorphism, word: GroupWord) -> GroupWord:
    """Image of a conjugacy class: substitute, then reduce freely and cyclically."""
    return _substitute(word, sigma.images)


@dataclass(frozen=True)
class FuchsianRep:
    """Generator matrices of determinant one, with an optional relator.

    The relator, when supplied, must evaluate to plus or minus the
    identity; a cusped group's peripheral relator (commutator with trace
    -2 on the punctured torus) passes as -identity.
    """

    generators: tuple  # of 2x2 row tuples
    relator: Optional[GroupWord] = None
    label: str = ""
    automorphisms: Dict[str, FreeAutomorphism] = field(default_factory=dict)

    def __post_init__(self):
        gens = []
        for index, matrix in enumerate(self.generators):
            (a, b), (c, d) = matrix
            matrix = ((float(a), float(b)), (float(c), float(d)))
            det = matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
            if abs(det - 1.0) > 1e-9:
                raise InputError(f"generator {index + 1} has determinant {det}, expected 1")
            gens.append(matrix)
        object.__setattr__(self, "generators", tuple(gens))
        if self.relator is not None:
            residual = self.relator_residual()
            if residual > 1e-6:
                raise InputError(
                    f"relator {self.relator} evaluates {residual:.3e} away from +/-identity"
                )

    @property
    def rank(self) -> int:
        return len(self.generators)

    def evaluate(self, word: GroupWord) -> Matrix:
        result = _IDENTITY
        for g in word.letters:
            if not 1 <= abs(g) <= self.rank:
                raise InputError(f"word uses generator {abs(g)} but the group has rank {self.rank}")
            matrix = self.generators[abs(g) - 1]
            result = _mat_mul(result, matrix if g > 0 else _mat_inv(matrix))
        return result

    def relator_residual(self) -> float:
        value = self.evaluate(self.relator)
        plus = max(
            abs(value[0][0] - 1), abs(value[0][1]), abs(value[1][0]), abs(value[1][1] - 1)
        )
        minus = max(
            abs(value[0][0] + 1), abs(value[0][1]), abs(value[1][0]), abs(value[1][1] + 1)
        )
        return min(plus, minus)


def word_trace(rep: FuchsianRep, word: GroupWord) -> float:
    """Trace of the matrix of a word (2 for the empty word)."""
    value = rep.evaluate(word)
    return value[0][0] + value[1][1]


def geodesic_length(rep: FuchsianRep, word: GroupWord) -> float:
    """Length of the closed geodesic in the free homotopy class of the word."""
    trace = abs(word_trace(rep, word))
    if trace <= 2.0:
        raise PreconditionError(
            f"|trace| = {trace} <= 2: class is elliptic or peripheral, no closed geodesic"
        )
    return 2.0 * math.acosh(trace / 2.0)


def push_forward_rep(rep: FuchsianRep, sigma: FreeAutomorphism) -> FuchsianRep:
    """The representation precomposed with the inverse automorphism.

    Lengths transform by relabeling: the image representation assigns to
    each word the length the original assigned to its preimage class.
    """
    if sigma.rank != rep.rank:
        raise InputError(f"automorphism rank {sigma.rank} != representation rank {rep.rank}")
    gens = tuple(rep.evaluate(word) for word in sigma.inverse_images)
    return FuchsianRep(
        generators=gens,
        relator=rep.relator,
        label=f"{rep.label}*" if rep.label else "pushforward",
        automorphisms=dict(rep.automorphisms),
    )


# ---------------------------------------------------------------------------
# Word enumeration and the metric lower bound
# ---------------------------------------------------------------------------


def _cyclically_reduced_words(rank: int, length: int):
    """All cyclically reduced words of exactly this length, one per
    rotation-and-inversion class."""
    alphabet = [g for i in range(1, rank + 1) for g in (i, -i)]

    def canonical(seq: tuple) -> tuple:
        best = None
        for candidate in (seq, tuple(-g for g in reversed(seq))):
            for shift in range(len(candidate)):
                rotated = candidate[shift:] + candidate[:shift]
                if best is None or rotated < best:
                    best = rotated
        return best

    seen = set()
    stack = [(g,) for g in alphabet]
    while stack:
        seq = stack.pop()
        if len(seq) == length:
            if seq[0] != -seq[-1] and canonical(seq) == seq:
                seen.add(seq)
            continue
        for g in alphabet:
            if g != -seq[-1]:
                stack.append(seq + (g,))
    return sorted(seen)


@dataclass(frozen=True)
class WordRatioReport:
    """Certified lower bound for the metric between two representations."""

    value: float
    argmax_word: str
    max_word_length: int
    words_used: int
    convergence: tuple  # ((length, value), ...)

    def to_dict(self):
        return {
            "value": self.value,
            "argmax_word": self.argmax_word,
            "max_word_length": self.max_word_length,
            "words_used": self.words_used,
            "convergence": [[int(n), float(v)] for n, v in self.convergence],
        }


def dl_lower_bound(rep1: FuchsianRep, rep2: FuchsianRep, max_word_length: int) -> WordRatioReport:
    """Max of log(len_2 / len_1) over conjugacy classes up to a length cap.

    Words are deduplicated by cyclic rotation and inversion; classes that
    are not hyperbolic in both representations are skipped.  The result
    never exceeds the true metric because every closed-curve ratio is
    dominated by the optimal Lipschitz constant.
    """
    if rep1.rank != rep2.rank:
        raise InputError("representations must have the same number of generators")
    if max_word_length < 1:
        raise InputError("word length cap must be at least 1")
    best = -math.inf
    best_word = None
    used = 0
    convergence = []
    for length in range(1, max_word_length + 1):
        for letters in _cyclically_reduced_words(rep1.rank, length):
            word = GroupWord(letters)
            t1 = abs(word_trace(rep1, word))
            t2 = abs(word_trace(rep2, word))
            if t1 <= 2.0 or t2 <= 2.0:
                continue
            used += 1
            value = math.log(2.0 * math.acosh(t2 / 2.0)) - math.log(2.0 * math.acosh(t1 / 2.0))
            if value > best:
                best = value
                best_word = word
        convergence.append((length, best))
    if best_word is None:
        raise PreconditionError("no common hyperbolic class found below the length cap")
    return WordRatioReport(
        value=best,
        argmax_word=str(best_word),
        max_word_length=max_word_length,
        words_used=used,
        convergence=tuple(convergence),
    )


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


def torus_slope_word(slope: Slope) -> GroupWord:
    """The primitive class of a slope on the punctured torus.

    Built by the mediant concatenation rule along the Stern-Brocot path:
    w(0/1) = a, w(1/0) = b, and the word of a mediant is the left word
    followed by the right word; negative slopes mirror b to its inverse.
    The trace of this word therefore satisfies the same exchange
    recursion as the trace coordinates.
    """
    sign = 1 if slope.p >= 0 else -1
    target_p, target_q = abs(slope.p), slope.q
    if target_q == 0:
        return GroupWord((2 * sign,))
    if target_p == 0:
        return GroupWord((1,))
    left_p, left_q, left_w = 0, 1, (1,)
    right_p, right_q, right_w = 1, 0, (2 * sign,)
    while True:
        med_p, med_q = left_p + right_p, left_q + right_q
        med_w = left_w + right_w
        cross = target_p * med_q - med_p * target_q
        if cross == 0:
            return GroupWord(med_w)
        if cross < 0:
            right_p, right_q, right_w = med_p, med_q, med_w
        else:
            left_p, left_q, left_w = med_p, med_q, med_w


_TWIST_A = FreeAutomorphism.from_strings(["a b", "b"], ["a B", "b"])


def punctured_torus_fixture() -> FuchsianRep:
    """The square punctured torus: integer generators with traces (3, 3, 3).

    The group is free (no relator); the commutator word a b A B is
    peripheral with trace -2, certifying the cusp.  The basis words a, b,
    ab match the trace coordinates of the point (3, 3, 3).  Ships with
    the positive twist along the a-curve as a named automorphism.
    """
    return FuchsianRep(
        generators=(((1.0, 1.0), (1.0, 2.0)), ((1.0, -1.0), (-1.0, 2.0))),
        label="punctured-torus",
        automorphisms={"twist_a": _TWIST_A},
    )


def rep_from_traces(x: float, y: float, z: float) -> FuchsianRep:
    """A punctured-torus representation with prescribed basis traces.

    Uses the companion form A = [[x, -1], [1, 0]] and B = [[0, beta],
    [-1/beta, y]] with beta + 1/beta = z; the commutator trace is
    x^2 + y^2 + z^2 - xyz - 2, so triples on the Fricke relation give a
    cusp (trace -2), certifiable through word_trace.
    """
    if min(x, y, z) <= 2.0:
        raise InputError("traces must exceed 2")
    beta = (z + math.sqrt(z * z - 4.0)) / 2.0
    gen_a = ((float(x), -1.0), (1.0, 0.0))
    gen_b = ((0.0, beta), (-1.0 / beta, float(y)))
    return FuchsianRep(
        generators=(gen_a, gen_b),
        label=f"punctured-torus({x:g},{y:g},{z:g})",
        automorphisms={"twist_a": _TWIST_A},
    )


def genus2_octagon_fixture() -> FuchsianRep:
    """A genus-2 surface group from the regular hyperbolic octagon.

    The four generators translate along the axes through the centre at
    angles k pi / 4, pairing opposite sides; the common translation
    length satisfies cosh(len / 2) = 1 + sqrt(2), which makes the eight
    corners meet at a single point with total angle 2 pi.  The side cycle
    closes up along the alternating relator a B c D A b C d.
    """
    half = math.acosh(1.0 + math.sqrt(2.0))
    translate = ((math.exp(half), 0.0), (0.0, math.exp(-half)))
    gens = []
    for k in range(4):
        theta = k * math.pi / 4.0
        cos, sin = math.cos(theta / 2.0), math.sin(theta / 2.0)
        rot = ((cos, sin), (-sin, cos))
        rot_inv = ((cos, -sin), (sin, cos))
        gens.append(_mat_mul(rot, _mat_mul(translate, rot_inv)))
    inner_a = FreeAutomorphism.from_strings(
        ["a", "a b A", "a c A", "a d A"], ["a", "A b a", "A c a", "A d a"]
    )
    return FuchsianRep(
        generators=tuple(gens),
        relator=GroupWord.parse("a B c D A b C d"),
        label="genus2-octagon",
        automorphisms={"inner_a": inner_a},
    )


_BUILTINS = {
    "punctured-torus": punctured_torus_fixture,
    "genus2-octagon": genus2_octagon_fixture,
}


def builtin_fixture(name: str) -> FuchsianRep:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise InputError(
            f"unknown fixture {name!r}; available: {sorted(_BUILTINS)}"
        ) from None


# ---------------------------------------------------------------------------
# Fixture files
# ---------------------------------------------------------------------------


def _rep_to_json_dict(rep: FuchsianRep) -> dict:
    data = {
        "label": rep.label,
        "generators": [
            [m[0][0], m[0][1], m[1][0], m[1][1]] for m in rep.generators
        ],
    }
    if rep.relator is not None:
        data["relator"] = str(rep.relator)
    if rep.automorphisms:
        data["automorphisms"] = {
            name: {
                "images": [str(w) for w in auto.images],
                "inverse_images": [str(w) for w in auto.inverse_images],
            }
            for name, auto in rep.automorphisms.items()
        }
    return data


def dump_rep(rep: FuchsianRep, path) -> None:
    with open(path, "w") as handle:
        json.dump(_rep_to_json_dict(rep), handle, indent=2, sort_keys=True)
        handle.write("\n")


def rep_from_json_dict(data: dict) -> FuchsianRep:
    try:
        generators = tuple(
            ((float(row[0]), float(row[1])), (float(row[2]), float(row[3])))
            for row in data["generators"]
        )
    except (KeyError, TypeError, IndexError, ValueError) as exc:
        raise InputError(f"fixture needs 'generators' as 4-element rows: {exc}") from exc
    relator = GroupWord.parse(data["relator"]) if data.get("relator") else None
    automorphisms = {}
    for name, entry in (data.get("automorphisms") or {}).items():
        try:
            automorphisms[name] = FreeAutomorphism.from_strings(
                entry["images"], entry["inverse_images"]
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"automorphism {name!r} needs images and inverse_images") from exc
    return FuchsianRep(
        generators=generators,
        relator=relator,
        label=str(data.get("label", "")),
        automorphisms=automorphisms,
    )


def load_rep(path) -> FuchsianRep:
    try:
        with open(path) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise InputError(f"cannot read fixture file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"fixture file {path} is not valid JSON: {exc}") from exc
    return rep_from_json_dict(data)
