"""Exact combinatorics of regular-tree automorphism groups at finite depth.

Vertices of the degree-d tree are reduced words over the edge labels
0..d-1 (consecutive letters differ); the base vertex is the empty word.
The distinguished end is the lexicographically smallest reduced ray from the
base (letters 0, 1, 0, 1, ...), and the unit translation toward it shifts
vertices one step along that axis.  Everything in this module is exact:
integers for orders and orbit sizes, rationals for measure ratios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .invariance import CheckReport

__all__ = [
    "Word",
    "TreeBall",
    "EndDirection",
    "ray_word",
    "busemann",
    "ball_aut_order",
    "stabilizer_index",
    "horospherical_modular",
    "edge_stabilizer_measures_equal",
    "van_dantzig_measure",
    "relabel_cosets",
]

Word = tuple[int, ...]


def ray_word(length: int) -> Word:
    """Initial segment of the distinguished end's ray (letters 0,1,0,1,...)."""
    return tuple(i % 2 for i in range(length))


def _is_reduced(word: Word, degree: int) -> bool:
    return all(0 <= a < degree for a in word) and \
        all(a != b for a, b in zip(word, word[1:]))


@dataclass(frozen=True)
class TreeBall:
    """Radius-R ball of the degree-d tree around the base vertex."""

    degree: int
    radius: int

    def __post_init__(self):
        if self.degree < 3:
            raise ValueError("degree must be at least 3")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def vertices(self) -> list[Word]:
        out = [()]
        frontier = [()]
        for _ in range(self.radius):
            nxt = []
            for w in frontier:
                for a in range(self.degree):
                    if w and a == w[-1]:
                        continue
                    nxt.append(w + (a,))
            out.extend(nxt)
            frontier = nxt
        return out

    def vertex_count(self) -> int:
        d, r = self.degree, self.radius
        return 1 + d * ((d - 1) ** r - 1) // (d - 2)

    def contains(self, word: Word) -> bool:
        return len(word) <= self.radius and _is_reduced(word, self.degree)

    def require(self, word: Word) -> Word:
        word = tuple(word)
        if not self.contains(word):
            raise ValueError(f"vertex {word} is outside the ball")
        return word


def _common_prefix(a: Word, b: Word) -> int:
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n


def word_distance(a: Word, b: Word) -> int:
    c = _common_prefix(a, b)
    return (len(a) - c) + (len(b) - c)


def busemann(word: Word) -> int:
    """Level of a vertex relative to the distinguished end (base vertex 0;
    steps toward the end decrease the level by 1)."""
    j = _common_prefix(tuple(word), ray_word(len(word)))
    return len(word) - 2 * j


@dataclass(frozen=True)
class EndDirection:
    """The distinguished boundary end of a ball, with its ray and levels."""

    ball: TreeBall

    def ray(self) -> tuple[Word, ...]:
        return tuple(ray_word(k) for k in range(self.ball.radius + 1))

    def level(self, word: Word) -> int:
        return busemann(self.ball.require(word))


def ball_aut_order(d: int, R: int) -> int:
    """Order of the automorphism group of the radius-R ball fixing the base.

    Recursion: the base contributes d! and every deeper vertex an independent
    (d-1)! once its parent's image is chosen.
    """
    if d < 3:
        raise ValueError("degree must be at least 3")
    if R < 0:
        raise ValueError("radius must be nonnegative")
    if R == 0:
        return 1
    a = 1
    for _ in range(1, R):
        a = math.factorial(d - 1) * a ** (d - 1)
    return math.factorial(d) * a ** d


# ---------------------------------------------------------------------------
# orbit counting under constrained automorphism subgroups

def _prefix_closure(words) -> set[Word]:
    out = set()
    for w in words:
        for i in range(len(w) + 1):
            out.add(tuple(w[:i]))
    return out


def _geodesic_to_end(word: Word, radius: int) -> list[Word]:
    # ascend to the ray, then follow it outward (within the ball)
    j = _common_prefix(word, ray_word(len(word)))
    path = [tuple(word[:i]) for i in range(len(word), j, -1)]
    path.extend(ray_word(i) for i in range(j, radius + 1))
    return path


def _end_fixed_set(ball: TreeBall, fixed) -> set[Word]:
    # an automorphism fixing the end and a vertex u fixes the whole
    # geodesic from u to the end pointwise
    out = set()
    for u in fixed:
        out.update(_geodesic_to_end(tuple(u), ball.radius))
    return out


def _toward_end(word: Word) -> Word:
    # unique neighbor one level closer to the end
    j = _common_prefix(word, ray_word(len(word)))
    if j == len(word):
        return ray_word(len(word) + 1)
    return tuple(word[:-1])


def stabilizer_index(ball: TreeBall, fixed, moved, horospherical: bool = False) -> int:
    """Orbit size of ``moved`` under the automorphisms fixing ``fixed``
    pointwise (ball automorphisms, which always fix the base vertex; with
    ``horospherical`` set, tree automorphisms fixing the distinguished end).
    """
    d = ball.degree
    moved = ball.require(moved)
    fixed = [ball.require(u) for u in fixed]

    if not horospherical:
        s = _prefix_closure(fixed) | {()}
        if moved in s:
            return 1
        j = len(moved)
        while tuple(moved[:j]) not in s:
            j -= 1
        exit_vertex = tuple(moved[:j])
        s_children = sum(1 for c in s if len(c) == j + 1 and c[:j] == exit_vertex)
        slots = d if j == 0 else d - 1
        branch = slots - s_children
        return branch * (d - 1) ** (len(moved) - j - 1)

    if not fixed:
        raise ValueError("the end-fixing subgroup needs at least one fixed vertex")
    s = _end_fixed_set(ball, fixed)
    if moved in s:
        return 1
    gate = None
    for v in _geodesic_to_end(moved, ball.radius):
        if v in s:
            gate = v
            break
    if gate is None:
        raise ValueError("fixed set does not pin the end inside this ball")
    m = word_distance(gate, moved)
    if len(gate) + m > ball.radius:
        raise ValueError("orbit may leave the ball; increase the radius")
    toward = _toward_end(gate)
    s_away = sum(1 for c in s if word_distance(c, gate) == 1 and c != toward)
    return ((d - 1) - s_away) * (d - 1) ** (m - 1)


def horospherical_modular(d: int, R: int = 2) -> Fraction:
    """Modular value of the unit translation toward the fixed end, inside the
    end stabilizer: the ratio of the two vertex-stabilizer indices.

    The value is exactly 1/(d-1) and independent of the ball radius.
    """
    ball = TreeBall(d, R)
    x = ()
    tx = ray_word(1)
    numerator = stabilizer_index(ball, [x], tx, horospherical=True)
    denominator = stabilizer_index(ball, [tx], x, horospherical=True)
    return Fraction(numerator, denominator)


def edge_stabilizer_measures_equal(d: int, R: int) -> CheckReport:
    """Under the full automorphism group all edge stabilizers get the same
    measure once the base-vertex stabilizer is normalized to 1.

    For an edge (u, v) at depth k the measure is
    |G_u base| / (|G_base u| * |G_u v|); orbit sizes under a vertex
    stabilizer depend only on the distance, so each factor is a rooted orbit
    count.  Equality across edges witnesses unimodularity of the group.
    """
    if R < 1:
        raise ValueError("radius must be at least 1")
    ball = TreeBall(d, R)
    values = []
    inner = TreeBall(d, R - 1)
    for u in inner.vertices():
        for a in range(d):
            if u and a == u[-1]:
                continue
            v = u + (a,)
            if not inner.contains(v):
                continue
            k = len(u)
            orbit_of_u = stabilizer_index(ball, [()], u) if k else 1
            # |G_u base| equals the orbit of any depth-k vertex under the
            # base stabilizer (orbit sizes depend only on the distance)
            orbit_back = stabilizer_index(ball, [()], ray_word(k)) if k else 1
            orbit_of_v = stabilizer_index(ball, [()], ray_word(1))
            values.append(Fraction(orbit_back, orbit_of_u * orbit_of_v))
    if not values:
        return CheckReport.from_deviation(
            "edge_stabilizer_measures", 0.0, 0.5, estimate=float("nan"),
            samples=0, seed=0, group=f"aut_t{d}",
            law="mu(G_e) equal across edges", exact="0/1")
    equal = all(v == values[0] for v in values)
    return CheckReport.from_deviation(
        "edge_stabilizer_measures", 0.0 if equal else 1.0, 0.5,
        estimate=float(values[0]), reference=float(values[0]),
        samples=len(values), seed=0, group=f"aut_t{d}",
        law="mu(G_e) equal across edges",
        exact=f"{values[0].numerator}/{values[0].denominator}")


# ---------------------------------------------------------------------------
# coset measures for the compact open subgroup

def van_dantzig_measure(ball: TreeBall, coset_list) -> Fraction:
    """Measure of a disjoint union of cosets of the subgroup fixing the
    base vertex's star pointwise, with that subgroup normalized to mass 1.

    A coset is identified by the induced permutation of the base star's
    labels; duplicates are rejected.
    """
    d = ball.degree
    seen = set()
    for perm in coset_list:
        perm = tuple(perm)
        if sorted(perm) != list(range(d)):
            raise ValueError(f"{perm} is not a permutation of 0..{d - 1}")
        if perm in seen:
            raise ValueError(f"duplicate coset {perm}")
        seen.add(perm)
    return Fraction(len(seen), 1)


def relabel_cosets(coset_list, outer) -> list[tuple]:
    """Apply a relabeling of the base star (an automorphism acting on coset
    representatives from the left)."""
    outer = tuple(outer)
    return [tuple(outer[p] for p in perm) for perm in coset_list]
