"""Catalog of locally compact matrix groups with charts and invariant densities.

Each catalog entry couples a concrete matrix (or vector) representation with
a global coordinate chart and the closed-form density that makes chart-space
integration translation invariant.  The densities, per chart coordinates:

    real_add(n)   -- constant 1 (both sides)
    real_mult     -- 1/|x| (both sides)
    gl(n)         -- 1/|det X|^n on the matrix entries (both sides)
    sl2           -- 1/y^2 in the (x, y, theta) shear/scale/rotation chart
    so2           -- constant 1 in the angle chart
    triangular_p  -- 1/x^2 on the left, 1 on the right (the group is not
                     unimodular; x is the diagonal entry)

All values are plain float64; elements are immutable after construction and
membership is enforced when they are built.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "MEMBERSHIP_TOL",
    "GL_DET_SHELL",
    "MembershipError",
    "SingularParameterError",
    "GroupId",
    "Element",
    "Chart",
    "real_add",
    "real_mult",
    "gl",
    "sl2",
    "so2",
    "triangular_p",
    "catalog",
    "multiply",
    "invert",
    "identity",
    "iwasawa_decompose",
    "iwasawa_coordinates",
    "haar_density",
    "default_chart",
]

TWO_PI = 2.0 * math.pi

#: entrywise tolerance for membership checks at element construction
MEMBERSHIP_TOL = 1e-9

#: default |det| clearance that gl charts keep away from the singular set
GL_DET_SHELL = 1e-3

_KINDS = ("real_add", "real_mult", "gl", "sl2", "so2", "triangular_p")


class MembershipError(ValueError):
    """A matrix/vector fails the membership invariant of its group."""


class SingularParameterError(ValueError):
    """A chart parameter lies on (or too close to) the singular locus."""


@dataclass(frozen=True)
class GroupId:
    """Identifier of a catalog group; ``n`` matters for real_add and gl."""

    kind: str
    n: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def matrix_size(self) -> int:
        if self.kind == "real_add":
            raise ValueError("real_add elements are vectors, not matrices")
        return self.n if self.kind == "gl" else (1 if self.kind == "real_mult" else 2)

    @property
    def chart_dim(self) -> int:
        return {
            "real_add": self.n,
            "real_mult": 1,
            "gl": self.n * self.n,
            "sl2": 3,
            "so2": 1,
            "triangular_p": 2,
        }[self.kind]

    @property
    def label(self) -> str:
        if self.kind == "real_add":
            return f"real_add_{self.n}"
        if self.kind == "gl":
            return f"gl{self.n}"
        return self.kind


def real_add(n: int = 1) -> GroupId:
    return GroupId("real_add", n)


def real_mult() -> GroupId:
    return GroupId("real_mult")


def gl(n: int) -> GroupId:
    return GroupId("gl", n)


def sl2() -> GroupId:
    return GroupId("sl2")


def so2() -> GroupId:
    return GroupId("so2")


def triangular_p() -> GroupId:
    return GroupId("triangular_p")


def catalog() -> tuple[GroupId, ...]:
    """The concrete groups exercised by the default suites."""
    return (real_add(1), real_add(2), real_mult(), gl(2), sl2(), so2(), triangular_p())


def _check_membership(group: GroupId, rep: np.ndarray) -> None:
    kind = group.kind
    if not np.all(np.isfinite(rep)):
        raise MembershipError(f"{group.label}: non-finite entries")
    if kind == "real_add":
        if rep.shape != (group.n,):
            raise MembershipError(f"real_add({group.n}) expects a length-{group.n} vector")
        return
    m = group.matrix_size
    if rep.shape != (m, m):
        raise MembershipError(f"{group.label} expects a {m}x{m} matrix")
    det = float(np.linalg.det(rep))
    if kind == "real_mult":
        if abs(rep[0, 0]) <= MEMBERSHIP_TOL:
            raise MembershipError("real_mult: scalar too close to zero")
    elif kind == "gl":
        if abs(det) <= MEMBERSHIP_TOL:
            raise MembershipError("gl: |det| not bounded away from zero")
    elif kind == "sl2":
        if abs(det - 1.0) > MEMBERSHIP_TOL:
            raise MembershipError(f"sl2: det = {det} is not 1 within tolerance")
    elif kind == "so2":
        if abs(det - 1.0) > MEMBERSHIP_TOL:
            raise MembershipError("so2: det is not 1 within tolerance")
        if np.max(np.abs(rep.T @ rep - np.eye(2))) > MEMBERSHIP_TOL:
            raise MembershipError("so2: matrix is not orthogonal within tolerance")
    elif kind == "triangular_p":
        if rep[1, 0] != 0.0:
            raise MembershipError("triangular_p: lower-left entry must be exactly 0")
        if abs(det - 1.0) > MEMBERSHIP_TOL:
            raise MembershipError("triangular_p: det is not 1 within tolerance")
        if abs(rep[0, 0]) <= MEMBERSHIP_TOL:
            raise MembershipError("triangular_p: diagonal entry too close to zero")


@dataclass(frozen=True)
class Element:
    """Immutable group element; ``rep`` is a vector (real_add) or a matrix."""

    group: GroupId
    rep: np.ndarray

    def __post_init__(self):
        rep = np.array(self.rep, dtype=float)
        _check_membership(self.group, rep)
        rep.flags.writeable = False
        object.__setattr__(self, "rep", rep)

    def allclose(self, other: "Element", tol: float = 1e-10) -> bool:
        return self.group == other.group and bool(np.max(np.abs(self.rep - other.rep)) <= tol)


# ---------------------------------------------------------------------------
# group law on raw representations (batched; leading axes broadcast)

def rep_multiply(group: GroupId, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if group.kind == "real_add":
        return a + b
    return np.matmul(a, b)


def rep_invert(group: GroupId, a: np.ndarray) -> np.ndarray:
    kind = group.kind
    if kind == "real_add":
        return -a
    if kind == "real_mult":
        return 1.0 / a
    if kind == "gl":
        return np.linalg.inv(a)
    # the remaining 2x2 families have det 1: use the adjugate
    out = np.empty_like(a)
    out[..., 0, 0] = a[..., 1, 1]
    out[..., 0, 1] = -a[..., 0, 1]
    out[..., 1, 0] = -a[..., 1, 0]
    out[..., 1, 1] = a[..., 0, 0]
    return out


def _rep_identity(group: GroupId) -> np.ndarray:
    if group.kind == "real_add":
        return np.zeros(group.n)
    return np.eye(group.matrix_size)


def multiply(g: Element, h: Element) -> Element:
    """Group product; inputs must belong to the same catalog group."""
    if g.group != h.group:
        raise MembershipError("cannot multiply elements of different groups")
    return Element(g.group, rep_multiply(g.group, g.rep, h.rep))


def invert(g: Element) -> Element:
    return Element(g.group, rep_invert(g.group, g.rep))


def identity(group: GroupId) -> Element:
    return Element(group, _rep_identity(group))


# ---------------------------------------------------------------------------
# shear/scale/rotation coordinates on sl2

def iwasawa_coordinates(mats: np.ndarray) -> np.ndarray:
    """Map a batch of unit-determinant 2x2 matrices to (x, y, theta) rows.

    The bottom row (-sin(theta)/sqrt(y), cos(theta)/sqrt(y)) determines y and
    theta; x is recovered from the Moebius image of i.  theta is reduced to
    [0, 2*pi).
    """
    mats = np.asarray(mats, dtype=float)
    a, b = mats[..., 0, 0], mats[..., 0, 1]
    c, d = mats[..., 1, 0], mats[..., 1, 1]
    s = c * c + d * d
    y = 1.0 / s
    x = (b * d + a * c) * y
    theta = np.arctan2(-c, d) % TWO_PI
    return np.stack([x, y, theta], axis=-1)


def _sl2_from_coordinates(params: np.ndarray) -> np.ndarray:
    x, y, theta = params[..., 0], params[..., 1], params[..., 2]
    sy = np.sqrt(y)
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty(params.shape[:-1] + (2, 2))
    out[..., 0, 0] = sy * ct - (x / sy) * st
    out[..., 0, 1] = sy * st + (x / sy) * ct
    out[..., 1, 0] = -st / sy
    out[..., 1, 1] = ct / sy
    return out


def iwasawa_decompose(g: Element) -> tuple[float, float, float]:
    """Split g in SL(2,R) as shear(x) * scale(y) * rotation(theta)."""
    if g.group.kind != "sl2":
        raise MembershipError("iwasawa_decompose expects an sl2 element")
    x, y, theta = iwasawa_coordinates(g.rep[np.newaxis])[0]
    return float(x), float(y), float(theta)


# ---------------------------------------------------------------------------
# charts

@dataclass(frozen=True)
class Chart:
    """Global parameter chart of a catalog group.

    ``embed``/``extract`` convert between parameter rows of shape (m, dim)
    and batched group representations.  ``singular_axes`` lists axis-aligned
    hyperplanes excluded from the chart (e.g. x = 0 for real_mult); a gl
    chart additionally excludes the shell |det| < ``det_shell``.
    """

    group: GroupId | None
    box: np.ndarray
    name: str
    embed: Callable[[np.ndarray], np.ndarray] | None
    extract: Callable[[np.ndarray], np.ndarray] | None
    left_density: Callable[[np.ndarray], np.ndarray]
    right_density: Callable[[np.ndarray], np.ndarray]
    singular_axes: tuple[tuple[int, float], ...] = ()
    det_shell: float = 0.0

    def __post_init__(self):
        box = np.array(self.box, dtype=float)
        if box.ndim != 2 or box.shape[1] != 2 or np.any(box[:, 0] >= box[:, 1]):
            raise ValueError("chart box must be a (dim, 2) array of proper intervals")
        box.flags.writeable = False
        object.__setattr__(self, "box", box)

    @property
    def dim(self) -> int:
        return self.box.shape[0]

    def to_element(self, params) -> Element:
        p = np.asarray(params, dtype=float).reshape(1, self.dim)
        return Element(self.group, self.embed(p)[0])

    def from_element(self, g: Element) -> np.ndarray:
        if g.group != self.group:
            raise MembershipError("element does not belong to this chart's group")
        return self.extract(g.rep[np.newaxis])[0]

    def contains_box(self, box: np.ndarray) -> bool:
        box = np.asarray(box, dtype=float)
        return bool(np.all(box[:, 0] >= self.box[:, 0] - 1e-12)
                    and np.all(box[:, 1] <= self.box[:, 1] + 1e-12))

    def singular_gap(self, box) -> float:
        """Clearance of a parameter box from the singular locus (inf if none)."""
        box = np.asarray(box, dtype=float)
        if box.ndim == 1:
            box = np.stack([box, box], axis=-1)
        gap = math.inf
        for axis, value in self.singular_axes:
            lo, hi = box[axis]
            if lo <= value <= hi:
                return 0.0
            gap = min(gap, lo - value if lo > value else value - hi)
        if self.group is not None and self.group.kind == "gl":
            gap = min(gap, self._det_clearance(box))
        return gap

    def _det_clearance(self, box: np.ndarray) -> float:
        # det is multilinear in the entries, so its range over a box is
        # spanned by the corner values
        n = self.group.n
        corners = np.array(list(itertools.product(*box)), dtype=float)
        dets = np.linalg.det(corners.reshape(-1, n, n))
        if dets.min() < 0.0 < dets.max():
            return -self.det_shell
        return float(np.min(np.abs(dets))) - self.det_shell


def _as_rows(params, dim: int) -> np.ndarray:
    p = np.asarray(params, dtype=float)
    if p.ndim == 1:
        p = p.reshape(1, dim)
    return p


def _ones_density(dim: int):
    def dens(params):
        return np.ones(_as_rows(params, dim).shape[0])
    return dens


def default_chart(group: GroupId, half_width: float | None = None) -> Chart:
    """Default working chart of a catalog group.

    The box bounds the region where test functions may live; the chart maps
    and densities themselves are global (off the singular locus).
    """
    kind = group.kind
    if kind == "real_add":
        w = 12.0 if half_width is None else half_width
        n = group.n
        box = np.tile([[-w, w]], (n, 1))
        ident = lambda p: _as_rows(p, n)
        return Chart(group, box, group.label, ident, lambda r: np.asarray(r, float),
                     _ones_density(n), _ones_density(n))
    if kind == "real_mult":
        w = 16.0 if half_width is None else half_width
        box = np.array([[-w, w]])

        def embed(p):
            return _as_rows(p, 1)[:, :, np.newaxis]

        def extract(r):
            return np.asarray(r, float)[..., 0]

        def dens(p):
            return 1.0 / np.abs(_as_rows(p, 1)[:, 0])

        return Chart(group, box, group.label, embed, extract, dens, dens,
                     singular_axes=((0, 0.0),))
    if kind == "gl":
        w = 6.0 if half_width is None else half_width
        n = group.n
        box = np.tile([[-w, w]], (n * n, 1))

        def embed(p):
            return _as_rows(p, n * n).reshape(-1, n, n)

        def extract(r):
            return np.asarray(r, float).reshape(-1, n * n)

        def dens(p):
            mats = _as_rows(p, n * n).reshape(-1, n, n)
            if n == 2:
                det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
            else:
                det = np.linalg.det(mats)
            return np.abs(det) ** (-float(n))

        return Chart(group, box, group.label, embed, extract, dens, dens,
                     det_shell=GL_DET_SHELL)
    if kind == "sl2":
        box = np.array([[-8.0, 8.0], [1e-8, 12.0], [0.0, TWO_PI]])

        def dens(p):
            return 1.0 / _as_rows(p, 3)[:, 1] ** 2

        return Chart(group, box, group.label,
                     lambda p: _sl2_from_coordinates(_as_rows(p, 3)),
                     iwasawa_coordinates, dens, dens,
                     singular_axes=((1, 0.0),))
    if kind == "so2":
        box = np.array([[0.0, TWO_PI]])

        def embed(p):
            theta = _as_rows(p, 1)[:, 0]
            ct, st = np.cos(theta), np.sin(theta)
            out = np.empty((theta.size, 2, 2))
            out[:, 0, 0] = ct
            out[:, 0, 1] = st
            out[:, 1, 0] = -st
            out[:, 1, 1] = ct
            return out

        def extract(r):
            r = np.asarray(r, float)
            return (np.arctan2(r[..., 0, 1], r[..., 0, 0]) % TWO_PI)[..., np.newaxis]

        return Chart(group, box, group.label, embed, extract,
                     _ones_density(1), _ones_density(1))
    if kind == "triangular_p":
        w = 16.0 if half_width is None else half_width
        box = np.array([[-w, w], [-w, w]])

        def embed(p):
            p = _as_rows(p, 2)
            out = np.zeros((p.shape[0], 2, 2))
            out[:, 0, 0] = p[:, 0]
            out[:, 0, 1] = p[:, 1]
            out[:, 1, 1] = 1.0 / p[:, 0]
            return out

        def extract(r):
            r = np.asarray(r, float)
            return np.stack([r[..., 0, 0], r[..., 0, 1]], axis=-1)

        def left_dens(p):
            return 1.0 / _as_rows(p, 2)[:, 0] ** 2

        return Chart(group, box, group.label, embed, extract,
                     left_dens, _ones_density(2), singular_axes=((0, 0.0),))
    raise ValueError(f"no default chart for {kind}")


def haar_density(group: GroupId, chart: Chart, params, side: str = "left") -> float:
    """Invariant density of ``chart`` at ``params`` (side: 'left'|'right')."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    p = _as_rows(params, chart.dim)
    if chart.singular_gap(p[0]) <= 0.0:
        raise SingularParameterError(f"{chart.name}: parameter on the singular locus")
    fn = chart.left_density if side == "left" else chart.right_density
    return float(fn(p)[0])
