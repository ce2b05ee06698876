"""Invariant integration on coset spaces, lattices and the hyperbolic plane.

The central identity implemented here splits an integral over a group into an
outer integral over cosets of an inner average along subgroup fibers:

    integral_G f  =  integral_{G/H} [ integral_H f(g h) dnu(h) ] dxi(gH)

It holds exactly when the modular function of G restricted to H equals the
modular function of H; :func:`existence_criterion` tests that hypothesis and
:func:`weil_check` tests the identity itself.  The shipped normalizations
(angle measure on the rotation fiber, dx dy / y^2 on the upper half plane,
counting measure on lattices) make the relating scalar exactly 1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .groups import (Chart, Element, GroupId, default_chart, gl, real_add,
                     iwasawa_coordinates, rep_multiply, sl2, so2, triangular_p)
from .invariance import CheckReport, default_quadrature, estimate_modular, \
    modular_closed_form, random_translates
from .measure import (IntegralResult, QuadratureSpec, SupportError, TestFunction,
                      _box_boundary_samples, _box_corners, bump, integrate,
                      integrate_evaluable, translate)

__all__ = [
    "SubgroupEmbedding",
    "QuotientSpec",
    "LatticeSpec",
    "PeriodizedFunction",
    "existence_criterion",
    "average_over_h",
    "weil_check",
    "rn_zn",
    "sl2_so2_quotient",
    "sl2_n_plane",
    "sl2_p_embedding",
    "quotient_instance",
    "QUOTIENT_INSTANCE_NAMES",
    "hyperbolic_plane_chart",
    "moebius_translate",
    "hyperbolic_invariance_check",
    "projective_angle_instability",
    "quotient_integrate_lattice",
    "periodize",
    "check_lattice_unimodular",
    "check_discrete_subgroup_criterion",
]

TWO_PI = 2.0 * math.pi


def _rot(theta: np.ndarray) -> np.ndarray:
    ct, st = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0] = ct
    out[..., 0, 1] = st
    out[..., 1, 0] = -st
    out[..., 1, 1] = ct
    return out


def _na(params: np.ndarray) -> np.ndarray:
    # shear/scale section of the upper half plane: (x, y) -> n(x) a(y)
    x, y = params[..., 0], params[..., 1]
    sy = np.sqrt(y)
    out = np.zeros(params.shape[:-1] + (2, 2))
    out[..., 0, 0] = sy
    out[..., 0, 1] = x / sy
    out[..., 1, 1] = 1.0 / sy
    return out


# ---------------------------------------------------------------------------
# subgroup embeddings and the existence criterion

@dataclass(frozen=True)
class SubgroupEmbedding:
    """A closed subgroup H of a catalog group, with a parameter sampler,
    the embedding into G, and the closed-form modular function of H."""

    name: str
    g_group: GroupId
    sample: Callable[[np.random.Generator, int], np.ndarray]
    embed: Callable[[np.ndarray], list[Element]]
    delta_h: Callable[[np.ndarray], np.ndarray]


def existence_criterion(g_group: GroupId, embedding: SubgroupEmbedding,
                        n_samples: int = 25, tol: float = 1e-9,
                        seed: int = 0) -> CheckReport:
    """Sample H and compare the modular function of G on the embedded
    elements with the modular function of H; the quotient carries an
    invariant measure exactly when they agree."""
    rng = np.random.Generator(np.random.Philox(key=[seed, 0xE1]))
    params = embedding.sample(rng, n_samples)
    elems = embedding.embed(params)
    dg = np.array([modular_closed_form(g_group, e) for e in elems])
    dh = np.asarray(embedding.delta_h(params), dtype=float)
    dev = float(np.max(np.abs(dg - dh) / np.maximum(dh, 1e-300)))
    return CheckReport.from_deviation(
        f"existence_criterion_{embedding.name}", dev, tol,
        estimate=float(dg[np.argmax(np.abs(dg - dh))]), reference=1.0,
        samples=n_samples, seed=seed, group=g_group.label,
        law="invariant measure on G/H iff Delta_G|_H = Delta_H")


# ---------------------------------------------------------------------------
# quotient instances

@dataclass(frozen=True)
class QuotientSpec:
    """A homogeneous-space instance: G, its chart, the embedded subgroup, a
    quotient parameter box with density, a section into G, and the fiber
    averaging rule."""

    name: str
    g_group: GroupId
    g_chart: Chart
    embedding: SubgroupEmbedding
    quotient_density: Callable | None = None
    section: Callable | None = None          # quotient params -> G reps
    outer_box: Callable | None = None        # f -> (qdim, 2) box
    outer_breaks: Callable | None = None     # (f, axis) -> breakpoints
    fiber_average: Callable | None = None    # (f, Q, rel_tol) -> values

    @property
    def has_quotient_chart(self) -> bool:
        return self.fiber_average is not None


class _FiberFunction:
    """Evaluable q -> integral_H f(s(q) h) dnu(h) on the quotient box."""

    def __init__(self, qs: QuotientSpec, f, rel_tol: float = 1e-10, weight=None):
        self.qs = qs
        self.f = f
        self.rel_tol = rel_tol
        self.weight = weight
        self.support_box = qs.outer_box(f)

    def axis_breakpoints(self, axis):
        return self.qs.outer_breaks(self.f, axis)

    def __call__(self, pts):
        p = np.asarray(pts, dtype=float)
        squeeze = p.ndim == 1
        if squeeze:
            p = p.reshape(1, -1)
        vals = self.qs.fiber_average(self.f, p, self.rel_tol)
        if self.weight is not None:
            vals = vals * self.weight(p)
        return float(vals[0]) if squeeze else vals


def average_over_h(qs: QuotientSpec, f, rel_tol: float = 1e-10) -> _FiberFunction:
    """The fiber average of f: continuous, compactly supported on the
    quotient box, and independent of the coset representative."""
    if not qs.has_quotient_chart:
        raise ValueError(f"instance {qs.name} ships without a quotient chart")
    return _FiberFunction(qs, f, rel_tol)


def weil_check(qs: QuotientSpec, f, q: QuadratureSpec | None = None,
               workers: int = 1) -> CheckReport:
    """Compare integral_G f with the iterated quotient/fiber integral.

    Both sides are computed by independent quadratures; with the shipped
    normalizations their ratio must be 1.  The report's estimate is the
    ratio, the deviation its distance from 1.
    """
    if not qs.has_quotient_chart:
        raise ValueError(f"instance {qs.name} ships without a quotient chart")
    q = q or default_quadrature(qs.g_chart.dim)
    lhs = integrate(qs.g_chart, f, "left", q, workers).value
    outer = _FiberFunction(qs, f, rel_tol=min(1e-10, q.rel_tol * 1e-2),
                           weight=qs.quotient_density)
    oq = replace(q, base_points_per_axis=max(q.base_points_per_axis, 6))
    rhs = integrate_evaluable(outer, oq, workers).value
    ratio = lhs / rhs
    tol = 1e-6 if qs.g_chart.dim <= 2 else 1e-4
    return CheckReport.from_deviation(
        f"weil_{qs.name}", abs(ratio - 1.0), tol, estimate=ratio, reference=1.0,
        samples=1, seed=q.seed, group=qs.g_group.label,
        law="int_G f = int_{G/H} int_H f(gh) dnu dxi")


def rn_zn(n: int) -> QuotientSpec:
    """R^n modulo the integer lattice, counting measure on the fibers."""
    group = real_add(n)
    chart = default_chart(group)

    def sample(rng, count):
        return rng.integers(-4, 5, size=(count, n)).astype(float)

    def embed(params):
        return [Element(group, row) for row in np.asarray(params, dtype=float)]

    emb = SubgroupEmbedding(f"r{n}_z{n}", group, sample, embed,
                            lambda p: np.ones(np.asarray(p).shape[0]))

    def outer_box(f):
        return np.tile([[0.0, 1.0]], (n, 1))

    def outer_breaks(f, axis):
        pts = {0.0, 1.0}
        for b in f.axis_breakpoints(axis):
            pts.add(float(b) % 1.0)
        return tuple(sorted(pts))

    def fiber_average(f, Q, rel_tol):
        box = np.asarray(f.support_box, dtype=float)
        los = np.floor(box[:, 0] - 1.0).astype(int)
        his = np.ceil(box[:, 1] + 1.0).astype(int)
        out = np.zeros(Q.shape[0])
        for k in itertools.product(*[range(lo, hi + 1) for lo, hi in zip(los, his)]):
            out += f(Q + np.asarray(k, dtype=float))
        return out

    return QuotientSpec(f"r{n}_z{n}", group, chart, emb,
                        quotient_density=lambda p: np.ones(p.shape[0]),
                        section=lambda p: np.asarray(p, dtype=float),
                        outer_box=outer_box, outer_breaks=outer_breaks,
                        fiber_average=fiber_average)


def sl2_so2_quotient() -> QuotientSpec:
    """SL(2,R) over its rotation subgroup: the upper half plane with density
    1/y^2, fiber measure dtheta on [0, 2*pi)."""
    group = sl2()
    chart = default_chart(group)

    def sample(rng, count):
        return rng.uniform(0.0, TWO_PI, size=(count, 1))

    def embed(params):
        return [Element(group, m) for m in _rot(np.asarray(params)[:, 0])]

    emb = SubgroupEmbedding("sl2_so2", group, sample, embed,
                            lambda p: np.ones(np.asarray(p).shape[0]))

    def outer_box(f):
        return np.asarray(f.support_box, dtype=float)[:2]

    def outer_breaks(f, axis):
        return f.axis_breakpoints(axis)

    def fiber_average(f, Q, rel_tol):
        lo, hi = np.asarray(f.support_box, dtype=float)[2]
        breaks = [b for b in (f.axis_breakpoints(2) if hasattr(f, "axis_breakpoints")
                              else (lo, hi)) if lo <= b <= hi]
        edges = np.array(sorted(set([lo, hi] + list(breaks))))
        sections = _na(Q)
        ref, wref = np.polynomial.legendre.leggauss(8)
        prev = None
        for level in range(9):
            e = edges
            for _ in range(level):
                e = np.sort(np.concatenate([e, (e[:-1] + e[1:]) / 2.0]))
            mid, half = (e[:-1] + e[1:]) / 2.0, (e[1:] - e[:-1]) / 2.0
            nodes = (mid[:, None] + half[:, None] * ref).ravel()
            w = (half[:, None] * wref).ravel()
            mats = np.einsum("mij,tjk->mtik", sections, _rot(nodes))
            params = iwasawa_coordinates(mats)
            vals = np.asarray(f(params.reshape(-1, 3))).reshape(Q.shape[0], -1)
            cur = vals @ w
            if prev is not None:
                scale = max(float(np.max(np.abs(cur))), 1e-300)
                if float(np.max(np.abs(cur - prev))) <= rel_tol * scale:
                    return cur
            prev = cur
        return prev

    return QuotientSpec("sl2_so2", group, chart, emb,
                        quotient_density=lambda p: 1.0 / p[:, 1] ** 2,
                        section=_na, outer_box=outer_box,
                        outer_breaks=outer_breaks, fiber_average=fiber_average)


def sl2_n_plane() -> QuotientSpec:
    """SL(2,R) over the unipotent upper-triangular line (the stabilizer of a
    punctured-plane point); ships with the existence criterion only."""
    group = sl2()
    chart = default_chart(group)

    def sample(rng, count):
        return rng.uniform(-5.0, 5.0, size=(count, 1))

    def embed(params):
        out = []
        for (y,) in np.asarray(params, dtype=float):
            out.append(Element(group, [[1.0, y], [0.0, 1.0]]))
        return out

    emb = SubgroupEmbedding("sl2_n", group, sample, embed,
                            lambda p: np.ones(np.asarray(p).shape[0]))
    return QuotientSpec("sl2_n_plane", group, chart, emb)


def sl2_p_embedding() -> SubgroupEmbedding:
    """The triangular subgroup inside SL(2,R); its modular function differs
    from the (trivial) one of SL(2,R), so the projective line carries no
    invariant measure."""
    group = sl2()

    def sample(rng, count):
        x = rng.uniform(0.5, 2.0, size=count) * np.where(rng.random(count) < 0.8, 1.0, -1.0)
        y = rng.uniform(-1.5, 1.5, size=count)
        return np.stack([x, y], axis=1)

    def embed(params):
        out = []
        for x, y in np.asarray(params, dtype=float):
            out.append(Element(group, [[x, y], [0.0, 1.0 / x]]))
        return out

    return SubgroupEmbedding("sl2_p", group, sample, embed,
                             lambda p: np.asarray(p, dtype=float)[:, 0] ** -2)


QUOTIENT_INSTANCE_NAMES = ("rn_zn", "sl2_so2", "sl2_p_negative", "sl2_n_plane")


def quotient_instance(name: str, n: int = 1):
    """Resolve a CLI instance identifier."""
    if name == "rn_zn":
        return rn_zn(n)
    if name == "sl2_so2":
        return sl2_so2_quotient()
    if name == "sl2_n_plane":
        return sl2_n_plane()
    if name == "sl2_p_negative":
        return sl2_p_embedding()
    raise KeyError(name)


# ---------------------------------------------------------------------------
# the hyperbolic plane as the realized quotient

def hyperbolic_plane_chart(x_half: float = 8.0, y_max: float = 10.0) -> Chart:
    """Upper half plane with the invariant density 1/y^2 (not a group chart)."""
    box = np.array([[-x_half, x_half], [1e-8, y_max]])

    def dens(p):
        p = np.asarray(p, dtype=float)
        if p.ndim == 1:
            p = p.reshape(1, 2)
        return 1.0 / p[:, 1] ** 2

    return Chart(None, box, "hyperbolic_plane", None, None, dens, dens,
                 singular_axes=((1, 0.0),))


def _moebius(mat: np.ndarray, pts: np.ndarray) -> np.ndarray:
    z = pts[:, 0] + 1j * pts[:, 1]
    w = (mat[0, 0] * z + mat[0, 1]) / (mat[1, 0] * z + mat[1, 1])
    return np.stack([w.real, w.imag], axis=1)


class _MoebiusTranslated:
    def __init__(self, base, mat_inv, support_box):
        self.base = base
        self.mat_inv = mat_inv
        self.support_box = support_box

    def axis_breakpoints(self, axis):
        return tuple(self.support_box[axis])

    def __call__(self, pts):
        p = np.asarray(pts, dtype=float)
        squeeze = p.ndim == 1
        if squeeze:
            p = p.reshape(1, 2)
        vals = self.base(_moebius(self.mat_inv, p))
        return float(vals[0]) if squeeze else vals


def moebius_translate(chart: Chart, f, g: Element) -> _MoebiusTranslated:
    """Pull back f on the upper half plane along the fractional-linear action
    of g in SL(2,R); same conservative bounding-box rule as translate()."""
    samples = np.vstack([_box_corners(f.support_box),
                         _box_boundary_samples(f.support_box, 100, 0x11AA)])
    image = _moebius(g.rep, samples)
    lo, hi = image.min(axis=0), image.max(axis=0)
    mid, half = (lo + hi) / 2.0, np.maximum((hi - lo) * 1.25 / 2.0, 1e-12)
    box = np.stack([mid - half, mid + half], axis=1)
    escaped = not chart.contains_box(box)
    box[:, 0] = np.maximum(box[:, 0], chart.box[:, 0])
    box[:, 1] = np.minimum(box[:, 1], chart.box[:, 1])
    from .groups import invert as _invert
    out = _MoebiusTranslated(f, _invert(g).rep, box)
    check = np.vstack([_box_corners(box), _box_boundary_samples(box, 100, 0x11AB)])
    if np.any(out(check) != 0.0):
        raise SupportError("translated support escapes the half-plane box"
                           if escaped else "support bound failed validation")
    return out


def hyperbolic_invariance_check(n_translates: int, f, q: QuadratureSpec | None = None,
                                tol: float = 1e-6, workers: int = 1) -> CheckReport:
    """dx dy / y^2 is invariant under the fractional-linear SL(2,R) action."""
    chart = hyperbolic_plane_chart()
    q = q or default_quadrature(2)
    base = integrate(chart, f, "left", q, workers).value
    rng = np.random.Generator(np.random.Philox(key=[q.seed, 0x42]))
    worst = 0.0
    for g in random_translates(sl2(), n_translates, rng):
        moved = moebius_translate(chart, f, g)
        val = integrate(chart, moved, "left", q, workers).value
        worst = max(worst, abs(val - base) / base)
    return CheckReport.from_deviation(
        "hyperbolic_invariance", worst, tol, estimate=base, reference=base,
        samples=n_translates, seed=q.seed, group="sl2",
        law="dx dy / y^2 invariant under z -> (az+b)/(cz+d)")


# ---------------------------------------------------------------------------
# the projective negative instance

class _ProjectiveIntegrand:
    """(phi, a, b) -> f(rot(phi) * p(a, b)) / a^2 over one sign component."""

    def __init__(self, f, box):
        self.f = f
        self.support_box = box

    def __call__(self, pts):
        p = np.asarray(pts, dtype=float)
        phi, a, b = p[:, 0], p[:, 1], p[:, 2]
        mats = np.zeros((p.shape[0], 2, 2))
        mats[:, 0, 0] = a
        mats[:, 0, 1] = b
        mats[:, 1, 1] = 1.0 / a
        prod = np.einsum("mij,mjk->mik", _rot(phi), mats)
        vals = np.asarray(self.f(iwasawa_coordinates(prod)))
        return vals / (a * a)


def _projective_functional(f, q: QuadratureSpec) -> float:
    # angle measure on the projective line as the (non-invariant) candidate
    # quotient measure; the inner triangular-group window is derived from the
    # norms of the support samples
    samples = np.vstack([_box_corners(f.support_box),
                         _box_boundary_samples(f.support_box, 100, 0x77)])
    from .groups import default_chart as _dc
    mats = _dc(sl2()).embed(samples)
    norms = np.linalg.norm(mats, ord=2, axis=(1, 2))
    big = 1.3 * float(np.max(norms))
    total = 0.0
    for sign in (1.0, -1.0):
        a_lo, a_hi = (1.0 / big, big) if sign > 0 else (-big, -1.0 / big)
        box = np.array([[0.0, math.pi], [a_lo, a_hi], [-big, big]])
        total += integrate_evaluable(_ProjectiveIntegrand(f, box), q).value
    return total


def projective_angle_instability(f, g: Element, q: QuadratureSpec | None = None) -> CheckReport:
    """Ratio of the group integral to the naive angle-measure functional,
    before and after translating f by g.  A ratio drift above 10% exhibits
    the obstruction: the projective line admits no invariant measure."""
    chart = default_chart(sl2())
    q = q or QuadratureSpec(base_points_per_axis=6, max_refinements=4, rel_tol=1e-3)
    r0 = integrate(chart, f, "left", q).value / _projective_functional(f, q)
    moved = translate(f, g, "left")
    r1 = integrate(chart, moved, "left", q).value / _projective_functional(moved, q)
    drift = abs(r1 / r0 - 1.0)
    return CheckReport.from_deviation(
        "projective_ratio_stability", drift, 0.1, estimate=r1 / r0, reference=1.0,
        samples=2, seed=q.seed, group="sl2",
        law="no invariant measure on the projective line")


# ---------------------------------------------------------------------------
# lattices and fundamental domains

@dataclass(frozen=True)
class LatticeSpec:
    """Full-rank lattice in R^n; generators are the columns of ``generators``
    and the fundamental parallelepiped is their image of [0,1)^n."""

    ambient: GroupId
    generators: np.ndarray

    def __post_init__(self):
        gens = np.array(self.generators, dtype=float)
        n = self.ambient.n
        if self.ambient.kind != "real_add":
            raise ValueError("lattices are supported in real_add(n)")
        if gens.shape != (n, n) or abs(np.linalg.det(gens)) < 1e-12:
            raise ValueError("generators must form an invertible n x n matrix")
        gens.flags.writeable = False
        object.__setattr__(self, "generators", gens)

    @property
    def covolume(self) -> float:
        return abs(float(np.linalg.det(self.generators)))

    def fundamental_box(self) -> np.ndarray:
        corners = self.generators @ _box_corners(np.tile([[0.0, 1.0]], (self.ambient.n, 1))).T
        return np.stack([corners.min(axis=1), corners.max(axis=1)], axis=1)


class PeriodizedFunction:
    """Lattice periodization of a compactly supported function: the finite
    sum of translates that can meet the fundamental parallelepiped."""

    def __init__(self, lattice: LatticeSpec, f):
        self.lattice = lattice
        self.f = f
        sup = np.asarray(f.support_box, dtype=float)
        fb = lattice.fundamental_box()
        inv = np.linalg.inv(lattice.generators)
        # interval arithmetic: A k must fit inside supp - F (componentwise)
        diff = np.stack([sup[:, 0] - fb[:, 1], sup[:, 1] - fb[:, 0]], axis=1)
        corners = inv @ _box_corners(diff).T
        los = np.floor(corners.min(axis=1)).astype(int)
        his = np.ceil(corners.max(axis=1)).astype(int)
        self.offsets = [self.lattice.generators @ np.array(k, dtype=float)
                        for k in itertools.product(*[range(lo, hi + 1)
                                                     for lo, hi in zip(los, his)])]

    def __call__(self, pts):
        p = np.asarray(pts, dtype=float)
        squeeze = p.ndim == 1
        if squeeze:
            p = p.reshape(1, -1)
        out = np.zeros(p.shape[0])
        for off in self.offsets:
            out += self.f(p + off)
        return float(out[0]) if squeeze else out


def periodize(lattice: LatticeSpec, f) -> PeriodizedFunction:
    return PeriodizedFunction(lattice, f)


def quotient_integrate_lattice(lattice: LatticeSpec, f,
                               q: QuadratureSpec | None = None,
                               workers: int = 1) -> IntegralResult:
    """Integrate a lattice-periodic function over the fundamental
    parallelepiped (Lebesgue measure on the ambient space)."""
    q = q or QuadratureSpec()
    gens = lattice.generators
    jac = lattice.covolume

    class _Pulled:
        support_box = np.tile([[0.0, 1.0]], (lattice.ambient.n, 1))

        @staticmethod
        def __call__(pts):
            t = np.asarray(pts, dtype=float)
            if t.ndim == 1:
                t = t.reshape(1, -1)
            return jac * np.asarray(f(t @ gens.T))

    return integrate_evaluable(_Pulled(), q, workers)


def check_lattice_unimodular(group: GroupId, lattice: LatticeSpec,
                             q: QuadratureSpec | None = None, tol: float = 5e-4,
                             workers: int = 1) -> CheckReport:
    """A group containing a lattice is unimodular: the modular estimates on
    the generators must be 1, as the closed form asserts."""
    chart = default_chart(group)
    q = q or default_quadrature(chart.dim)
    f = bump(chart, np.zeros(chart.dim), np.full(chart.dim, 1.2), exponent=4)
    worst = 0.0
    est = 1.0
    for col in range(lattice.generators.shape[1]):
        g = Element(group, lattice.generators[:, col])
        val = estimate_modular(group, chart, g, f, q, workers)
        ref = modular_closed_form(group, g)
        dev = max(abs(val - 1.0), abs(ref - 1.0))
        if dev > worst:
            worst, est = dev, val
    return CheckReport.from_deviation(
        "lattice_unimodular", worst, tol, estimate=est, reference=1.0,
        samples=lattice.generators.shape[1], seed=q.seed, group=group.label,
        law="a group containing a lattice is unimodular")


def check_discrete_subgroup_criterion(group: GroupId, elements: list[Element],
                                      tol: float = 1e-9) -> CheckReport:
    """Quotient-measure criterion for a discrete subgroup (counting measure,
    so its modular function is identically 1): Delta_G must be 1 on it."""
    devs = [abs(modular_closed_form(group, g) - 1.0) for g in elements]
    worst = max(devs)
    return CheckReport.from_deviation(
        "discrete_subgroup_criterion", worst, tol,
        estimate=1.0 + worst, reference=1.0, samples=len(elements), seed=0,
        group=group.label,
        law="invariant measure on G/Gamma iff Delta_G|_Gamma = 1")
