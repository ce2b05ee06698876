"""Property checkers: translation invariance, modular functions, conversions.

Every check returns a :class:`CheckReport` whose ``passed`` flag is exactly
``max_rel_deviation <= tolerance``.  Randomness (translates, sample points)
is drawn from counter-based streams derived from the quadrature seed, so a
report is reproducible from its own metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import groups as _g
from .groups import Chart, Element, GroupId, identity, invert, multiply
from .measure import (IntegralResult, QuadratureSpec, SupportError, chart_mass,
                      integrate, translate)

__all__ = [
    "CheckReport",
    "default_quadrature",
    "random_translates",
    "standard_bumps",
    "check_left_invariance",
    "check_right_invariance",
    "estimate_modular",
    "modular_closed_form",
    "det_ad",
    "right_from_left",
    "check_compact_finiteness",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one property check."""

    name: str
    estimate: float
    reference: float | None
    max_rel_deviation: float
    samples: int
    seed: int
    tolerance: float
    passed: bool
    group: str = ""
    law: str = ""
    exact: str | None = None   # exact rational estimate, when one exists

    def __post_init__(self):
        if self.max_rel_deviation < 0.0 or self.tolerance <= 0.0:
            raise ValueError("deviation must be >= 0 and tolerance > 0")
        if self.passed != (self.max_rel_deviation <= self.tolerance):
            raise ValueError("passed flag inconsistent with deviation/tolerance")

    @classmethod
    def from_deviation(cls, name, deviation, tolerance, *, estimate=float("nan"),
                       reference=None, samples=0, seed=0, group="", law="", exact=None):
        return cls(name, float(estimate), reference, float(deviation), samples,
                   seed, tolerance, float(deviation) <= tolerance, group, law, exact)

    def record(self) -> dict:
        est = self.exact if self.exact is not None else self.estimate
        return {
            "name": self.name,
            "group": self.group,
            "estimate": est,
            "reference": self.reference,
            "deviation": self.max_rel_deviation,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "seed": self.seed,
            "law": self.law,
        }


def default_quadrature(dim: int, seed: int = 0) -> QuadratureSpec:
    """Cost/accuracy ladder: tight tolerances on low-dimensional charts."""
    if dim <= 2:
        return QuadratureSpec(base_points_per_axis=8, max_refinements=10,
                              rel_tol=1e-9, seed=seed)
    if dim == 3:
        return QuadratureSpec(base_points_per_axis=6, max_refinements=6,
                              rel_tol=2e-6, seed=seed)
    return QuadratureSpec(base_points_per_axis=5, max_refinements=5,
                          rel_tol=8e-6, seed=seed)


# ---------------------------------------------------------------------------
# translate sampling windows (kept compact so translated supports stay
# inside the default chart boxes)

def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, tag]))


def random_translates(group: GroupId, count: int, rng: np.random.Generator) -> list[Element]:
    kind = group.kind
    out = []
    for _ in range(count):
        if kind == "real_add":
            rep = rng.uniform(-3.0, 3.0, group.n)
            out.append(Element(group, rep))
        elif kind == "real_mult":
            x = rng.uniform(0.5, 2.0) * (1.0 if rng.random() < 0.75 else -1.0)
            out.append(Element(group, [[x]]))
        elif kind == "gl":
            rep = np.eye(group.n) + rng.uniform(-0.1, 0.1, (group.n, group.n))
            out.append(Element(group, rep))
        elif kind == "sl2":
            chart = _g.default_chart(group)
            p = [rng.uniform(-0.3, 0.3), rng.uniform(0.8, 1.25), rng.uniform(-0.3, 0.3) % TWO_PI]
            out.append(chart.to_element(p))
        elif kind == "so2":
            theta = rng.uniform(-0.8, 0.8) % TWO_PI
            out.append(_g.default_chart(group).to_element([theta]))
        elif kind == "triangular_p":
            x = rng.uniform(0.75, 1.5) * (1.0 if rng.random() < 0.8 else -1.0)
            y = rng.uniform(-0.7, 0.7)
            out.append(_g.default_chart(group).to_element([x, y]))
        else:
            raise ValueError(kind)
    return out


# fixed bump families per group: (center, radius, exponent); the windows are
# sized so that translates drawn from random_translates stay inside the
# default chart boxes, and gl/sl2 use high exponents to keep composite
# quadrature cheap on translated (panel-misaligned) supports
_BUMP_TABLE = {
    "real_add": ([0.0], [1.2], 3), "real_add#2": ([0.8], [0.9], 4),
    "real_add#3": ([-0.6], [1.5], 3),
    "real_mult": ([2.0], [1.0], 3), "real_mult#2": ([1.4], [0.7], 4),
    "real_mult#3": ([3.0], [1.3], 3),
    "gl": ([1.0, 0.0, 0.0, 1.0], [0.30, 0.30, 0.30, 0.30], 7),
    "gl#2": ([1.05, 0.04, -0.04, 0.95], [0.26, 0.26, 0.26, 0.26], 7),
    "gl#3": ([0.95, -0.05, 0.05, 1.05], [0.34, 0.34, 0.34, 0.34], 8),
    "sl2": ([0.0, 1.5, 3.0], [0.7, 0.5, 0.9], 5),
    "sl2#2": ([0.3, 1.3, 2.6], [0.6, 0.45, 0.8], 5),
    "sl2#3": ([-0.35, 1.8, 3.5], [0.8, 0.6, 1.0], 6),
    "so2": ([2.4], [1.1], 3), "so2#2": ([3.0], [0.8], 4), "so2#3": ([3.4], [1.3], 3),
    "triangular_p": ([1.4, 0.0], [0.5, 0.9], 4),
    "triangular_p#2": ([1.2, -0.3], [0.4, 0.7], 3),
    "triangular_p#3": ([1.8, 0.4], [0.6, 1.0], 4),
}


def standard_bumps(group: GroupId, chart: Chart, count: int = 3,
                   clamped: bool = False) -> list:
    """Fixed family of test functions used by the default suites."""
    from .measure import bump, urysohn_bump
    out = []
    for i in range(1, count + 1):
        key = group.kind if i == 1 else f"{group.kind}#{i}"
        center, radius, exponent = _BUMP_TABLE[key]
        center = np.array(center * group.n if group.kind == "real_add" else center)
        radius = np.array(radius * group.n if group.kind == "real_add" else radius)
        if clamped:
            inner = np.stack([center - 0.45 * radius, center + 0.45 * radius], axis=1)
            outer = np.stack([center - radius, center + radius], axis=1)
            out.append(urysohn_bump(chart, inner, outer, exponent=exponent))
        else:
            out.append(bump(chart, center, radius, exponent=exponent))
    return out


def _invariance_check(group, chart, f, n_translates, tol, q, action, density_side,
                      name, law, workers=1):
    q = q or default_quadrature(chart.dim)
    base = integrate(chart, f, density_side, q, workers).value
    if base <= 0.0:
        raise ValueError("base integral must be positive for a relative check")
    rng = _stream(q.seed, 0xA5 if action == "left" else 0xB6)
    worst = 0.0
    worst_val = base
    for g in random_translates(group, n_translates, rng):
        moved = translate(f, g, action)
        val = integrate(chart, moved, density_side, q, workers).value
        dev = abs(val - base) / base
        if dev > worst:
            worst, worst_val = dev, val
    return CheckReport.from_deviation(
        name, worst, tol, estimate=worst_val, reference=base,
        samples=n_translates, seed=q.seed, group=group.label, law=law)


def check_left_invariance(group: GroupId, chart: Chart, f, n_translates: int = 10,
                          tol: float = 1e-6, q: QuadratureSpec | None = None,
                          workers: int = 1) -> CheckReport:
    """Compare the left integral of f with that of its left translates."""
    return _invariance_check(group, chart, f, n_translates, tol, q,
                             "left", "left", "left_invariance",
                             "mu(gE) = mu(E)", workers)


def check_right_invariance(group: GroupId, chart: Chart, f, n_translates: int = 10,
                           tol: float = 1e-6, q: QuadratureSpec | None = None,
                           density_side: str = "right", workers: int = 1) -> CheckReport:
    """Mirror of the left check; ``density_side='left'`` runs the deliberate
    mismatch used as a negative control on non-unimodular groups."""
    name = "right_invariance" if density_side == "right" else "right_invariance_left_density"
    return _invariance_check(group, chart, f, n_translates, tol, q,
                             "right", density_side, name,
                             "mu(Eg) = mu(E)", workers)


# ---------------------------------------------------------------------------
# modular function

def estimate_modular(group: GroupId, chart: Chart, g: Element, f,
                     q: QuadratureSpec | None = None, workers: int = 1) -> float:
    """Operational modular value: integral of x -> f(x g^-1) over integral of f,
    both against the left density."""
    q = q or default_quadrature(chart.dim)
    lam = integrate(chart, f, "left", q, workers).value
    if lam <= 1e-300:
        raise ValueError("estimate_modular needs a test function with positive integral")
    moved = translate(f, invert(g), "right")
    num = integrate(chart, moved, "left", q, workers).value
    return num / lam


def modular_closed_form(group: GroupId, g: Element) -> float:
    """Closed-form modular function of the catalog groups."""
    if group.kind == "triangular_p":
        return float(g.rep[0, 0]) ** -2
    return 1.0


_LIE_BASES = {
    "sl2": ([[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]),
    "triangular_p": ([[1.0, 0.0], [0.0, -1.0]], [[0.0, 1.0], [0.0, 0.0]]),
    "so2": ([[0.0, 1.0], [-1.0, 0.0]],),
    "real_mult": ([[1.0]],),
}


def det_ad(group: GroupId, g: Element) -> float:
    """|det| of conjugation X -> g X g^-1 on a fixed tangent-space basis."""
    kind = group.kind
    if kind == "real_add":
        return 1.0
    if kind == "gl":
        n = group.n
        basis = [np.eye(n)[:, [i]] @ np.eye(n)[[j], :] for i in range(n) for j in range(n)]
    else:
        basis = [np.array(b) for b in _LIE_BASES[kind]]
    ginv = invert(g).rep
    cols = np.stack([(g.rep @ b @ ginv).ravel() for b in basis], axis=1)
    span = np.stack([b.ravel() for b in basis], axis=1)
    coeff, *_ = np.linalg.lstsq(span, cols, rcond=None)
    return abs(float(np.linalg.det(coeff)))


def right_from_left(group: GroupId, chart: Chart, f,
                    q: QuadratureSpec | None = None, workers: int = 1) -> IntegralResult:
    """Right integral computed from the left one via the modular weight
    Delta(x^-1) = 1/Delta(x)."""
    q = q or default_quadrature(chart.dim)

    class _Weighted:
        support_box = f.support_box

        @staticmethod
        def axis_breakpoints(axis):
            return f.axis_breakpoints(axis)

        @staticmethod
        def __call__(pts):
            vals = np.asarray(f(pts), dtype=float)
            if group.kind == "triangular_p":
                pts2 = np.asarray(pts, dtype=float)
                if pts2.ndim == 1:
                    pts2 = pts2.reshape(1, -1)
                vals = vals * pts2[:, 0] ** 2       # 1/Delta(x, y) = x^2
            return vals

    return integrate(chart, _Weighted(), "left", q, workers)


# ---------------------------------------------------------------------------
# compact <=> finite mass

def _growth_boxes(group: GroupId, scale: float) -> np.ndarray:
    kind = group.kind
    if kind == "real_add":
        return np.tile([[-scale, scale]], (group.n, 1))
    if kind == "real_mult":
        return np.array([[1.0 / scale, scale]])
    if kind == "sl2":
        return np.array([[-scale, scale], [1.0 / scale, scale], [0.0, TWO_PI]])
    if kind == "triangular_p":
        return np.array([[1.0 / scale, scale], [-scale, scale]])
    raise ValueError(f"no mass growth family for {kind}")


def _gl2_shell_masses(scales, shell) -> list[float]:
    # mass of [-s, s]^4 minus the fixed |det| < shell region equals, after
    # rescaling, the mass of the unit box minus a shell shrinking like s^-2;
    # evaluating every scale on one shared grid makes the estimates monotone
    # by construction (a larger scale only adds nonnegative terms).
    nodes, weights = np.polynomial.legendre.leggauss(8)
    edges = np.linspace(-1.0, 1.0, 9)
    mid, half = (edges[:-1] + edges[1:]) / 2.0, (edges[1:] - edges[:-1]) / 2.0
    xs = (mid[:, None] + half[:, None] * nodes).ravel()
    ws = (half[:, None] * weights).ravel()
    w_bcd = np.multiply.outer(np.multiply.outer(ws, ws), ws)
    bc = np.multiply.outer(xs, xs)[:, :, None]
    taus = [shell / (s * s) for s in scales]
    per_scale = [0.0 for _ in scales]
    for i0 in range(xs.size):          # chunk over the first entry axis
        det = xs[i0] * xs[None, None, :] - bc
        absdet = np.abs(det)
        with np.errstate(divide="ignore"):
            integrand = ws[i0] * w_bcd / (det * det)
        for k, tau in enumerate(taus):
            per_scale[k] += float(np.sum(integrand[absdet >= tau]))
    return per_scale


def check_compact_finiteness(group: GroupId, chart: Chart, box_scales,
                             q: QuadratureSpec | None = None, threshold: float = 1e3,
                             tol: float = 1e-8, workers: int = 1) -> CheckReport:
    """Finite total mass for the compact catalog entry, unbounded growth for
    the rest.

    so2: the full-chart mass must equal 2*pi within ``tol``.  Other groups:
    masses of the group-specific box family at ``box_scales`` must be
    strictly increasing with the largest exceeding ``threshold``.
    """
    q = q or QuadratureSpec()
    scales = list(box_scales)
    if group.kind == "so2":
        mass = chart_mass(chart, chart.box, "left", q, workers).value
        dev = abs(mass - TWO_PI) / TWO_PI
        return CheckReport.from_deviation(
            "compact_total_mass", dev, tol, estimate=mass, reference=TWO_PI,
            samples=1, seed=q.seed, group=group.label,
            law="mass(G) finite iff G compact")
    if group.kind == "gl":
        if group.n != 2:
            raise ValueError("mass growth family implemented for gl(2) only")
        masses = _gl2_shell_masses(scales, chart.det_shell)
    else:
        masses = [chart_mass(chart, _growth_boxes(group, s), "left", q, workers).value
                  for s in scales]
    increasing = all(b > a for a, b in zip(masses, masses[1:]))
    passed = increasing and masses[-1] > threshold
    return CheckReport.from_deviation(
        "unbounded_mass_growth", 0.0 if passed else 1.0, 0.5,
        estimate=masses[-1], reference=None, samples=len(scales), seed=q.seed,
        group=group.label, law="mass(G) finite iff G compact")
