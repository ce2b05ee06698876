"""Compactly supported test functions and invariant numerical integration.

Test functions are polynomial bumps on chart parameters, so their support is
exactly a box and domain truncation introduces no tail error.  Integration is
composite tensor Gauss-Legendre with dyadic panel refinement; panel edges are
aligned with the per-axis breakpoints of the integrand whenever those are
known, which restores spectral convergence for piecewise-polynomial bumps.

Determinism contract: for a fixed :class:`QuadratureSpec`, both
:func:`integrate` and :func:`mc_integrate` return bit-identical values
regardless of the worker count.  Evaluation is chunked into fixed-size blocks
combined by a fixed-shape pairwise reduction, and the Monte Carlo sampler is
a counter-based generator keyed by (seed, block index).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .groups import Chart, Element, MembershipError, invert, rep_invert, rep_multiply

__all__ = [
    "SINGULAR_MARGIN",
    "QuadratureSpec",
    "IntegralResult",
    "SupportError",
    "QuadratureError",
    "TestFunction",
    "TranslatedFunction",
    "LinearCombination",
    "bump",
    "urysohn_bump",
    "translate",
    "integrate",
    "integrate_evaluable",
    "mc_integrate",
    "chart_mass",
    "pairwise_sum",
]

#: minimum clearance (chart units) between a support box and a singular locus
SINGULAR_MARGIN = 1e-3

_EVAL_CHUNK = 1 << 16
_BOUNDARY_SAMPLES = 100
_BOX_SEED = 0x5EED_B0C5  # fixed stream for support-box sampling


class SupportError(ValueError):
    """Support box violates containment, margin or translation bounds."""


class QuadratureError(RuntimeError):
    """Refinement did not converge; carries the last estimate."""

    def __init__(self, message, last_value=None, evaluations=0):
        super().__init__(message)
        self.last_value = last_value
        self.evaluations = evaluations


def pairwise_sum(values) -> float:
    """Sum with a fixed binary-tree reduction order.

    The tree shape depends only on the length of ``values``, never on how the
    values were produced, which keeps results reproducible under chunked or
    parallel evaluation.
    """
    v = np.asarray(values, dtype=float).ravel()
    while v.size > 1:
        if v.size % 2:
            head, tail = v[:-1], v[-1:]
            v = np.concatenate([head.reshape(-1, 2).sum(axis=1), tail])
        else:
            v = v.reshape(-1, 2).sum(axis=1)
    return float(v[0]) if v.size else 0.0


@dataclass(frozen=True)
class QuadratureSpec:
    """Knobs of the deterministic integration drivers."""

    base_points_per_axis: int = 8
    max_refinements: int = 8
    rel_tol: float = 1e-8
    mc_samples: int = 200_000
    seed: int = 0

    def __post_init__(self):
        if self.base_points_per_axis < 4:
            raise ValueError("base_points_per_axis must be >= 4")
        if self.max_refinements < 1 or self.mc_samples < 1:
            raise ValueError("counts must be positive")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must lie in (0, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int

    def __post_init__(self):
        if self.error_estimate < 0.0:
            raise ValueError("error_estimate must be nonnegative")


def _as_box(box) -> np.ndarray:
    b = np.array(box, dtype=float)
    if b.ndim == 1:
        b = b.reshape(1, 2)
    if b.ndim != 2 or b.shape[1] != 2:
        raise ValueError("a box is a (dim, 2) array")
    return b


def _rows(pts, dim):
    p = np.asarray(pts, dtype=float)
    squeeze = p.ndim == 1
    if squeeze:
        p = p.reshape(1, dim)
    return p, squeeze


def _ipow(base: np.ndarray, k: int) -> np.ndarray:
    # integer power by squaring; much cheaper than float ** on large arrays
    result = None
    b = base
    while k:
        if k & 1:
            result = b.copy() if result is None else result * b
        k >>= 1
        if k:
            b = b * b
    return result


# ---------------------------------------------------------------------------
# test functions

@dataclass(frozen=True)
class TestFunction:
    """Polynomial bump on chart parameters with exactly boxed support.

    With ``plateau`` unset the profile on each axis is
    ``max(0, 1 - ((p - c)/r)^2)**exponent``; with ``plateau`` set the function
    is identically 1 on the plateau box and rolls off polynomially to the
    support boundary.  Values are always in [0, coefficient].
    """

    chart: Chart
    center: np.ndarray
    radius: np.ndarray
    exponent: int
    coefficient: float
    support_box: np.ndarray
    plateau: np.ndarray | None = None

    def __post_init__(self):
        for name in ("center", "radius", "support_box", "plateau"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.array(val, dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.support_box.shape[0]

    def axis_breakpoints(self, axis: int) -> tuple[float, ...]:
        lo, hi = self.support_box[axis]
        if self.plateau is None:
            return (lo, hi)
        klo, khi = self.plateau[axis]
        return (lo, klo, khi, hi)

    def __call__(self, pts):
        p, squeeze = _rows(pts, self.dim)
        finite = np.all(np.isfinite(p), axis=1)
        p = np.where(finite[:, None], p, 0.0)
        if self.plateau is None:
            u = (p - self.center) / self.radius
            prof = _ipow(np.maximum(0.0, 1.0 - u * u), self.exponent)
            out = self.coefficient * prof.prod(axis=1)
        else:
            out = np.full(p.shape[0], self.coefficient)
            for a in range(self.dim):
                lo, hi = self.support_box[a]
                klo, khi = self.plateau[a]
                x = p[:, a]
                t = np.ones_like(x)
                low = x < klo
                if np.any(low):
                    s = (klo - x[low]) / (klo - lo)
                    t[low] = _ipow(np.maximum(0.0, 1.0 - s * s), self.exponent)
                high = x > khi
                if np.any(high):
                    s = (x[high] - khi) / (hi - khi)
                    t[high] = _ipow(np.maximum(0.0, 1.0 - s * s), self.exponent)
                out *= t
        out = np.where(finite, out, 0.0)
        return float(out[0]) if squeeze else out


def _check_support(chart: Chart, box: np.ndarray) -> None:
    if not chart.contains_box(box):
        raise SupportError(f"support box is not inside the {chart.name} chart box")
    if chart.singular_gap(box) < SINGULAR_MARGIN:
        raise SupportError(
            f"support box comes within {SINGULAR_MARGIN} of the singular locus")


def bump(chart: Chart, center, radius, exponent: int = 3,
         coefficient: float = 1.0) -> TestFunction:
    """Smooth polynomial bump centered at ``center`` with per-axis ``radius``."""
    center = np.asarray(center, dtype=float).reshape(chart.dim)
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (chart.dim,)).copy()
    if np.any(radius <= 0.0):
        raise ValueError("radius must be positive on every axis")
    if exponent < 2:
        raise ValueError("exponent must be >= 2")
    if coefficient <= 0.0:
        raise ValueError("coefficient must be positive")
    support = np.stack([center - radius, center + radius], axis=1)
    _check_support(chart, support)
    return TestFunction(chart, center, radius, exponent, coefficient, support)


def urysohn_bump(chart: Chart, inner_box, outer_box, exponent: int = 3,
                 clamped: bool = True) -> TestFunction:
    """Bump pinched between an inner and an outer box.

    The clamped variant is identically 1 on the inner box and vanishes
    outside the outer box (the separating-function contract); the unclamped
    variant is the smooth bump spanning the outer box, merely positive on the
    inner one.  Containment must be strict on every axis.
    """
    inner = _as_box(inner_box)
    outer = _as_box(outer_box)
    if inner.shape != (chart.dim, 2) or outer.shape != (chart.dim, 2):
        raise ValueError("boxes must match the chart dimension")
    if np.any(inner[:, 0] >= inner[:, 1]):
        raise SupportError("inner box is degenerate")
    if np.any(inner[:, 0] <= outer[:, 0]) or np.any(inner[:, 1] >= outer[:, 1]):
        raise SupportError("inner box must be strictly inside the outer box")
    _check_support(chart, outer)
    if chart.singular_gap(inner) < SINGULAR_MARGIN:
        raise SupportError("inner box touches the singular locus")
    center = inner.mean(axis=1)
    radius = (outer[:, 1] - outer[:, 0]) / 2.0
    if exponent < 2:
        raise ValueError("exponent must be >= 2")
    if clamped:
        return TestFunction(chart, center, radius, exponent, 1.0, outer, plateau=inner)
    c = outer.mean(axis=1)
    return TestFunction(chart, c, radius, exponent, 1.0, outer)


@dataclass(frozen=True)
class LinearCombination:
    """Nonnegative-coefficient combination of test functions on one chart."""

    terms: tuple
    support_box: np.ndarray

    @classmethod
    def of(cls, *terms):
        terms = tuple((float(a), f) for a, f in terms)
        boxes = np.stack([f.support_box for _, f in terms])
        box = np.stack([boxes[:, :, 0].min(axis=0), boxes[:, :, 1].max(axis=0)], axis=1)
        return cls(terms, box)

    @property
    def dim(self):
        return self.support_box.shape[0]

    def axis_breakpoints(self, axis):
        pts = set()
        for _, f in self.terms:
            pts.update(f.axis_breakpoints(axis))
        return tuple(sorted(pts))

    def __call__(self, pts):
        p, squeeze = _rows(pts, self.dim)
        out = np.zeros(p.shape[0])
        for a, f in self.terms:
            out += a * f(p)
        return float(out[0]) if squeeze else out


# ---------------------------------------------------------------------------
# translation under the regular representations

def _box_corners(box: np.ndarray) -> np.ndarray:
    dim = box.shape[0]
    idx = np.indices((2,) * dim).reshape(dim, -1).T
    return box[np.arange(dim), idx]


def _box_boundary_samples(box: np.ndarray, count: int, seed: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=[seed, box.shape[0]]))
    dim = box.shape[0]
    pts = rng.random((count, dim)) * (box[:, 1] - box[:, 0]) + box[:, 0]
    face_axis = rng.integers(0, dim, size=count)
    face_side = rng.integers(0, 2, size=count)
    pts[np.arange(count), face_axis] = box[face_axis, face_side]
    return pts


@dataclass(frozen=True)
class TranslatedFunction:
    """A test function pre/post-composed with a fixed group translation."""

    chart: Chart
    base: TestFunction
    action: str
    _mover: np.ndarray      # representation applied during evaluation
    support_box: np.ndarray

    @property
    def dim(self):
        return self.support_box.shape[0]

    def axis_breakpoints(self, axis):
        return tuple(self.support_box[axis])

    def __call__(self, pts):
        p, squeeze = _rows(pts, self.dim)
        reps = self.chart.embed(p)
        if self.action == "left":
            moved = rep_multiply(self.chart.group, self._mover, reps)
        else:
            moved = rep_multiply(self.chart.group, reps, self._mover)
        with np.errstate(all="ignore"):
            out = self.base(self.chart.extract(moved))
        return float(out) if squeeze else out


def translate(f: TestFunction, g: Element, action: str = "left") -> TranslatedFunction:
    """Translate ``f`` by ``g`` under a regular representation.

    ``action='left'`` builds p -> f(g^-1 x(p)) (the left-regular action, whose
    support is the g-translate of supp f); ``action='right'`` builds
    p -> f(x(p) g).  The returned support box is conservative: the images of
    the 2^dim support corners plus 100 boundary samples, inflated by 25% and
    clipped to the chart box.  The function must vanish on the boundary of
    that box; if it does not, the translated support escaped the chart.
    """
    chart = f.chart
    if action not in ("left", "right"):
        raise ValueError("action must be 'left' or 'right'")
    if g.group != chart.group:
        raise MembershipError("translation element belongs to a different group")
    if action == "left":
        mover = rep_invert(chart.group, g.rep)   # evaluation uses g^-1 on the left
        push = lambda reps: rep_multiply(chart.group, g.rep, reps)
    else:
        g_inv = invert(g).rep
        mover = g.rep                            # evaluation uses g on the right
        push = lambda reps: rep_multiply(chart.group, reps, g_inv)

    samples = np.vstack([
        _box_corners(f.support_box),
        _box_boundary_samples(f.support_box, _BOUNDARY_SAMPLES, _BOX_SEED),
    ])
    with np.errstate(all="ignore"):
        image = chart.extract(push(chart.embed(samples)))
    if not np.all(np.isfinite(image)):
        raise SupportError("translated support could not be mapped through the chart")
    lo, hi = image.min(axis=0), image.max(axis=0)
    mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    half = np.maximum(half * 1.25, 1e-12)
    box = np.stack([mid - half, mid + half], axis=1)
    escaped = not chart.contains_box(box)
    box[:, 0] = np.maximum(box[:, 0], chart.box[:, 0])
    box[:, 1] = np.minimum(box[:, 1], chart.box[:, 1])

    out = TranslatedFunction(chart, f, action, mover, box)
    check = _box_boundary_samples(box, _BOUNDARY_SAMPLES, _BOX_SEED + 1)
    check = np.vstack([_box_corners(box), check])
    if np.any(out(check) != 0.0):
        msg = ("translated support escapes the chart box"
               if escaped else "translated support bound failed validation")
        raise SupportError(msg)
    return out


# ---------------------------------------------------------------------------
# composite tensor Gauss-Legendre

def _geometric_breaks(lo: float, hi: float, value: float) -> list[float]:
    # graded panels toward an axis singularity at `value`; the box itself
    # must already be clear of it
    out = []
    if value <= lo:
        d = lo - value
        if d > 0.0 and hi - value > 8.0 * d:
            p = value + 2.0 * d
            while p < hi - 1e-12 * max(1.0, abs(hi)):
                out.append(p)
                p = value + 2.0 * (p - value)
    elif value >= hi:
        d = value - hi
        if d > 0.0 and value - lo > 8.0 * d:
            p = value - 2.0 * d
            while p > lo + 1e-12 * max(1.0, abs(lo)):
                out.append(p)
                p = value - 2.0 * (value - p)
    return out


def _axis_breaks(chart: Chart | None, box: np.ndarray, f) -> list[np.ndarray]:
    axes = []
    for a in range(box.shape[0]):
        lo, hi = box[a]
        pts = {lo, hi}
        if f is not None and hasattr(f, "axis_breakpoints"):
            for p in f.axis_breakpoints(a):
                if lo < p < hi:
                    pts.add(float(p))
        if chart is not None:
            for axis, value in chart.singular_axes:
                if axis == a:
                    pts.update(_geometric_breaks(lo, hi, value))
        axes.append(np.array(sorted(pts)))
    return axes


class _TensorGrid:
    """Lazily enumerated tensor-product Gauss-Legendre grid."""

    def __init__(self, axis_breaks, level: int, points: int):
        self.nodes = []
        self.weights = []
        ref, wref = np.polynomial.legendre.leggauss(points)
        for breaks in axis_breaks:
            edges = breaks
            for _ in range(level):
                edges = np.sort(np.concatenate([edges, (edges[:-1] + edges[1:]) / 2.0]))
            mid = (edges[:-1] + edges[1:]) / 2.0
            half = (edges[1:] - edges[:-1]) / 2.0
            self.nodes.append((mid[:, None] + half[:, None] * ref).ravel())
            self.weights.append((half[:, None] * wref).ravel())
        self.shape = tuple(n.size for n in self.nodes)
        self.size = int(np.prod(self.shape))

    def block(self, start: int, stop: int):
        idx = np.unravel_index(np.arange(start, stop), self.shape)
        dim = len(self.nodes)
        pts = np.empty((stop - start, dim))
        w = np.ones(stop - start)
        for a in range(dim):
            pts[:, a] = self.nodes[a][idx[a]]
            w *= self.weights[a][idx[a]]
        return pts, w


def _masked_integrand(f, density):
    def evaluate(pts, w):
        fv = np.asarray(f(pts), dtype=float)
        vals = w * fv
        if density is not None:
            mask = fv != 0.0
            if np.any(mask):
                vals[mask] *= density(pts[mask])
            vals[~mask] = 0.0
        return pairwise_sum(vals)
    return evaluate


def _grid_sum(grid: _TensorGrid, evaluate, workers: int) -> float:
    starts = range(0, grid.size, _EVAL_CHUNK)

    def one(start):
        pts, w = grid.block(start, min(start + _EVAL_CHUNK, grid.size))
        return evaluate(pts, w)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(one, starts))
    else:
        partial = [one(s) for s in starts]
    return pairwise_sum(partial)


def _refine(chart, box, f, density, q: QuadratureSpec, workers: int) -> IntegralResult:
    axis_breaks = _axis_breaks(chart, box, f)
    evaluate = _masked_integrand(f, density)
    prev = None
    evaluations = 0
    for level in range(q.max_refinements + 1):
        grid = _TensorGrid(axis_breaks, level, q.base_points_per_axis)
        total = _grid_sum(grid, evaluate, workers)
        evaluations += grid.size
        if prev is not None:
            scale = max(abs(total), abs(prev))
            if scale == 0.0 or abs(total - prev) <= q.rel_tol * scale:
                return IntegralResult(total, abs(total - prev), evaluations)
        prev = total
    raise QuadratureError(
        f"quadrature did not converge within {q.max_refinements} refinements",
        last_value=prev, evaluations=evaluations)


def integrate(chart: Chart, f, side: str = "left",
              q: QuadratureSpec | None = None, workers: int = 1) -> IntegralResult:
    """Integrate ``f`` against a chart density over the support of ``f``.

    Parameters
    ----------
    chart : Chart
        Supplies the invariant density and the admissible box.
    f : evaluable
        Needs ``support_box``, vectorized ``__call__`` and (optionally)
        ``axis_breakpoints``; test functions, translates and combinations
        all qualify.
    side : 'left' | 'right'
        Which invariant density to weight with.
    q : QuadratureSpec
        Refinement stops when two successive dyadic levels agree to
        ``q.rel_tol`` relatively; exceeding ``q.max_refinements`` raises
        :class:`QuadratureError` rather than returning silently.

    Returns
    -------
    IntegralResult
        Value, the last inter-level difference, and evaluation count.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    q = q or QuadratureSpec()
    box = _as_box(f.support_box)
    if not chart.contains_box(box):
        raise SupportError("support box is not inside the chart box")
    density = chart.left_density if side == "left" else chart.right_density
    return _refine(chart, box, f, density, q, workers)


def integrate_evaluable(f, q: QuadratureSpec | None = None,
                        workers: int = 1) -> IntegralResult:
    """Integrate a bare evaluable (which carries its own weight) over its
    support box; same refinement and determinism contract as integrate."""
    q = q or QuadratureSpec()
    return _refine(None, _as_box(f.support_box), f, None, q, workers)


class _ConstantOne:
    def __init__(self, box):
        self.support_box = _as_box(box)

    def __call__(self, pts):
        p, squeeze = _rows(pts, self.support_box.shape[0])
        out = np.ones(p.shape[0])
        return float(out[0]) if squeeze else out


def chart_mass(chart: Chart, box, side: str = "left",
               q: QuadratureSpec | None = None, workers: int = 1) -> IntegralResult:
    """Invariant mass of a parameter box (the box may exceed the working box,
    but must stay clear of the singular locus)."""
    box = _as_box(box)
    if chart.singular_gap(box) <= 0.0:
        raise SupportError("mass box touches the singular locus")
    q = q or QuadratureSpec()
    density = chart.left_density if side == "left" else chart.right_density
    return _refine(chart, box, _ConstantOne(box), density, q, workers)


# ---------------------------------------------------------------------------
# Monte Carlo cross-check

def mc_integrate(chart: Chart, f, side: str = "left",
                 q: QuadratureSpec | None = None, workers: int = 1) -> IntegralResult:
    """Uniform Monte Carlo over the support box, weighted by the density.

    The estimate comes with its standard error and is bit-reproducible for a
    fixed spec: samples are drawn per fixed-size block from a Philox stream
    keyed by (seed, block index), so the worker count cannot change the draw.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    q = q or QuadratureSpec()
    box = _as_box(f.support_box)
    if not chart.contains_box(box):
        raise SupportError("support box is not inside the chart box")
    density = chart.left_density if side == "left" else chart.right_density
    widths = box[:, 1] - box[:, 0]
    volume = float(np.prod(widths))
    n = q.mc_samples

    def one(i):
        start = i * _EVAL_CHUNK
        count = min(_EVAL_CHUNK, n - start)
        rng = np.random.Generator(np.random.Philox(key=[q.seed, i]))
        pts = rng.random((count, box.shape[0])) * widths + box[:, 0]
        fv = np.asarray(f(pts), dtype=float)
        vals = fv.copy()
        mask = fv != 0.0
        if np.any(mask):
            vals[mask] *= density(pts[mask])
        return pairwise_sum(vals), pairwise_sum(vals * vals)

    blocks = range((n + _EVAL_CHUNK - 1) // _EVAL_CHUNK)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partial = list(pool.map(one, blocks))
    else:
        partial = [one(i) for i in blocks]
    s1 = pairwise_sum([p[0] for p in partial])
    s2 = pairwise_sum([p[1] for p in partial])
    mean = s1 / n
    var = max(0.0, (s2 - n * mean * mean) / (n - 1)) if n > 1 else 0.0
    return IntegralResult(volume * mean, volume * math.sqrt(var / n), n)
