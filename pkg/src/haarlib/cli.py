"""Batch runner: property suites as subcommands with JSON-line reports.

Each check emits one JSON object per line with the fields
{name, group, estimate, reference, deviation, tolerance, passed, seed, law};
exact rationals are serialized as "p/q" strings.  Identical configuration and
seed produce byte-identical report streams regardless of --workers.  Exit
status: 0 all checks passed, 1 some check failed, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import groups as G
from . import invariance as inv
from . import measure as M
from . import quotient as Q
from . import trees as T

GROUPS = {g.label: g for g in G.catalog()}

SUITES = ("catalog", "invariance", "modular", "weil", "lattice", "tree")


@dataclass(frozen=True)
class RunConfig:
    command: str
    group: str | None = None
    instance: str | None = None
    d: int | None = None
    R: int | None = None
    seed: int = 0
    workers: int = 1
    n_translates: int = 12
    base_points: int | None = None
    rel_tol: float | None = None
    mc_samples: int | None = None
    out: str | None = None


class UsageError(Exception):
    pass


def _quad(config: RunConfig, dim: int) -> M.QuadratureSpec:
    q = inv.default_quadrature(dim, seed=config.seed)
    if config.base_points is not None:
        q = replace(q, base_points_per_axis=config.base_points)
    if config.rel_tol is not None:
        q = replace(q, rel_tol=config.rel_tol)
    if config.mc_samples is not None:
        q = replace(q, mc_samples=config.mc_samples)
    return q


def _selected_groups(config: RunConfig) -> list[G.GroupId]:
    if config.group is None:
        return list(GROUPS.values())
    return [GROUPS[config.group]]


def _sample_params(chart: G.Chart, rng: np.random.Generator, count: int) -> np.ndarray:
    """Random admissible chart points, kept clear of singular loci."""
    box = chart.box.copy()
    if chart.group is not None and chart.group.kind == "gl":
        # near-identity window dodges the determinant shell cheaply
        center = np.eye(chart.group.n).ravel()
        lo, hi = center - 0.45, center + 0.45
    else:
        lo, hi = box[:, 0], box[:, 1]
        width = hi - lo
        lo, hi = lo + 0.05 * width, hi - 0.05 * width
    out = np.empty((count, chart.dim))
    filled = 0
    while filled < count:
        cand = rng.uniform(lo, hi, size=(count - filled, chart.dim))
        keep = np.array([chart.singular_gap(np.stack([p, p], axis=1)) > 1e-2
                         for p in cand])
        kept = cand[keep]
        out[filled:filled + kept.shape[0]] = kept
        filled += kept.shape[0]
    return out


# ---------------------------------------------------------------------------
# suites

def suite_catalog(config: RunConfig) -> list[inv.CheckReport]:
    reports = []
    for group in _selected_groups(config):
        chart = G.default_chart(group)
        rng = np.random.Generator(np.random.Philox(key=[config.seed, 0xCA7]))
        pts = _sample_params(chart, rng, 1000)

        reps = chart.embed(pts)
        back = chart.extract(reps)
        dev = float(np.max(np.abs(back - pts)))
        reports.append(inv.CheckReport.from_deviation(
            "chart_round_trip", dev, 1e-10, estimate=dev, samples=1000,
            seed=config.seed, group=group.label, law="from(to(p)) = p"))

        a, b, c = (chart.to_element(pts[i]) for i in (0, 1, 2))
        assoc = G.multiply(G.multiply(a, b), c)
        assoc2 = G.multiply(a, G.multiply(b, c))
        inv_dev = 0.0
        for g in (a, b, c):
            prod = G.multiply(g, G.invert(g)).rep - G.identity(group).rep
            inv_dev = max(inv_dev, float(np.max(np.abs(prod))))
        axdev = float(np.max(np.abs(assoc.rep - assoc2.rep))) + inv_dev
        reports.append(inv.CheckReport.from_deviation(
            "group_axioms", axdev, 1e-9, estimate=axdev, samples=3,
            seed=config.seed, group=group.label, law="(ab)c = a(bc), g g^-1 = e"))

        dens = np.concatenate([chart.left_density(pts), chart.right_density(pts)])
        pos = float(np.min(dens))
        reports.append(inv.CheckReport.from_deviation(
            "density_positivity", 0.0 if pos > 0.0 else 1.0, 0.5, estimate=pos,
            samples=1000, seed=config.seed, group=group.label,
            law="densities positive off the singular locus"))

        if group.kind == "sl2":
            mats = chart.embed(pts)
            redo = chart.embed(G.iwasawa_coordinates(mats))
            rdev = float(np.max(np.abs(redo - mats)))
            reports.append(inv.CheckReport.from_deviation(
                "iwasawa_recomposition", rdev, 1e-10, estimate=rdev, samples=1000,
                seed=config.seed, group=group.label,
                law="g = shear(x) scale(y) rotation(theta)"))

        scales = {"real_add": [1.0, 10.0, 1000.0],
                  "real_mult": [10.0, 1e3, math.exp(501)],
                  "gl": [1.0, 2.0, 4.0],
                  "sl2": [2.0, 6.0, 12.0],
                  "so2": [],
                  "triangular_p": [2.0, 8.0, 40.0]}[group.kind]
        threshold = {"gl": 50.0, "triangular_p": 1e3}.get(group.kind, 1e3)
        reports.append(inv.check_compact_finiteness(
            group, chart, scales, _quad(config, chart.dim), threshold=threshold,
            workers=1))

        f = inv.standard_bumps(group, chart, count=1)[0]
        q = _quad(config, chart.dim)
        quad = M.integrate(chart, f, "left", q, workers=1)
        mc = M.mc_integrate(chart, f, "left", q, workers=1)
        dev = abs(mc.value - quad.value)
        tol4 = max(4.0 * mc.error_estimate, 1e-12)
        reports.append(inv.CheckReport.from_deviation(
            "quadrature_vs_monte_carlo", dev / tol4, 1.0, estimate=mc.value,
            reference=quad.value, samples=q.mc_samples, seed=config.seed,
            group=group.label, law="two integration routes agree within 4 se"))
    return reports


def _split_translates(total: int, parts: int) -> list[int]:
    base = total // parts
    out = [base] * parts
    for i in range(total - base * parts):
        out[i] += 1
    return [n for n in out if n > 0]


def suite_invariance(config: RunConfig) -> list[inv.CheckReport]:
    reports = []
    for group in _selected_groups(config):
        chart = G.default_chart(group)
        q = _quad(config, chart.dim)
        tol = 1e-5 if chart.dim >= 3 else 1e-6
        bumps = inv.standard_bumps(group, chart, count=3)
        counts = _split_translates(config.n_translates, len(bumps))
        for side, check in (("left", inv.check_left_invariance),
                            ("right", inv.check_right_invariance)):
            worst = None
            total = 0
            for f, n_tr in zip(bumps, counts):
                r = check(group, chart, f, n_translates=n_tr, tol=tol, q=q,
                          workers=1)
                total += n_tr
                if worst is None or r.max_rel_deviation > worst.max_rel_deviation:
                    worst = r
            reports.append(replace(worst, name=f"{side}_invariance", samples=total))
        if group.kind == "triangular_p":
            f = bumps[0]
            g = chart.to_element([2.0, 0.0])   # diag(2, 1/2)
            base = M.integrate(chart, f, "left", q).value
            val = M.integrate(chart, M.translate(f, g, "right"), "left", q).value
            dev = abs(val - base) / base
            detected = dev >= 0.1
            reports.append(inv.CheckReport.from_deviation(
                "negative_control_left_density_right_translation",
                0.0 if detected else 1.0, 0.5, estimate=dev, reference=0.1,
                samples=1, seed=config.seed, group=group.label,
                law="left density is not right invariant on the triangular group"))
    return reports


def suite_modular(config: RunConfig) -> list[inv.CheckReport]:
    reports = []
    for group in _selected_groups(config):
        chart = G.default_chart(group)
        q = _quad(config, chart.dim)
        heavy = chart.dim >= 3
        bumps = inv.standard_bumps(group, chart, count=1 if heavy else 3,
                                   clamped=True)
        rng = np.random.Generator(np.random.Philox(key=[config.seed, 0x30D]))
        translates = inv.random_translates(group, 2 if heavy else 4, rng)
        if group.kind == "triangular_p":
            translates += [chart.to_element([math.exp(t), 0.0])
                           for t in (-1.0, 0.5, 1.0)]

        worst = 0.0
        est = ref = 1.0
        estimates_by_bump = []
        for g in translates:
            per_bump = [inv.estimate_modular(group, chart, g, f, q) for f in bumps]
            estimates_by_bump.append(per_bump)
            closed = inv.modular_closed_form(group, g)
            for val in per_bump:
                dev = abs(val - closed) / closed
                if dev > worst:
                    worst, est, ref = dev, val, closed
        reports.append(inv.CheckReport.from_deviation(
            "modular_vs_closed_form", worst, 5e-4, estimate=est, reference=ref,
            samples=len(translates) * len(bumps), seed=config.seed,
            group=group.label, law="Delta(g) = lambda(f(. g^-1)) / lambda(f)"))

        if len(bumps) > 1:
            spread = max(
                (max(vals) - min(vals)) / max(vals) for vals in estimates_by_bump)
            reports.append(inv.CheckReport.from_deviation(
                "modular_bump_independence", spread, 5e-4, estimate=spread,
                samples=len(translates), seed=config.seed, group=group.label,
                law="Delta is independent of the test function"))

        if not heavy:
            g, h = translates[0], translates[1]
            f = bumps[0]
            try:
                vg = inv.estimate_modular(group, chart, g, f, q)
                vh = inv.estimate_modular(group, chart, h, f, q)
                vgh = inv.estimate_modular(group, chart, G.multiply(g, h), f, q)
                dev = abs(vgh - vg * vh) / vgh
                reports.append(inv.CheckReport.from_deviation(
                    "modular_homomorphism", dev, 5e-4, estimate=vgh,
                    reference=vg * vh, samples=2, seed=config.seed,
                    group=group.label, law="Delta(gh) = Delta(g) Delta(h)"))
            except M.SupportError:
                pass   # product translate may leave the window; skip quietly

        if group.kind in ("triangular_p", "sl2", "gl"):
            g = translates[-1]
            da = inv.det_ad(group, g)
            if group.kind == "triangular_p":
                val = inv.estimate_modular(group, chart, g, bumps[0], q)
                dev = abs(val * da - 1.0)
                law = "Delta(g) * |det Ad(g)| = 1 on the triangular group"
            else:
                dev = abs(da - 1.0)
                law = "|det Ad| = 1 on a unimodular group"
            reports.append(inv.CheckReport.from_deviation(
                "det_ad_convention", dev, 5e-4, estimate=da, reference=1.0,
                samples=1, seed=config.seed, group=group.label, law=law))

        if group.kind == "triangular_p":
            f = bumps[0]
            conv = inv.right_from_left(group, chart, f, q).value
            direct = M.integrate(chart, f, "right", q).value
            dev = abs(conv - direct) / direct
            reports.append(inv.CheckReport.from_deviation(
                "right_from_left", dev, 1e-5, estimate=conv, reference=direct,
                samples=1, seed=config.seed, group=group.label,
                law="int f(x) Delta(x^-1) dmu_left = int f dmu_right"))
    return reports


def suite_weil(config: RunConfig) -> list[inv.CheckReport]:
    reports = []
    names = ([config.instance] if config.instance
             else ["rn_zn", "sl2_so2", "sl2_p_negative", "sl2_n_plane"])
    for name in names:
        if name == "rn_zn":
            for n in (1, 2):
                qs = Q.rn_zn(n)
                q = _quad(config, qs.g_chart.dim)
                bumps = inv.standard_bumps(qs.g_group, qs.g_chart, count=3)
                ratios = []
                for f in bumps:
                    r = Q.weil_check(qs, f, q)
                    ratios.append(r.estimate)
                    reports.append(r)
                spread = (max(ratios) - min(ratios)) / max(ratios)
                reports.append(inv.CheckReport.from_deviation(
                    f"weil_scalar_constancy_r{n}_z{n}", spread, 1e-4,
                    estimate=spread, samples=3, seed=config.seed,
                    group=qs.g_group.label,
                    law="the quotient-measure scalar is bump independent"))
                reports.append(Q.existence_criterion(
                    qs.g_group, qs.embedding, seed=config.seed))
        elif name == "sl2_so2":
            qs = Q.sl2_so2_quotient()
            q = _quad(config, 3)
            bumps = inv.standard_bumps(qs.g_group, qs.g_chart, count=3)
            ratios = []
            for f in bumps:
                r = Q.weil_check(qs, f, q)
                ratios.append(r.estimate)
                reports.append(r)
            spread = (max(ratios) - min(ratios)) / max(ratios)
            reports.append(inv.CheckReport.from_deviation(
                "weil_scalar_constancy_sl2_so2", spread, 1e-4, estimate=spread,
                samples=3, seed=config.seed, group="sl2",
                law="the quotient-measure scalar is bump independent"))
            reports.append(Q.existence_criterion(
                qs.g_group, qs.embedding, seed=config.seed))
            hchart = Q.hyperbolic_plane_chart()
            fh = M.bump(hchart, [0.5, 1.2], [1.0, 0.5], exponent=4)
            reports.append(Q.hyperbolic_invariance_check(
                max(3, config.n_translates // 3), fh, _quad(config, 2)))
        elif name == "sl2_p_negative":
            emb = Q.sl2_p_embedding()
            crit = Q.existence_criterion(G.sl2(), emb, seed=config.seed)
            reports.append(inv.CheckReport.from_deviation(
                "existence_criterion_sl2_p_fails", 0.0 if not crit.passed else 1.0,
                0.5, estimate=crit.max_rel_deviation, reference=0.0, samples=crit.samples,
                seed=config.seed, group="sl2",
                law="the projective line admits no invariant measure"))
            chart = G.default_chart(G.sl2())
            f = M.bump(chart, [0.0, 1.5, 3.0], [0.6, 0.4, 0.8], exponent=5)
            gneg = G.Element(G.sl2(), [[2.0, 0.0], [0.0, 0.5]])
            drift = Q.projective_angle_instability(f, gneg)
            reports.append(inv.CheckReport.from_deviation(
                "projective_ratio_drift_detected",
                0.0 if not drift.passed else 1.0, 0.5,
                estimate=drift.max_rel_deviation, reference=0.1, samples=2,
                seed=config.seed, group="sl2", law=drift.law))
        elif name == "sl2_n_plane":
            qs = Q.sl2_n_plane()
            reports.append(Q.existence_criterion(
                qs.g_group, qs.embedding, seed=config.seed))
        else:
            raise UsageError(f"unknown quotient instance {name!r}")
    return reports


def suite_lattice(config: RunConfig) -> list[inv.CheckReport]:
    reports = []
    q2 = _quad(config, 2)

    z2 = Q.LatticeSpec(G.real_add(2), np.eye(2))
    vol = Q.quotient_integrate_lattice(z2, lambda p: np.ones(np.asarray(p).shape[0]), q2)
    reports.append(inv.CheckReport.from_deviation(
        "covolume_z2", abs(vol.value - 1.0), 1e-10, estimate=vol.value,
        reference=1.0, samples=1, seed=config.seed, group="real_add_2",
        law="covolume = |det of the generator matrix|"))
    skew = Q.LatticeSpec(G.real_add(2), np.array([[2.0, 0.0], [0.0, 3.0]]))
    vol = Q.quotient_integrate_lattice(skew, lambda p: np.ones(np.asarray(p).shape[0]), q2)
    reports.append(inv.CheckReport.from_deviation(
        "covolume_2x3", abs(vol.value - 6.0) / 6.0, 1e-10, estimate=vol.value,
        reference=6.0, samples=1, seed=config.seed, group="real_add_2",
        law="covolume = |det of the generator matrix|"))

    for n, gens in ((1, np.array([[1.0]])), (2, np.array([[2.0, 0.0], [0.0, 3.0]]))):
        group = G.real_add(n)
        chart = G.default_chart(group)
        f = inv.standard_bumps(group, chart, count=1)[0]
        lat = Q.LatticeSpec(group, gens)
        per = Q.periodize(lat, f)
        lhs = Q.quotient_integrate_lattice(lat, per, _quad(config, n)).value
        rhs = M.integrate(chart, f, "left", _quad(config, n)).value
        reports.append(inv.CheckReport.from_deviation(
            f"lattice_periodization_r{n}", abs(lhs - rhs) / rhs, 1e-8,
            estimate=lhs, reference=rhs, samples=1, seed=config.seed,
            group=group.label, law="sum of translates integrates to the whole-space integral"))

    reports.append(Q.check_lattice_unimodular(G.real_add(2), z2, q2))

    gamma = [G.Element(G.triangular_p(), [[math.exp(t), 0.0], [0.0, math.exp(-t)]])
             for t in (-2.0, -1.0, 1.0, 2.0)]
    crit = Q.check_discrete_subgroup_criterion(G.triangular_p(), gamma)
    reports.append(inv.CheckReport.from_deviation(
        "triangular_discrete_subgroup_criterion_fails",
        0.0 if not crit.passed else 1.0, 0.5, estimate=crit.max_rel_deviation,
        reference=0.0, samples=4, seed=config.seed, group="triangular_p",
        law="the diagonal exponential subgroup is not a lattice"))

    # shift the periodized function by a group element: quotient mass unchanged
    lat = Q.LatticeSpec(G.real_add(1), np.array([[1.0]]))
    chart = G.default_chart(G.real_add(1))
    f = inv.standard_bumps(G.real_add(1), chart, count=1)[0]
    per = Q.periodize(lat, f)
    shifted = lambda p: per(np.asarray(p, dtype=float) + 0.37)
    v0 = Q.quotient_integrate_lattice(lat, per, _quad(config, 1)).value
    v1 = Q.quotient_integrate_lattice(lat, shifted, _quad(config, 1)).value
    reports.append(inv.CheckReport.from_deviation(
        "quotient_shift_invariance", abs(v1 - v0) / v0, 1e-6, estimate=v1,
        reference=v0, samples=1, seed=config.seed, group="real_add_1",
        law="the quotient measure is translation invariant"))
    return reports


def suite_tree(config: RunConfig) -> list[inv.CheckReport]:
    reports = []
    degrees = [config.d] if config.d else [3, 4, 5, 6]
    radii = [config.R] if config.R else [2]
    for d in degrees:
        for R in radii:
            order = T.ball_aut_order(d, R)
            delta = T.horospherical_modular(d, max(R, 2))
            reports.append(inv.CheckReport.from_deviation(
                f"tree_d{d}_R{R}", 0.0, 0.5, estimate=float(delta),
                reference=1.0 / (d - 1), samples=1, seed=config.seed,
                group=f"aut_t{d}",
                law=f"|Aut(B_R)| = {order}; Delta(t) = 1/(d-1)",
                exact=f"{delta.numerator}/{delta.denominator}"))
        expected = T.horospherical_modular(d, 2)
        stable = all(T.horospherical_modular(d, R) == expected for R in (2, 3, 4))
        reports.append(inv.CheckReport.from_deviation(
            f"tree_modular_radius_independent_d{d}", 0.0 if stable else 1.0, 0.5,
            estimate=float(expected), samples=3, seed=config.seed,
            group=f"aut_t{d}", law="Delta(t) does not depend on the ball radius",
            exact=f"{expected.numerator}/{expected.denominator}"))
        ball4 = T.TreeBall(d, 4)
        sq_num = T.stabilizer_index(ball4, [()], T.ray_word(2), horospherical=True)
        sq_den = T.stabilizer_index(ball4, [T.ray_word(2)], (), horospherical=True)
        from fractions import Fraction
        ok = Fraction(sq_num, sq_den) == expected * expected
        reports.append(inv.CheckReport.from_deviation(
            f"tree_modular_homomorphism_d{d}", 0.0 if ok else 1.0, 0.5,
            estimate=float(Fraction(sq_num, sq_den)), samples=1, seed=config.seed,
            group=f"aut_t{d}", law="Delta(t^2) = Delta(t)^2",
            exact=f"{sq_num}/{sq_den}"))
    for d in (3, 4):
        reports.append(T.edge_stabilizer_measures_equal(d, 2))
    ball = T.TreeBall(3, 2)
    m0 = T.van_dantzig_measure(ball, [])
    m1 = T.van_dantzig_measure(ball, [(0, 1, 2)])
    m2 = T.van_dantzig_measure(ball, [(0, 1, 2), (1, 0, 2)])
    rel = T.van_dantzig_measure(ball, T.relabel_cosets([(0, 1, 2), (1, 0, 2)], (2, 0, 1)))
    ok = (m0, m1, m2, rel) == (0, 1, 2, 2)
    reports.append(inv.CheckReport.from_deviation(
        "van_dantzig_coset_measure", 0.0 if ok else 1.0, 0.5, estimate=float(m2),
        samples=4, seed=config.seed, group="aut_t3",
        law="mass is the number of cosets of the compact open subgroup",
        exact=f"{m2.numerator}/{m2.denominator}"))
    return reports


SUITE_FUNCTIONS = {
    "catalog": suite_catalog,
    "invariance": suite_invariance,
    "modular": suite_modular,
    "weil": suite_weil,
    "lattice": suite_lattice,
    "tree": suite_tree,
}


# ---------------------------------------------------------------------------
# configuration and entry point

def _parse_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"bad config line: {line!r}")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if raw.startswith('"') and raw.endswith('"'):
                values[key] = raw[1:-1]
            elif raw in ("true", "false"):
                values[key] = raw == "true"
            else:
                try:
                    values[key] = int(raw)
                except ValueError:
                    try:
                        values[key] = float(raw)
                    except ValueError:
                        values[key] = raw
    return values


def _build_config(args: argparse.Namespace) -> RunConfig:
    file_values = _parse_config_file(args.config) if args.config else {}

    def pick(flag, key, default):
        if flag is not None:
            return flag
        if key in file_values:
            return file_values[key]
        return default

    seed_default = int(os.environ.get("HAARLIB_SEED", "0"))
    config = RunConfig(
        command=args.command,
        group=pick(args.group, "group", None),
        instance=pick(getattr(args, "instance", None), "instance", None),
        d=pick(getattr(args, "d", None), "d", None),
        R=pick(getattr(args, "R", None), "R", None),
        seed=pick(args.seed, "seed", seed_default),
        workers=pick(args.workers, "workers", 1),
        n_translates=pick(args.n_translates, "n_translates", 12),
        base_points=pick(args.base_points, "base_points", None),
        rel_tol=pick(args.rel_tol, "rel_tol", None),
        mc_samples=pick(args.mc_samples, "mc_samples", None),
        out=pick(args.out, "out", None),
    )
    if config.group is not None and config.group not in GROUPS:
        raise UsageError(f"unknown group {config.group!r}; choose from "
                         f"{', '.join(sorted(GROUPS))}")
    if config.instance is not None and config.instance not in Q.QUOTIENT_INSTANCE_NAMES:
        raise UsageError(f"unknown instance {config.instance!r}; choose from "
                         f"{', '.join(Q.QUOTIENT_INSTANCE_NAMES)}")
    if config.d is not None and config.d < 3:
        raise UsageError("tree degree must be at least 3")
    if config.workers < 1:
        raise UsageError("workers must be positive")
    return config


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haarlib",
        description="invariant-measure property suites with JSON-line reports")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUITES + ("all",):
        p = sub.add_parser(name, help=f"run the {name} suite(s)")
        p.add_argument("--group", help="restrict to one catalog group")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--n-translates", dest="n_translates", type=int, default=None)
        p.add_argument("--base-points", dest="base_points", type=int, default=None)
        p.add_argument("--rel-tol", dest="rel_tol", type=float, default=None)
        p.add_argument("--mc-samples", dest="mc_samples", type=int, default=None)
        p.add_argument("--config", default=None, help="key = value config file")
        p.add_argument("--out", default=None, help="report path (default stdout)")
        if name in ("weil", "all"):
            p.add_argument("--instance", default=None,
                           help="quotient instance identifier")
        if name in ("tree", "all"):
            p.add_argument("--d", type=int, default=None)
            p.add_argument("--R", type=int, default=None)
    return parser


def _serialize(report: inv.CheckReport) -> str:
    return json.dumps(report.record(), sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def run(config: RunConfig) -> list[inv.CheckReport]:
    suites = list(SUITES) if config.command == "all" else [config.command]
    runner = [SUITE_FUNCTIONS[s] for s in suites]
    if config.workers > 1 and len(runner) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            batches = list(pool.map(lambda fn: fn(config), runner))
    else:
        batches = [fn(config) for fn in runner]
    return [r for batch in batches for r in batch]


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _build_config(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    reports = run(config)
    lines = "".join(_serialize(r) + "\n" for r in reports)
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(lines)
    else:
        sys.stdout.write(lines)
    return 0 if all(r.passed for r in reports) else 1


if __name__ == "__main__":
    sys.exit(main())
