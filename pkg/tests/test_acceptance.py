"""Acceptance gate: twelve desk-scale checks, one verdict line each.

Every test prints ``ACCEPTANCE <n>: PASS`` or ``FAIL`` on the live
terminal (bypassing capture), so a full run reads as a checklist even
when everything is green.  Tolerances and runtime budgets are pinned in
the asserts; nothing here is free to drift.

The file is self-contained on purpose: oracles used to cross-check the
library (the integer line census, the brute-force incidence count) are
written out again here rather than imported from the unit tests, so the
gate can be audited in one read.
"""

import json
import math
import os
import time

import numpy as np
import pytest

from gmtlab.cli import main as cli_main
from gmtlab.covering import (
    box_dimension,
    frostman_extract,
    hausdorff_content,
    verify_delta_s_set,
)
from gmtlab.experiments import (
    ExperimentSpec,
    Target,
    erdos_beck_profile,
    furstenberg_count,
    line_set_dimension,
    orthogonal_exceptional_profile,
    radial_dimension_profile,
)
from gmtlab.generators import (
    DiscreteSet,
    cantor_middle_thirds,
    circle_set,
    four_corner_product,
    gen_grid,
    gen_ifs,
    gen_planted_collinear,
    gen_random_delta_s_set,
    segment_set,
)
from gmtlab.geometry import Line, Point
from gmtlab.incidence import LineSet, beck_analyze, incidence_count, spanned_lines
from gmtlab.measures import WeightedMeasure, frostman_fit, radial_pushforward
from gmtlab.dyadic import level_of
from gmtlab.tubes import (
    containment_multiplicity,
    sample_probe_tubes,
    thin_tube_audit,
    tube_mass_exponent,
    uniform_tube_family,
)


def _verdict(capsys, criterion, problems, note=""):
    ok = not problems
    detail = "; ".join(problems) if problems else note
    tail = f"  [{detail}]" if detail else ""
    with capsys.disabled():
        print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}{tail}")
    assert ok, f"acceptance {criterion}: {detail}"


# ---------------------------------------------------------------------------
# 1: incidence bound suite
# ---------------------------------------------------------------------------


def _reduced_triples(ipts, ii, jj):
    """Reduced integer normal triples (a, b, c) with a*x + b*y == c for
    the lines through point pairs (ii, jj), sign-canonical."""
    dx = ipts[jj, 0] - ipts[ii, 0]
    dy = ipts[jj, 1] - ipts[ii, 1]
    a, b = -dy, dx
    c = a * ipts[ii, 0] + b * ipts[ii, 1]
    g = np.maximum(np.gcd(np.gcd(np.abs(a), np.abs(b)), np.abs(c)), 1)
    a, b, c = a // g, b // g, c // g
    flip = (a < 0) | ((a == 0) & (b < 0))
    return (np.where(flip, -a, a), np.where(flip, -b, b),
            np.where(flip, -c, c))


def _grid_census(ipts):
    """Exact spanned-line point counts from pair multiplicities: a line
    with k points covers k*(k-1)/2 of the unordered pairs."""
    n = ipts.shape[0]
    ii, jj = np.triu_indices(n, 1)
    a, b, c = _reduced_triples(ipts, ii, jj)
    triples, mult = np.unique(
        np.stack([a, b, c], axis=1), axis=0, return_counts=True
    )
    k = ((1.0 + np.sqrt(1.0 + 8.0 * mult)) / 2.0).round().astype(int)
    assert np.all(k * (k - 1) // 2 == mult)
    return triples.shape[0], int(k.sum())


def _brute_incidences(points, line_set):
    ang, off = line_set.angle_offset_arrays()
    nx, ny = -np.sin(ang), np.cos(ang)
    d = np.abs(nx[:, None] * points[None, :, 0]
               + ny[:, None] * points[None, :, 1] - off[:, None])
    return int((d < 1e-9).sum())


def test_criterion_01_incidence_bound_suite(capsys):
    """Counting bound n + m + (nm)^(3/4) with zero violations, and exact
    agreement with from-scratch oracles on grids and lattice instances."""
    t0 = time.perf_counter()
    problems = []

    for m in range(3, 33):
        grid = gen_grid(m)
        ipts = (grid.points * (m - 1)).round().astype(np.int64)
        want_lines, want_inc = _grid_census(ipts)
        ls = spanned_lines(grid)
        rep = incidence_count(grid, ls)
        if len(ls) != want_lines or rep.incidence_count != want_inc:
            problems.append(
                f"{m}x{m} grid: got {len(ls)}/{rep.incidence_count}, "
                f"census says {want_lines}/{want_inc}"
            )
        if rep.incidence_count > rep.cs_bound:
            problems.append(f"{m}x{m} grid exceeds the counting bound")
        if m == 3 and (len(ls), rep.incidence_count) != (20, 48):
            problems.append("3x3 grid must give 20 lines and 48 incidences")

    violations = 0
    for i in range(1000):
        rng = np.random.default_rng((42, i))
        scale = int(rng.integers(4, 65))
        raw = np.unique(
            rng.integers(0, scale + 1, size=(int(rng.integers(4, 501)), 2)),
            axis=0,
        )
        pts = raw.astype(float) / scale
        ds = DiscreteSet(pts, 1.0 / (4 * scale), check=False)
        m_target = int(rng.integers(1, 501))
        ii = rng.integers(0, raw.shape[0], size=m_target)
        jj = rng.integers(0, raw.shape[0], size=m_target)
        ii, jj = ii[ii != jj], jj[ii != jj]
        if ii.size == 0:
            ii, jj = np.array([0]), np.array([1])
        a, b, c = _reduced_triples(raw, ii, jj)
        _, first = np.unique(np.stack([a, b, c], 1), axis=0, return_index=True)
        ls = LineSet.from_lines([
            Line.through(Point(*pts[ii[k]]), Point(*pts[jj[k]])) for k in first
        ])
        rep = incidence_count(ds, ls)
        if rep.incidence_count != _brute_incidences(ds.points, ls):
            problems.append(f"instance {i}: count disagrees with brute force")
        n, mm = len(ds), len(ls)
        if rep.incidence_count > n + mm + (n * mm) ** 0.75:
            violations += 1
    if violations:
        problems.append(f"{violations} bound violations in 1000 instances")

    elapsed = time.perf_counter() - t0
    if elapsed >= 60.0:
        problems.append(f"runtime {elapsed:.1f}s over the 60s budget")
    _verdict(capsys, 1, problems,
             f"grids 3..32 plus 1000 lattice instances in {elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 2: dichotomy on random and planted configurations
# ---------------------------------------------------------------------------


def _lattice_set(seed, n=512):
    """n distinct uniform points on the 2^16 lattice, so line grouping
    runs in exact arithmetic."""
    rng = np.random.default_rng(seed)
    ints = rng.integers(0, 2 ** 16 + 1, size=(n, 2))
    ints = np.unique(ints, axis=0)
    while ints.shape[0] < n:
        extra = rng.integers(0, 2 ** 16 + 1, size=(n - ints.shape[0], 2))
        ints = np.unique(np.concatenate([ints, extra]), axis=0)
    return DiscreteSet(ints.astype(float) / 2 ** 16, 2.0 ** -16, check=False)


def test_criterion_02_beck_dichotomy(capsys):
    """General-position random sets must span all n(n-1)/2 lines and read
    ManyLines; planted near-collinear sets must keep the spanned-line
    count within a factor 4 of the n*k lower-bound rate."""
    t0 = time.perf_counter()
    problems = []
    n = 512

    general = 0
    for seed in range(200):
        rep = beck_analyze(_lattice_set(seed, n))
        if rep.max_collinear > 2:
            continue  # a sampled collinear triple exempts this draw
        general += 1
        if rep.spanned_line_count != n * (n - 1) // 2:
            problems.append(f"seed {seed}: spanned {rep.spanned_line_count}")
        if rep.dichotomy_verdict != "ManyLines":
            problems.append(f"seed {seed}: verdict {rep.dichotomy_verdict}")
    if general < 150:
        problems.append(f"only {general}/200 draws were in general position")

    for k in (0, 16, 256):
        rep = beck_analyze(gen_planted_collinear(n, k, seed=1))
        if rep.max_collinear != n - k:
            problems.append(f"planted k={k}: max_collinear {rep.max_collinear}")
        if k == 0:
            if rep.dichotomy_verdict != "RichLine" or rep.erdos_beck_ratio is not None:
                problems.append("planted k=0 must read RichLine with no ratio")
        elif rep.erdos_beck_ratio < 0.25:
            problems.append(f"planted k={k}: ratio {rep.erdos_beck_ratio:.3f}")

    elapsed = time.perf_counter() - t0
    if elapsed >= 300.0:
        problems.append(f"runtime {elapsed:.1f}s over the 5min budget")
    _verdict(capsys, 2, problems,
             f"{general}/200 general position, planted k in {{0,16,256}}, "
             f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 3: dimension estimator calibration
# ---------------------------------------------------------------------------


def test_criterion_03_dimension_calibration(capsys):
    """Box-counting slopes over levels 2..10 against the known dimensions
    of four reference families."""
    problems = []
    cases = [
        ("middle-thirds", gen_ifs(cantor_middle_thirds(), 3.0 ** -7),
         math.log(2) / math.log(3), 0.05),
        ("four-corner", gen_ifs(four_corner_product(), 4.0 ** -5), 1.0, 0.05),
        ("full-density", gen_random_delta_s_set(2.0, 2.0 ** -10, seed=0),
         2.0, 0.03),
        ("segment", segment_set(1024), 1.0, 0.02),
    ]
    notes = []
    for name, ds, want, tol in cases:
        slope = box_dimension(ds, 2, 10).slope
        notes.append(f"{name} {slope:.4f}")
        if abs(slope - want) > tol:
            problems.append(f"{name}: slope {slope:.4f} not within "
                            f"{want} +- {tol}")
    _verdict(capsys, 3, problems, ", ".join(notes))


# ---------------------------------------------------------------------------
# 4: spread-set generation, verification, and extraction
# ---------------------------------------------------------------------------


def test_criterion_04_delta_s_machinery(capsys):
    """Generated spread sets pass their own constant-16 verification, and
    the extracted subsets both pass it and meet the 2^-6 content floor."""
    problems = []
    for s in (0.3, 0.5, 1.0, 1.5):
        for delta in (2.0 ** -6, 2.0 ** -8, 2.0 ** -10):
            for seed in range(5):
                tag = f"s={s} delta=2^{round(math.log2(delta))} seed={seed}"
                ds = gen_random_delta_s_set(s, delta, seed)
                if not verify_delta_s_set(ds, s, 16.0).passed:
                    problems.append(f"generated set fails: {tag}")
                sub = frostman_extract(ds, s, delta)
                if not verify_delta_s_set(sub, s, 16.0).passed:
                    problems.append(f"extracted set fails: {tag}")
                floor = 2.0 ** -6 * hausdorff_content(ds, s) * delta ** -s
                if len(sub) + 1e-9 < floor:
                    problems.append(
                        f"extract size {len(sub)} under floor {floor:.1f}: {tag}"
                    )
    _verdict(capsys, 4, problems, "4 exponents x 3 scales x 5 seeds")


# ---------------------------------------------------------------------------
# 5: thin-tube audit degeneracy and the two-route exponent
# ---------------------------------------------------------------------------


def _exponent_pair(nu_set, x, lo=2):
    """Tube-mass decay exponent at x versus the direction-pushforward
    ball-mass exponent, both over the same dyadic window."""
    nu = WeightedMeasure.uniform(nu_set)
    push = radial_pushforward(nu, x).as_circle_measure()
    hi = min(level_of(nu_set.delta), level_of(push.support.delta)) - 1
    hi = max(hi, lo + 3)
    hi = min(hi, level_of(nu_set.delta), level_of(push.support.delta))
    return (tube_mass_exponent(nu, x, lo, hi),
            frostman_fit(push, lo, hi).exponent)


def test_criterion_05_thin_tube_audit(capsys):
    problems = []
    delta = 2.0 ** -8

    # (a) fully collinear pair: the axis tube holds all the mass, so the
    # audit must fail with worst ratio exactly delta^-sigma / K whenever
    # K * delta^sigma < 1
    xs = np.stack([np.linspace(0.0, 0.2, 8), np.zeros(8)], axis=1)
    ys = np.stack([np.linspace(0.6, 1.0, 32), np.zeros(32)], axis=1)
    mu = WeightedMeasure.uniform(DiscreteSet(xs, delta, check=False))
    nu = WeightedMeasure.uniform(DiscreteSet(ys, delta, check=False))
    for sigma in (0.1, 0.25, 0.5, 0.75, 1.0, 1.5):
        for k in (1.0, 4.0, 16.0):
            if k * delta ** sigma >= 1.0:
                continue
            audit = thin_tube_audit(mu, nu, sigma, k)
            want = delta ** -sigma / k
            if audit.passed:
                problems.append(f"collinear passes at sigma={sigma} K={k}")
            elif abs(audit.worst_ratio - want) > 1e-9 * want:
                problems.append(
                    f"sigma={sigma} K={k}: ratio {audit.worst_ratio!r}, "
                    f"want {want!r}"
                )

    # (b) a point against the circle around it: every tube meets the
    # circle in about width-proportional mass, a genuine sigma=1 pair
    center = WeightedMeasure.uniform(
        DiscreteSet(np.array([[0.0, 0.0]]), 2.0 ** -10, check=False)
    )
    circ = WeightedMeasure.uniform(circle_set(256))
    audit = thin_tube_audit(center, circ, 1.0, 64.0)
    if not audit.passed:
        problems.append(f"center-vs-circle fails, worst {audit.worst_ratio:.3f}")

    # (c) the two exponent routes agree within 0.1 across the corpus
    pairs = [
        ("circle2048-center", circle_set(2048), Point(0.0, 0.0)),
        ("circle1024-center", circle_set(1024), Point(0.0, 0.0)),
        ("grid64-below", gen_grid(64), Point(0.5, -1.5)),
        ("grid32-left", gen_grid(32), Point(-1.5, 0.5)),
        ("segment1024-off", segment_set(1024), Point(0.5, 1.0)),
        ("segment512-diag", segment_set(512), Point(-0.7, 0.9)),
        ("cantor-below", gen_ifs(cantor_middle_thirds(), 3.0 ** -6),
         Point(0.4, -1.2)),
        ("fourcorner-side", gen_ifs(four_corner_product(), 4.0 ** -5),
         Point(-1.3, 0.45)),
        ("rand-s1.5-below", gen_random_delta_s_set(1.5, 2.0 ** -8, seed=3),
         Point(0.5, -1.4)),
        ("rand-s1.2-above", gen_random_delta_s_set(1.2, 2.0 ** -7, seed=11),
         Point(0.5, 1.7)),
    ]
    worst_gap = 0.0
    for name, nu_set, x in pairs:
        tube_e, push_e = _exponent_pair(nu_set, x)
        gap = abs(tube_e - push_e)
        worst_gap = max(worst_gap, gap)
        if gap > 0.1:
            problems.append(f"{name}: exponents {tube_e:.3f} vs {push_e:.3f}")

    _verdict(capsys, 5, problems,
             f"collinear exact, circle passes, worst corpus gap {worst_gap:.3f}")


# ---------------------------------------------------------------------------
# 6 and 7: radial direction-set dimension
# ---------------------------------------------------------------------------


def test_criterion_06_radial_self_projection(capsys):
    """The four-corner product seen from its own points: best direction
    set must box-count to at least 0.85."""
    t0 = time.perf_counter()
    problems = []
    fc = gen_ifs(four_corner_product(), 4.0 ** -5)
    res = radial_dimension_profile(ExperimentSpec(
        fc, fc, x_sample=32, scale_levels=(0, 8), target=Target.KAUFMAN11,
    ))
    best = res.best_dimension.slope
    if best < 0.85:
        problems.append(f"best direction-set dimension {best:.3f} < 0.85")
    elapsed = time.perf_counter() - t0
    if elapsed >= 120.0:
        problems.append(f"runtime {elapsed:.1f}s over the 2min budget")
    _verdict(capsys, 6, problems, f"best {best:.3f} in {elapsed:.1f}s")


def test_criterion_07_radial_cross_projection(capsys):
    """Low-dimensional viewpoint set against a high-dimensional target:
    best direction set must clear the additive prediction minus slack."""
    t0 = time.perf_counter()
    problems = []
    x = gen_random_delta_s_set(0.4, 2.0 ** -10, seed=1)
    y = gen_random_delta_s_set(1.5, 2.0 ** -10, seed=2)
    res = radial_dimension_profile(ExperimentSpec(
        x, y, x_sample=32, scale_levels=(2, 10), target=Target.FALCONER12,
    ))
    best = res.best_dimension.slope
    if best < 0.75:
        problems.append(f"best direction-set dimension {best:.3f} < 0.75")
    elapsed = time.perf_counter() - t0
    if elapsed >= 180.0:
        problems.append(f"runtime {elapsed:.1f}s over the 3min budget")
    _verdict(capsys, 7, problems,
             f"best {best:.3f}, predicted {res.predicted_lower_bound:.3f}, "
             f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# 8: spanned-line dimension of a mid-range spread set
# ---------------------------------------------------------------------------


def test_criterion_08_line_set_dimension(capsys):
    """A 0.7-dimensional set with no heavy line (removal drop <= 0.05)
    must span a line family of dimension at least 1.1."""
    problems = []
    ds = gen_random_delta_s_set(0.7, 2.0 ** -11, seed=4)
    profile = erdos_beck_profile(ds, 0.05)
    if profile["t_achieved"] > 0.05:
        problems.append(
            f"line-removal drop {profile['t_achieved']:.3f} breaks the "
            f"hypothesis, pick another instance"
        )
    slope = line_set_dimension(ds).slope
    if slope < 1.1:
        problems.append(f"line-set dimension {slope:.3f} < 1.1")
    _verdict(capsys, 8, problems,
             f"n={len(ds)}, drop {profile['t_achieved']:.3f}, "
             f"line dimension {slope:.3f}")


# ---------------------------------------------------------------------------
# 9: union tube-count floor
# ---------------------------------------------------------------------------


def test_criterion_09_furstenberg_floor(capsys):
    """Union covering count of the random pencils stays above the
    classical floor 2^-6 * delta^(-2 sigma).  The asymptotic improvement
    over the floor is recorded, never asserted."""
    problems = []
    delta = 2.0 ** -10
    notes = []
    for sigma in (0.3, 0.5):
        out = furstenberg_count(sigma, 1.0, delta, seed=11)
        floor = 2.0 ** -6 * delta ** (-2.0 * sigma)
        if out["count"] < floor:
            problems.append(
                f"sigma={sigma}: count {out['count']} under floor {floor:.1f}"
            )
        notes.append(f"sigma={sigma} ratio {out['ratio']:.2f}")
    _verdict(capsys, 9, problems, ", ".join(notes) + " (recorded only)")


# ---------------------------------------------------------------------------
# 10: exceptional projection directions
# ---------------------------------------------------------------------------


def test_criterion_10_orthogonal_exceptional(capsys):
    """Exceptional-direction set stays small for the four-corner product
    and collapses to the single orthogonal direction for a segment."""
    problems = []
    fc = gen_ifs(four_corner_product(), 4.0 ** -5)
    out = orthogonal_exceptional_profile(fc, 0.8)
    if out["measured_dim"] > 0.95:
        problems.append(
            f"four-corner exceptional dimension {out['measured_dim']:.3f}"
        )

    seg = segment_set(512)
    sigmas = [round(0.05 * k, 2) for k in range(1, 18)] + [0.89]
    for sigma in sigmas:
        res = orthogonal_exceptional_profile(seg, sigma)
        if res["n_exceptional"] != 1:
            problems.append(
                f"segment at sigma={sigma}: {res['n_exceptional']} exceptional"
            )
        elif abs(res["exceptional_directions"][0] - math.pi / 2) > 1e-12:
            problems.append(f"segment exceptional direction off-axis at "
                            f"sigma={sigma}")
    _verdict(capsys, 10, problems,
             f"four-corner dim {out['measured_dim']:.3f}, segment single "
             f"direction at {len(sigmas)} thresholds")


# ---------------------------------------------------------------------------
# 11: tube family contract
# ---------------------------------------------------------------------------


def test_criterion_11_tube_family_contract(capsys):
    problems = []
    notes = []
    for r in (2.0 ** -4, 2.0 ** -6, 2.0 ** -8):
        fam = uniform_tube_family(r)
        lo, hi = 0.25 / r ** 2, 16.0 / r ** 2
        if not lo <= len(fam) <= hi:
            problems.append(f"r=2^{round(math.log2(r))}: size {len(fam)} "
                            f"outside [{lo:.0f}, {hi:.0f}]")
        angles, offsets = sample_probe_tubes(r, 1000, seed=7)
        mults = np.array([
            containment_multiplicity(fam, angles[i], offsets[i])
            for i in range(1000)
        ])
        if mults.min() < 1 or mults.max() > 50:
            problems.append(
                f"r=2^{round(math.log2(r))}: multiplicity range "
                f"[{mults.min()}, {mults.max()}]"
            )
        notes.append(f"2^{round(math.log2(r))}: {len(fam)} tubes, "
                     f"mult<={mults.max()}")
    _verdict(capsys, 11, problems, ", ".join(notes))


# ---------------------------------------------------------------------------
# 12: byte-level reproducibility
# ---------------------------------------------------------------------------


def _normalized_report(out_dir, command):
    with open(os.path.join(out_dir, f"{command}-report.json")) as fh:
        rep = json.load(fh)
    rep.pop("timing")
    rep["config"].pop("out")
    for key in [k for k in rep["results"] if k.endswith("_csv")]:
        rep["results"].pop(key)
    return rep


def test_criterion_12_reproducibility(capsys, tmp_path):
    """Seeded runs repeated into fresh directories must produce
    byte-identical CSV payloads and semantically identical reports."""
    problems = []
    runs = {
        "random points": (
            ["generate", "--kind", "random", "--s", "0.8",
             "--delta", str(2.0 ** -7), "--seed", "5"],
            "generate", "points.csv",
        ),
        "planted points": (
            ["generate", "--kind", "planted", "--n", "256", "--k", "16",
             "--seed", "1"],
            "generate", "points.csv",
        ),
        "projection profile": (
            ["project", "--target", "kaufman11", "--x-input", "",
             "--x-sample", "8", "--level-min", "0", "--level-max", "8",
             "--seed", "3"],
            "project", "per_x.csv",
        ),
    }

    src = str(tmp_path / "src")
    rc = cli_main(["generate", "--kind", "fourcorner",
                   "--delta", str(4.0 ** -4), "--out", src])
    assert rc == 0

    for name, (argv, command, csv_name) in runs.items():
        payloads, reports = [], []
        for tag in ("a", "b"):
            out = str(tmp_path / f"{command}-{name.split()[0]}-{tag}")
            args = list(argv)
            if "--x-input" in args:
                args[args.index("--x-input") + 1] = os.path.join(
                    src, "points.csv"
                )
            rc = cli_main(args + ["--out", out])
            if rc != 0:
                problems.append(f"{name}: exit code {rc}")
                break
            with open(os.path.join(out, csv_name), "rb") as fh:
                payloads.append(fh.read())
            reports.append(_normalized_report(out, command))
        if len(payloads) == 2 and payloads[0] != payloads[1]:
            problems.append(f"{name}: {csv_name} differs between reruns")
        if len(reports) == 2 and reports[0] != reports[1]:
            problems.append(f"{name}: reports differ beyond timing")

    _verdict(capsys, 12, problems,
             "3 seeded commands rerun byte-identically")
