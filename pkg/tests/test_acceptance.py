"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

from __future__ import annotations

import random
import time

import numpy as np
import pytest
from gmpy2 import mpq

from heterochaos.bricks import brick_pipeline, default_engine, as_forward_orbit, two_brick_chain
from heterochaos.ergodic import (
    SAMPLE_DENOMINATOR,
    birkhoff,
    leaf_contraction,
    lyapunov,
    sample_numerators,
)
from heterochaos.maps import invert_system, preset, project
from heterochaos.periodic import enumerate_periodic, fixed_point_of_word
from heterochaos.symbolic import brute_force_admissible, count_admissible, is_admissible, non_sft_witnesses


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def _random_point(rng: random.Random, dim: int = 3):
    return tuple(mpq(rng.randrange(0, 10 ** 6 + 1), 10 ** 6) for _ in range(dim))


def test_criterion_01_round_trip(report):
    m = preset("hc3d")
    inv = invert_system(m)
    rng = random.Random(1)
    t0 = time.perf_counter()
    done = bad = 0
    while done < 10_000:
        p = _random_point(rng)
        step = m.evaluate(p)
        if step.boundary:
            continue
        done += 1
        bad += inv(step.image) != p
    elapsed = time.perf_counter() - t0
    report(1, bad == 0 and elapsed < 10,
           f"{done} points, {bad} round-trip failures, {elapsed:.2f} s (limit 10 s)")


def test_criterion_02_volume(report):
    names = ["hc3d"] + [f"hc3d-k({k})" for k in (2, 3, 5, 6)]
    bad = [(n, b.symbol) for n in names for b in preset(n).branches if b.jacobian() != 1]
    report(2, not bad, f"{len(names)} systems, branches with slope product != 1: {bad or 'none'}")


def test_criterion_03_projection(report):
    f3, f2 = preset("hc3d"), preset("hc2d")
    rng = random.Random(3)
    bad = 0
    for _ in range(10_000):
        p = _random_point(rng)
        bad += project(f3(p)) != f2(project(p))
    report(3, bad == 0, f"10000 points, {bad} mismatches")


def test_criterion_04_lyapunov(report):
    t0 = time.perf_counter()
    est = lyapunov(preset("hc3d"), 100, 100_000, seed=0)
    k5 = lyapunov(preset("hc3d-k(5)"), 100, 100_000, seed=0)
    elapsed = time.perf_counter() - t0
    ly, lz, lz5 = est.value("Y"), est.value("Z"), k5.value("Z")
    ok = (est.exact[0] == 3 and abs(ly - 0.41997) <= 0.01 and abs(lz - 0.79370) <= 0.01
          and abs(lz5 - 1.0772) <= 0.02 and elapsed < 120)
    report(4, ok, f"X={est.exact[0]} Y={ly:.5f} Z={lz:.5f} k(5) Z={lz5:.5f}, {elapsed:.1f} s")


def test_criterion_05_neutral_family(report):
    m = preset("hc3d")
    orb = fixed_point_of_word(m, "AB")
    two = enumerate_periodic(m, 2, min_period=2)
    in_1d = any(o.word_str == "AB" for o in enumerate_periodic(m, 2, kind="1d"))
    in_2d = any(o.word_str == "AB" for o in enumerate_periodic(m, 2, kind="2d"))
    family_ok = all(m.follow((mpq(1, 4), mpq(3, 4), z), "AB")[0] == (mpq(1, 4), mpq(3, 4), z)
                    for z in (mpq(0), mpq(1, 5), mpq(1, 2), mpq(9, 10)))
    ok = (orb.kind == "neutral" and orb.chi("Z") == 1 and orb.point[:2] == (mpq(1, 4), mpq(3, 4))
          and family_ok and any(o.word_str == "AB" and o.kind == "neutral" for o in two)
          and not in_1d and not in_2d)
    report(5, ok, f"AB: kind={orb.kind} chi_Z={orb.chi('Z')} family={orb.neutral[0][1]}")


def test_criterion_06_enumeration_integrity(report):
    m = preset("hc2d")
    first = enumerate_periodic(m, 10)
    second = enumerate_periodic(m, 10)
    bad = 0
    for o in first:
        p = o.point
        for s in o.word:
            bad += p not in m.branch(s).domain
            p = m.branch(s).apply(p)
        bad += p != o.point
        bad += not is_admissible(m, o.word * 2)
    stable = [(o.word, o.point) for o in first] == [(o.word, o.point) for o in second]
    report(6, bad == 0 and stable, f"{len(first)} orbits to period 10, {bad} failures, stable={stable}")


def test_criterion_07_density_grid(report):
    m = preset("hc2d")
    hits = {"1d": np.zeros((8, 8), dtype=bool), "2d": np.zeros((8, 8), dtype=bool)}
    for o in enumerate_periodic(m, 13):
        if o.kind not in hits:
            continue
        for x, z in o.points(m):
            hits[o.kind][min(int(x * 8), 7), min(int(z * 8), 7)] = True
        if all(v.all() for v in hits.values()):
            break  # every cell is hit; more orbits cannot empty one
    empty = {k: int((~v).sum()) for k, v in hits.items()}
    report(7, all(v == 0 for v in empty.values()), f"empty 8x8 cells: {empty}")


def test_criterion_08_admissibility(report):
    m = preset("hc3d")
    counts = count_admissible(m, 18)
    brute_ok = all(counts.adm(n) == brute_force_admissible(m, n) for n in range(1, 11))
    small = tuple(counts.adm(n) for n in (1, 2, 3))
    gaps = [float(counts.gamma(n)) - 3 for n in range(8, 19)]
    trend = (all(g > 0 for g in gaps) and all(a > b for a, b in zip(gaps, gaps[1:]))
             and all(0.5 <= g / (3 / n) <= 2 for g, n in zip(gaps, range(8, 19))))
    witnesses = all(not is_admissible(m, bad) and is_admissible(m, good)
                    for bad, good in map(non_sft_witnesses, range(1, 13)))
    ok = brute_ok and small == (4, 14, 48) and trend and witnesses
    report(8, ok, f"brute N<=10 {brute_ok}, adm(1..3)={small}, trend {trend}, witnesses {witnesses}")


def _check_pipeline(res, eps, engine) -> bool:
    orb, brick = res.orbit, res.brick
    m = engine.system
    chi = dict(zip(m.axes, orb.multipliers))
    exp_, con, het = engine.expand, engine.contract, engine.hetero
    return (brick.b0.contains_open(orb.point)
            and all(abs(a - b) < eps for a, b in zip(orb.point, res.target))
            and orb.period == brick.j + brick.k
            and m.follow(orb.point, orb.word)[0] == orb.point
            and abs(chi[exp_]) > 1 and abs(chi[het]) > 1 and abs(chi[con]) < 1)


def test_criterion_09_brick_pipeline(report):
    eps = mpq(1, 1000)
    rng = np.random.default_rng(9)
    targets = [tuple(mpq(int(a), SAMPLE_DENOMINATOR) for a in sample_numerators(rng, 3))
               for _ in range(100)]
    eng = default_engine()
    forward = sum(_check_pipeline(brick_pipeline(t, eps, eng), eps, eng) for t in targets)
    dual = eng.dual()
    m = preset("hc3d")
    dual_ok = 0
    for t in targets:
        res = brick_pipeline(t, eps, dual)
        fwd = as_forward_orbit(res.orbit, m)
        dual_ok += _check_pipeline(res, eps, dual) and fwd.kind == "1d"
    report(9, forward == 100 and dual_ok == 100,
           f"forward {forward}/100 two-dimensional, dual {dual_ok}/100 one-dimensional, eps=1/1000")


def test_criterion_10_chain(report):
    rng = random.Random(10)
    bricks = []
    for _ in range(5):
        target = _random_point(rng)
        bricks.append(brick_pipeline(target, mpq(1, 100)).brick)
    chain = two_brick_chain(bricks)
    m = preset("hc3d")
    nested = all(b.U.side(a).closure_inside(prev.U.side(a))
                 for prev, b in zip(chain.links, chain.links[1:]) for a in "XZ")
    last = chain.final
    inside = True
    for link, brick in zip(chain.links, bricks):
        img = last.U
        for s in last.word[:link.N]:
            img = m.branch(s).image_box(img)
        inside &= img.subset_of(brick.b0)
    report(10, nested and inside, f"indices N_s={chain.indices}, nested={nested}, inside={inside}")


def test_criterion_11_leaves(report):
    rng = np.random.default_rng(11)
    bound = mpq(2, 3) ** 100
    y_ok = small = 0
    for a in sample_numerators(rng, 100).tolist():
        final = leaf_contraction(mpq(a, SAMPLE_DENOMINATOR), 100).final
        y_ok += final.y_length <= bound
        small += final.z_length < mpq(1, 1000)
    all_r = leaf_contraction(1, 100)
    exception = all(s.z_length == 1 for s in all_r.steps)
    report(11, y_ok == 100 and small >= 95 and exception,
           f"|Y_n| bound {y_ok}/100, |Z_n| < 1e-3 in {small}/100, all-R leaf keeps |Z|=1: {exception}")


def test_criterion_12_birkhoff(report):
    m = preset("hc3d")
    x = birkhoff(m, "coord_x", 20, 1_000_000, seed=12)
    r2 = birkhoff(m, "indicator_R2", 20, 1_000_000, seed=12)
    ok = (x.spread <= 0.02 and r2.spread <= 0.02
          and abs(x.mean - 0.5) <= 0.01 and abs(r2.mean - 1 / 3) <= 0.01)
    report(12, ok, f"coord_x mean {x.mean:.5f} spread {x.spread:.5f}; "
                   f"indicator_R2 mean {r2.mean:.5f} spread {r2.spread:.5f}")
