from __future__ import annotations

import random
from fractions import Fraction as Fr

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from heterochaos.exact import BudgetExceeded, interval
from heterochaos.maps import (
    AffinePair,
    MapSystem,
    dump_system,
    ends,
    invert_system,
    load_system,
    orbit,
    preset,
    project,
    resolve,
    sigma,
    tau,
)

unit = st.fractions(min_value=0, max_value=1, max_denominator=10 ** 6)


def hc3d_oracle(x: Fr, y: Fr, z: Fr) -> tuple[str, tuple[Fr, Fr, Fr]]:
    """The hetero-chaotic cube map written out branch by branch."""
    if x < Fr(1, 3):
        return "A", (3 * x, Fr(2, 3) * y, z / 2)
    if x < Fr(2, 3):
        return "D", (3 * x - 1, Fr(2, 3) * y, (z + 1) / 2)
    if z < Fr(1, 2):
        return "B", (3 * x - 2, Fr(2, 3) + y / 6, 2 * z)
    return "C", (3 * x - 2, Fr(5, 6) + y / 6, 2 * z - 1)


def _fr(q) -> Fr:
    return Fr(int(q.numerator), int(q.denominator))


def _interior_point(rng: random.Random, m: MapSystem):
    while True:
        p = tuple(mpq(rng.randrange(1, 10 ** 9), 10 ** 9) for _ in range(m.dim))
        if not m.evaluate(p).boundary:
            return p


@given(unit, unit, unit)
def test_hc3d_matches_oracle(x, y, z):
    m = preset("hc3d")
    step = m.evaluate((mpq(x), mpq(y), mpq(z)))
    sym, img = hc3d_oracle(x, y, z)
    assert step.symbol == sym
    assert tuple(_fr(u) for u in step.image) == img


def test_preset_examples():
    m = preset("hc3d")
    step = m.evaluate((mpq(1, 4), mpq(3, 4), mpq(1, 3)))
    assert step.symbol == "A" and step.image == (mpq(3, 4), mpq(1, 2), mpq(1, 6))
    step = m.evaluate((mpq(3, 4), mpq(1, 2), mpq(1, 6)))
    assert step.symbol == "B" and step.image == (mpq(1, 4), mpq(3, 4), mpq(1, 3))
    assert preset("hc3d-k(2)").branches == m.branches


@pytest.mark.parametrize("bad", ["nope", "hc3d-k(1)", "hc3d-k(0)", "hc3d-k(2.5)", "hc2d-k(x)"])
def test_preset_errors(bad):
    with pytest.raises(ValueError):
        preset(bad)


def test_preset_k_argument():
    assert preset("hc3d", k=3).symbols == ("A", "B1", "B2", "B3", "D")
    with pytest.raises(ValueError):
        preset("hc3d", k=1)


def test_evaluate_examples():
    m = preset("hc3d")
    step = m.evaluate((mpq(1, 3), mpq(1, 2), mpq(1, 2)))
    assert step.symbol == "D" and step.image[0] == 0 and step.boundary
    origin = (mpq(0),) * 3
    assert m.evaluate(origin).symbol == "A" and m(origin) == origin
    one = (mpq(1),) * 3
    assert m.evaluate(one).symbol == "C" and m(one) == one
    with pytest.raises(ValueError):
        m.evaluate((mpq(2), mpq(0), mpq(0)))


def test_generalized_branch_formula():
    k = 5
    m = preset(f"hc3d-k({k})")
    for j in range(1, k + 1):
        b = m.branch(f"B{j}")
        assert b.domain.side("Z").lo == mpq(j - 1, k) and b.domain.side("Z").hi == mpq(j, k)
        assert b.action[2] == AffinePair(mpq(-(j - 1)), mpq(k))
        assert b.action[1] == AffinePair(mpq(2, 3) + mpq(j - 1, 3 * k), mpq(1, 3 * k))
    assert max(abs(b.action[2].slope) for b in m.branches) == 5 > abs(m.branches[0].action[0].slope)


def test_baker_presets():
    b2 = preset("baker2d")
    for i, s in enumerate(b2.symbols):
        assert b2.branch(s).action[1] == AffinePair(mpq(i, 3), mpq(1, 3))
    b3 = preset("baker3d")
    for i in (0, 1):
        for j in (0, 1):
            b = b3.branch(f"Q{i}{j}")
            assert b.action[1] == AffinePair(mpq(2 * i + j, 4), mpq(1, 4))
            assert b.domain.side("X").lo == mpq(i, 2) and b.domain.side("Z").lo == mpq(j, 2)


@pytest.mark.parametrize("name", ["baker2d", "baker3d", "hc2d", "hc3d", "hc2d-k(3)",
                                  "hc3d-k(3)", "hc3d-k(5)", "hc3d-k(6)"])
def test_partition_is_exact(name):
    m = preset(name)
    m.check_partition()
    rng = random.Random(11)
    for _ in range(500):
        p = tuple(mpq(rng.randrange(0, 10 ** 4 + 1), 10 ** 4) for _ in range(m.dim))
        owners = [b.symbol for b in m.branches if p in b.domain]
        assert len(owners) == 1


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
def test_volume_preservation(k):
    for b in preset(f"hc3d-k({k})").branches:
        assert b.jacobian() == 1


def test_inverse_domains_and_sigma():
    inv = invert_system(preset("hc3d"))
    dom = {b.symbol: b.domain for b in inv.branches}
    third, half = mpq(2, 3), mpq(1, 2)
    assert dom["A'"].sides == (interval(0, 1), interval(0, third), interval(0, half))
    assert dom["D'"].sides == (interval(0, 1), interval(0, third), interval(half, 1))
    assert dom["B'"].sides == (interval(0, 1), interval(third, mpq(5, 6)), interval(0, 1))
    assert dom["C'"].sides == (interval(0, 1), interval(mpq(5, 6), 1), interval(0, 1))
    s = sigma()
    assert s(mpq(4, 5)) == mpq(4, 5)
    assert s(mpq(1, 2)) == mpq(3, 4)
    assert [f.slope for _, f in s.pieces] == [mpq(3, 2), 6, 6]
    assert inv((mpq(3, 4), mpq(1, 2), mpq(1, 6))) == (mpq(1, 4), mpq(3, 4), mpq(1, 3))


def test_inverse_refuses_two_to_one():
    with pytest.raises(ValueError, match="one-to-one"):
        invert_system(preset("hc2d"))


@settings(max_examples=300)
@given(st.integers(0, 2 ** 32))
def test_round_trip(seed):
    m = preset("hc3d")
    inv = invert_system(m)
    p = _interior_point(random.Random(seed), m)
    assert inv(m(p)) == p


@settings(max_examples=300)
@given(unit, unit, unit)
def test_projection_commutes(x, y, z):
    f3, f2 = preset("hc3d"), preset("hc2d")
    p = (mpq(x), mpq(y), mpq(z))
    assert project(f3(p)) == f2(project(p))


def test_projection_examples():
    assert project((mpq(1, 4), mpq(3, 4), mpq(1, 3))) == (mpq(1, 4), mpq(1, 3))
    assert project((0, 0, 0)) == (0, 0)


def test_orbit_examples():
    t = tau()
    x = mpq(1, 7)
    seen = [x]
    for _ in range(6):
        x = t(x)
        seen.append(x)
    assert seen == [mpq(n, 7) for n in (1, 3, 2, 6, 4, 5, 1)]
    m = preset("hc3d")
    p = (mpq(1, 4), mpq(3, 4), mpq(1, 3))
    seg = orbit(m, p, 2)
    assert seg.points[-1] == p and seg.symbols[:2] == ("A", "B")
    assert seg.boundary_flag is None
    zero = (mpq(0),) * 3
    seg = orbit(m, zero, 5, 3)
    assert set(seg.points) == {zero} and seg.start == 3
    assert seg.boundary_flag == 0


def test_orbit_guards(monkeypatch):
    m = preset("hc3d")
    with pytest.raises(ValueError):
        orbit(preset("hc2d"), (mpq(1, 5), mpq(1, 5)), 1, 1)
    monkeypatch.setenv("HETEROCHAOS_MAX_BITS", "64")
    with pytest.raises(BudgetExceeded):
        orbit(m, (mpq(1, 7), mpq(1, 5), mpq(1, 3)), 0, 200)


def test_ends():
    assert ends(tau(), 0) == [0, 1]
    assert ends(tau(), 1) == [0, mpq(1, 3), mpq(2, 3), 1]
    assert ends(sigma(), 1) == [0, mpq(2, 3), mpq(5, 6), 1]
    for n in range(1, 6):
        assert len(ends(tau(), n)) == 3 ** n + 1
        assert len(ends(sigma(), n)) == 3 ** n + 1
    assert ends(tau(), 2) == [mpq(i, 9) for i in range(10)]


@pytest.mark.parametrize("name", ["baker2d", "baker3d", "hc2d", "hc3d", "hc3d-k(4)"])
def test_map_spec_round_trip(name, tmp_path):
    m = preset(name)
    text = dump_system(m)
    back = load_system(text)
    assert back.branches == m.branches and back.axes == m.axes
    path = tmp_path / "m.txt"
    path.write_text("# comment\n" + text)
    assert resolve(str(path)).branches == m.branches


@pytest.mark.parametrize("text", [
    "axes XY\nbranch A [0/1,1/1] 0/1:1/1\n",
    "branch A [0/1,1/1] [0/1,1/1] 0/1:1/1 0/1:1/1\n",
    "axes X\nbranch A [0/1,1/2) 0/1:2/1\n",
    "axes X\nfoo 3\n",
])
def test_map_spec_rejects_bad_text(text):
    with pytest.raises(ValueError):
        load_system(text)
