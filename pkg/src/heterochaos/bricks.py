"""Biased points, (j,k)-bricks, and nested brick chains.

The engine works on any system with three roles for its axes:

* an *expanding* axis on which the system acts as a full-branch interval
  map (X and tau for the forward map),
* a *contracting* axis on which the inverse system acts as a full-branch
  interval map (Y and sigma for the forward map),
* the *hetero* axis Z, where the slope is 2 or 1/2 depending on the
  expanding-axis piece.

Running the same engine on the inverse system gives the dual pipeline.

Biasedness is only certified for points whose itineraries in both time
directions are eventually periodic; for those every cumulative sum of the
``L`` sequence has a closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import gmpy2
from gmpy2 import mpq

from .exact import (
    BudgetExceeded,
    Box,
    DyadicInterval,
    HeterochaosError,
    Rational,
    UNIT,
    check_bits,
)
from .maps import (
    IntervalMap,
    MapSystem,
    Point,
    axis_map,
    invert_system,
    orbit,
    preset,
)
from .periodic import PeriodicOrbit, fixed_point_of_word


class BrickError(HeterochaosError):
    """A brick could not be built for the requested point and indices."""


# ---------------------------------------------------------------------------
# eventually periodic sequences and the cumulative profile

@dataclass(frozen=True)
class EventuallyPeriodic:
    """``prefix`` followed by ``cycle`` repeated forever."""

    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(self.prefix))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise ValueError("the repeating cycle must be nonempty")

    def __getitem__(self, i: int) -> int:
        if i < len(self.prefix):
            return self.prefix[i]
        return self.cycle[(i - len(self.prefix)) % len(self.cycle)]

    def head(self, n: int) -> tuple[int, ...]:
        return tuple(self[i] for i in range(n))

    def partial_sum(self, n: int) -> int:
        """Sum of the first ``n`` terms, in closed form."""
        p = len(self.prefix)
        if n <= p:
            return sum(self.prefix[:n])
        q, r = divmod(n - p, len(self.cycle))
        return sum(self.prefix) + q * sum(self.cycle) + sum(self.cycle[:r])

    @property
    def drift(self) -> int:
        return sum(self.cycle)

    def map(self, table: Sequence[int]) -> EventuallyPeriodic:
        return EventuallyPeriodic(tuple(table[d] for d in self.prefix),
                                  tuple(table[d] for d in self.cycle))

    def extremum_partial_sum(self, kind) -> int:
        """``min`` or ``max`` of partial sums over all ``n >= 0``.

        Only valid when the drift pushes the sums away from the extremum
        (positive drift for ``min``, negative for ``max``); then one pass
        over the prefix and a single cycle suffices.
        """
        n = len(self.prefix) + len(self.cycle)
        return kind(self.partial_sum(i) for i in range(n + 1))


@dataclass(frozen=True)
class PhiProfile:
    """Signs ``L_n`` of a point, as two eventually periodic sequences.

    ``forward[i]`` is ``L_i`` for ``i >= 0``; ``backward[i]`` is ``L_{-1-i}``.
    """

    forward: EventuallyPeriodic
    backward: EventuallyPeriodic

    def L(self, n: int) -> int:
        return self.forward[n] if n >= 0 else self.backward[-1 - n]

    def phi(self, m: int, n: int) -> int:
        if m > n:
            raise ValueError(f"phi needs m <= n, got m={m} n={n}")
        def cum(t: int) -> int:  # phi(0, t) for t >= 0, -phi(t, 0) for t < 0
            return self.forward.partial_sum(t) if t >= 0 else -self.backward.partial_sum(-t)
        return cum(n) - cum(m)

    @property
    def is_biased(self) -> bool:
        return self.forward.drift > 0 and self.backward.drift > 0

    @property
    def beta(self) -> int:
        """``-min over m <= 0 of phi(m, 0)``."""
        self._require_biased()
        return -self.backward.extremum_partial_sum(min)

    @property
    def alpha(self) -> int:
        """``-min over n >= 0 of phi(0, n)``, the forward analogue of beta."""
        self._require_biased()
        return -self.forward.extremum_partial_sum(min)

    def _require_biased(self):
        if not self.is_biased:
            raise ValueError("profile is not biased: both drifts must be positive")

    def is_right_biased(self, k: int) -> bool:
        if k <= 0:
            return False
        top = max(self.forward.partial_sum(i) for i in range(k))
        return self.forward.partial_sum(k) > top and self.phi(0, k) > self.beta

    def is_left_biased(self, j: int) -> bool:
        if j <= 0:
            return False
        top = max(self.backward.partial_sum(i) for i in range(j))
        return self.backward.partial_sum(j) > top and self.phi(-j, 0) > self.alpha

    def right_biased(self, start: int = 1) -> Iterator[int]:
        """Right-biased ``k >= start`` in increasing order (infinite when biased)."""
        self._require_biased()
        beta = self.beta
        k = max(start, 1)
        record = max(self.forward.partial_sum(i) for i in range(k))
        while True:
            s = self.forward.partial_sum(k)
            if s > record and s > beta:
                yield k
            record = max(record, s)
            k += 1

    def left_biased(self, start: int = 1) -> Iterator[int]:
        self._require_biased()
        alpha = self.alpha
        j = max(start, 1)
        record = max(self.backward.partial_sum(i) for i in range(j))
        while True:
            s = self.backward.partial_sum(j)
            if s > record and s > alpha:
                yield j
            record = max(record, s)
            j += 1


def phi(prof: PhiProfile, m: int, n: int) -> int:
    return prof.phi(m, n)


def biased_pairs(prof: PhiProfile, n: int) -> tuple[int, int]:
    """The smallest biased pair with both indices above ``n``."""
    j = next(prof.left_biased(n + 1))
    k = next(prof.right_biased(n + 1))
    return j, k


# ---------------------------------------------------------------------------
# the engine

def _log2_slope(d: Rational) -> int:
    d = abs(d)
    if d == 2:
        return 1
    if d == mpq(1, 2):
        return -1
    raise ValueError(f"hetero-axis slope {d} is not 2 or 1/2")


@dataclass(frozen=True)
class BrickEngine:
    system: MapSystem
    inverse: MapSystem = field(repr=False)
    expand: str
    contract: str
    hetero: str = "Z"

    @classmethod
    def for_system(cls, m: MapSystem, inverse: MapSystem | None = None) -> BrickEngine:
        inverse = inverse or invert_system(m)
        expand = contract = None
        for a in m.axes:
            if a == "Z":
                continue
            try:
                f = axis_map(m, a)
                if f.min_slope > 1:
                    expand = a
            except ValueError:
                pass
            try:
                g = axis_map(inverse, a)
                if g.min_slope > 1:
                    contract = a
            except ValueError:
                pass
        if m.dim != 3 or expand is None or contract is None or expand == contract:
            raise ValueError(f"{m.name} has no expanding/contracting axis pair for bricks")
        return cls(m, inverse, expand, contract)

    def dual(self) -> BrickEngine:
        return BrickEngine(self.inverse, self.system, self.contract, self.expand, self.hetero)

    @cached_property
    def fmap(self) -> IntervalMap:
        """Forward interval map on the expanding axis."""
        return axis_map(self.system, self.expand)

    @cached_property
    def gmap(self) -> IntervalMap:
        """Interval map of the inverse system on the contracting axis."""
        return axis_map(self.inverse, self.contract)

    @cached_property
    def forward_signs(self) -> tuple[int, ...]:
        return self._signs(self.system, self.expand, self.fmap, 1)

    @cached_property
    def backward_signs(self) -> tuple[int, ...]:
        return self._signs(self.inverse, self.contract, self.gmap, -1)

    def _signs(self, m: MapSystem, axis: str, f: IntervalMap, sign: int) -> tuple[int, ...]:
        i, z = m.axis(axis), m.axis(self.hetero)
        out: dict[int, int] = {}
        for b in m.branches:
            piece = f.piece_index(b.domain.sides[i].midpoint())
            val = sign * _log2_slope(b.action[z].slope)
            if out.setdefault(piece, val) != val:
                raise ValueError(f"hetero slope of {m.name} is not a function of the {axis} piece")
        return tuple(out[i] for i in range(len(f.pieces)))

    def default_cycles(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Net-positive tails (plus, plus, minus) for both directions."""
        def cycle(signs):
            plus = [i for i, s in enumerate(signs) if s > 0]
            minus = [i for i, s in enumerate(signs) if s < 0]
            return (plus[0], plus[-1], minus[0])
        return cycle(self.forward_signs), cycle(self.backward_signs)

    # -- points and profiles ------------------------------------------------

    def assemble(self, e, c, z) -> Point:
        coords = {self.expand: mpq(e), self.contract: mpq(c), self.hetero: mpq(z)}
        return tuple(coords[a] for a in self.system.axes)

    def coord(self, p, axis: str):
        return p[self.system.axis(axis)]

    def profile(self, cert: BiasedCertificate) -> PhiProfile:
        return PhiProfile(cert.forward.map(self.forward_signs),
                          cert.backward.map(self.backward_signs))


ENGINE_CACHE: dict[str, BrickEngine] = {}


def default_engine(name: str = "hc3d") -> BrickEngine:
    if name not in ENGINE_CACHE:
        ENGINE_CACHE[name] = BrickEngine.for_system(preset(name))
    return ENGINE_CACHE[name]


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class BiasedCertificate:
    """Piece itineraries of the expanding coordinate under the forward map
    and of the contracting coordinate under the inverse map."""

    forward: EventuallyPeriodic
    backward: EventuallyPeriodic


@dataclass(frozen=True)
class BiasedPoint:
    point: Point
    certificate: BiasedCertificate
    engine: BrickEngine = field(repr=False, compare=False)

    @cached_property
    def profile(self) -> PhiProfile:
        return self.engine.profile(self.certificate)


def eventual_itinerary(f: IntervalMap, u, max_steps: int = 100_000) -> EventuallyPeriodic:
    """Exact piece itinerary of a rational under a full-branch map.

    Rationals have eventually periodic orbits; the cycle is found by
    remembering visited values.
    """
    seen: dict = {}
    digits = []
    u = mpq(u)
    for n in range(max_steps):
        if u in seen:
            start = seen[u]
            return EventuallyPeriodic(tuple(digits[:start]), tuple(digits[start:]))
        seen[u] = n
        i = f.piece_index(u)
        digits.append(i)
        u = f.pieces[i][1](u)
    raise BudgetExceeded(f"no cycle within {max_steps} steps")


def certificate_of_point(p, engine: BrickEngine | None = None,
                         max_steps: int = 100_000) -> BiasedCertificate:
    engine = engine or default_engine()
    return BiasedCertificate(
        eventual_itinerary(engine.fmap, engine.coord(p, engine.expand), max_steps),
        eventual_itinerary(engine.gmap, engine.coord(p, engine.contract), max_steps),
    )


def profile_of_point(p, engine: BrickEngine | None = None) -> PhiProfile:
    engine = engine or default_engine()
    return engine.profile(certificate_of_point(p, engine))


def digits_for(precision: Rational, f: IntervalMap) -> int:
    """Smallest n with ``min_slope**n >= 1/precision``, plus 2."""
    n, scale = 0, mpq(1)
    while scale * precision < 1:
        scale *= f.min_slope
        n += 1
    return n + 2


def _itinerary(f: IntervalMap, u, n: int) -> tuple[int, ...]:
    out = []
    for _ in range(n):
        i = f.piece_index(u)
        out.append(i)
        u = f.pieces[i][1](u)
    return tuple(out)


def _non_dyadic_near(t, eps) -> Rational:
    """A rational with a pure power-of-3 denominator within ``eps`` of ``t``."""
    b = 1
    while mpq(1, 3 ** b) >= eps:
        b += 1
    n = 3 ** b
    c = min(int(gmpy2.floor(mpq(t) * n)), n - 1)
    return mpq(3 * c + 1, 3 * n)


def construct_biased(target, eps, engine: BrickEngine | None = None,
                     cycles: tuple[Sequence[int], Sequence[int]] | None = None) -> BiasedPoint:
    """A regular biased point within ``eps`` of ``target`` in every coordinate.

    The expanding and contracting coordinates copy the target's itineraries
    deep enough to land within ``eps`` and then repeat net-positive cycles;
    the hetero coordinate has a power-of-3 denominator, so no forward or
    backward image of it is a dyadic rational.
    """
    engine = engine or default_engine()
    eps = mpq(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    target = tuple(mpq(u) for u in target)
    fcyc, bcyc = cycles or engine.default_cycles()
    f, g = engine.fmap, engine.gmap
    fpre = _itinerary(f, engine.coord(target, engine.expand), digits_for(eps, f))
    bpre = _itinerary(g, engine.coord(target, engine.contract), digits_for(eps, g))
    cert = BiasedCertificate(EventuallyPeriodic(fpre, tuple(fcyc)),
                             EventuallyPeriodic(bpre, tuple(bcyc)))
    e = f.point_from_digits(fpre, fcyc)
    c = g.point_from_digits(bpre, bcyc)
    z = _non_dyadic_near(engine.coord(target, engine.hetero), eps)
    p = engine.assemble(e, c, z)
    bp = BiasedPoint(p, cert, engine)
    if not bp.profile.is_biased:
        raise ValueError("the chosen cycles are not net-positive in both directions")
    horizon = len(fpre) + 2 * len(fcyc)
    back = len(bpre) + 2 * len(bcyc)
    seg = orbit(engine.system, p, horizon, back, engine.inverse)
    if seg.boundary_flag is not None:
        raise BrickError("constructed point meets a symbol-set boundary; perturb the target")
    if any(abs(a - b) >= eps for a, b in zip(p, target)):
        raise AssertionError("constructed point left the eps-neighborhood")
    return bp


# ---------------------------------------------------------------------------
# bricks

@dataclass(frozen=True)
class Brick:
    """Boxes ``B^m`` for ``m = -j..k`` around a biased point.

    ``symbols[m + j]`` is the symbol set containing ``B^m`` for ``m < k``.
    """

    j: int
    k: int
    boxes: tuple[Box, ...]
    symbols: tuple[str, ...]
    point: Point
    engine: BrickEngine = field(repr=False, compare=False)

    def box(self, m: int) -> Box:
        if not -self.j <= m <= self.k:
            raise IndexError(f"brick index {m} outside -{self.j}..{self.k}")
        return self.boxes[m + self.j]

    @property
    def b0(self) -> Box:
        return self.box(0)

    @property
    def bottom(self) -> Box:
        return self.box(-self.j)

    @property
    def top(self) -> Box:
        return self.box(self.k)

    @property
    def word(self) -> tuple[str, ...]:
        return self.symbols

    def interior_flags(self) -> dict[str, bool]:
        e, c, z = self.engine.expand, self.engine.contract, self.engine.hetero
        return {
            f"bottom_{e}": self.bottom.side(e).closure_inside(UNIT),
            f"bottom_{z}": self.bottom.side(z).closure_inside(UNIT),
            f"top_{c}": self.top.side(c).closure_inside(UNIT),
        }

    @property
    def interior(self) -> bool:
        return all(self.interior_flags().values())

    def within(self, p, eps) -> bool:
        """Every point of ``B^0`` is within ``eps`` of ``p`` in each coordinate."""
        return all(s.hi - u < eps and u - s.lo < eps for s, u in zip(self.b0.sides, p))


def build_brick(bp: BiasedPoint, j: int, k: int) -> Brick:
    """The (j,k)-brick around a biased point, by the three endpoint rules.

    ``B^0`` takes the depth-``k`` cylinder of the expanding map, the
    depth-``j`` cylinder of the inverse map on the contracting axis, and the
    dyadic interval of length ``2**-phi(0,k)`` around the hetero
    coordinate.  Every other ``B^m`` is an exact image or preimage, and the
    brick invariants are then checked.
    """
    eng = bp.engine
    prof = bp.profile
    if j < 0 or k <= 0:
        raise ValueError("bricks need j >= 0 and k > 0")
    if not (prof.is_right_biased(k) and (j == 0 or prof.is_left_biased(j))):
        raise BrickError(f"({j},{k}) is not a biased pair for this point")
    m = eng.system
    p = bp.point
    seg = orbit(m, p, k, j, eng.inverse)
    if seg.boundary_flag is not None:
        raise BrickError("point is not regular over the brick horizon")
    pts = seg.points  # pts[i] = p_{i-j}
    e_ax, c_ax, z_ax = eng.expand, eng.contract, eng.hetero
    try:
        e_side = eng.fmap.cylinder(eng.coord(p, e_ax), k)
        c_side = eng.gmap.cylinder(eng.coord(p, c_ax), j) if j else UNIT
    except ValueError as exc:
        raise BrickError(str(exc)) from None
    level = prof.phi(0, k)
    z0 = eng.coord(p, z_ax)
    z_side = DyadicInterval(int(gmpy2.floor(z0 * (1 << level))), level).to_interval()
    sides = {e_ax: e_side, c_ax: c_side, z_ax: z_side}
    b0 = Box(tuple(sides[a] for a in m.axes), m.axes)
    boxes: dict[int, Box] = {0: b0}
    symbols = seg.symbols[:j + k]
    for i in range(1, k + 1):
        b = m.branch(symbols[j + i - 1])
        prev = boxes[i - 1]
        if not prev.subset_of(b.domain):
            raise BrickError(f"B^{i - 1} leaves symbol set {b.symbol}")
        boxes[i] = b.image_box(prev)
    for i in range(-1, -j - 1, -1):
        b = m.branch(symbols[j + i])
        cur = b.preimage_box(boxes[i + 1])
        if not cur.subset_of(b.domain):
            raise BrickError(f"B^{i} leaves symbol set {b.symbol}")
        boxes[i] = cur
    for box in boxes.values():
        check_bits([s.lo for s in box.sides] + [s.hi for s in box.sides])
    brick = Brick(j, k, tuple(boxes[i] for i in range(-j, k + 1)), tuple(symbols), p, eng)
    _verify_brick(brick, bp, pts)
    return brick


def _verify_brick(brick: Brick, bp: BiasedPoint, pts) -> None:
    eng, prof = brick.engine, bp.profile
    m = eng.system
    j, k = brick.j, brick.k
    e_ax, c_ax, z_ax = eng.expand, eng.contract, eng.hetero
    for i in range(-j, k + 1):
        box = brick.box(i)
        if pts[i + j] not in box:
            raise AssertionError(f"p_{i} is not in B^{i}")
        if box.side(z_ax).length != mpq(1, 2 ** prof.phi(i, k)):
            raise AssertionError(f"|B^{i}_Z| is not 2^-phi({i},{k})")
        if box.side(e_ax).length != eng.fmap.cylinder(eng.coord(pts[i + j], e_ax), k - i).length:
            raise AssertionError(f"B^{i} does not follow the expanding-axis endpoint rule")
        if i < k:
            b = m.branch(brick.symbols[i + j])
            if b.image_box(box) != brick.box(i + 1):
                raise AssertionError(f"F(B^{i}) != B^{i + 1}")
    top, bottom = brick.top, brick.bottom
    if not (top.side(e_ax).is_full() and top.side(z_ax).is_full()):
        raise AssertionError("B^k is not a pizzabox over the expanding and hetero axes")
    if not bottom.side(c_ax).is_full() or bottom.side(e_ax).is_full() or bottom.side(z_ax).is_full():
        raise AssertionError("B^-j is not a breadbox along the contracting axis")


def interior_brick_search(bp: BiasedPoint, eps, max_tries: int = 400) -> Brick:
    """An interior brick whose ``B^0`` lies within ``eps`` of the point.

    ``j`` grows first (it controls the contracting edge), then ``k`` along
    right-biased values.
    """
    eps = mpq(eps)
    eng, prof, p = bp.engine, bp.profile, bp.point
    c0 = eng.coord(p, eng.contract)
    tries = 0
    for j in prof.left_biased(1):
        side = eng.gmap.cylinder(c0, j)
        if not (side.hi - c0 < eps and c0 - side.lo < eps):
            continue
        for k in prof.right_biased(1):
            tries += 1
            if tries > max_tries:
                raise BudgetExceeded(f"no interior brick within {max_tries} (j,k) candidates")
            e0 = eng.coord(p, eng.expand)
            if eng.fmap.cylinder(e0, k).length >= eps:
                continue
            if mpq(1, 2 ** prof.phi(0, k)) >= eps:
                continue
            brick = build_brick(bp, j, k)
            if brick.within(p, eps) and brick.interior:
                return brick
            if brick.within(p, eps) and not brick.interior_flags()[f"top_{eng.contract}"]:
                break  # the contracting edge only depends on j
    raise AssertionError("unreachable: left-biased indices are infinite")


def periodic_point_in_brick(brick: Brick) -> PeriodicOrbit:
    """The period-(j+k) point inside an interior brick, checked exactly."""
    if not brick.interior:
        raise BrickError("periodic points are only guaranteed in interior bricks")
    eng = brick.engine
    m = eng.system
    j = brick.j
    found = fixed_point_of_word(m, brick.symbols)
    if found is None:
        raise AssertionError("the composed brick map has no fixed point in B^-j")
    q = found.point
    if not brick.bottom.contains_open(q):
        raise AssertionError("fixed point is not interior to B^-j")
    p0 = q
    for s in brick.symbols[:j]:
        p0 = m.branch(s).apply(p0)
    if not brick.b0.contains_open(p0):
        raise AssertionError("periodic point is not interior to B^0")
    word = brick.symbols[j:] + brick.symbols[:j]
    orb = PeriodicOrbit(p0, word, found.multipliers, m.axes, (), found.boundary)
    res = m.follow(p0, word)
    if res is None or res[0] != p0:
        raise AssertionError("periodic point does not return after j+k steps")
    chi = dict(zip(m.axes, found.multipliers))
    if not (abs(chi[eng.expand]) > 1 and abs(chi[eng.hetero]) > 1 and abs(chi[eng.contract]) < 1):
        raise AssertionError(f"multipliers {found.multipliers} are not 2D unstable and 1D stable")
    return orb


def as_forward_orbit(orb: PeriodicOrbit, forward: MapSystem) -> PeriodicOrbit:
    """Re-express an orbit of the inverse system as an orbit of the forward map."""
    from .periodic import inverse_word

    word = inverse_word(orb.word)
    res = forward.follow(orb.point, word)
    if res is None or res[0] != orb.point:
        raise AssertionError("inverse orbit does not follow the forward word")
    return PeriodicOrbit(orb.point, word, tuple(1 / c for c in orb.multipliers),
                         forward.axes, (), res[1])


@dataclass(frozen=True)
class PipelineResult:
    target: Point
    biased: BiasedPoint
    brick: Brick
    orbit: PeriodicOrbit


def brick_pipeline(target, eps, engine: BrickEngine | None = None) -> PipelineResult:
    """Biased point within eps/2 of the target, then an interior brick within eps/2 of it."""
    engine = engine or default_engine()
    eps = mpq(eps)
    bp = construct_biased(target, eps / 2, engine)
    brick = interior_brick_search(bp, eps / 2)
    orb = periodic_point_in_brick(brick)
    return PipelineResult(tuple(mpq(u) for u in target), bp, brick, orb)


# ---------------------------------------------------------------------------
# nested chains of bricks

@dataclass(frozen=True)
class ChainLink:
    """``U`` is an interior breadbox whose first ``len(word)`` images follow ``word``."""

    U: Box
    word: tuple[str, ...]
    N: int  # F^N(U) lies in the link's brick B^0


@dataclass(frozen=True)
class ChainResult:
    links: tuple[ChainLink, ...]
    bricks: tuple[Brick, ...]

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(link.N for link in self.links)

    @property
    def final(self) -> ChainLink:
        return self.links[-1]


def push_box(m: MapSystem, box: Box, word: Sequence[str]) -> Box:
    """Forward image of ``box`` along ``word``, requiring each step in its symbol set."""
    for s in word:
        b = m.branch(s)
        if not box.subset_of(b.domain):
            raise AssertionError(f"box left symbol set {s}")
        box = b.image_box(box)
    return box


def pull_box(m: MapSystem, box: Box, word: Sequence[str]) -> Box:
    """Preimage of ``box`` along ``word`` (the inverse of :func:`push_box`)."""
    for s in reversed(word):
        box = m.branch(s).preimage_box(box)
    return box


def two_brick_chain(bricks: Sequence[Brick]) -> ChainResult:
    """Nested interior breadboxes whose orbits visit every brick in turn.

    The first breadbox is the bottom box of the first brick; each further
    brick intersects the current pizzabox image with its own bottom box and
    pulls the result back.
    """
    if not bricks:
        raise ValueError("the chain needs at least one brick")
    for b in bricks:
        if not b.interior:
            raise BrickError("every brick in the chain must be interior")
    eng = bricks[0].engine
    m = eng.system
    e_ax, c_ax, z_ax = eng.expand, eng.contract, eng.hetero
    first = bricks[0]
    links = [ChainLink(first.bottom, first.symbols, first.j)]
    for brick in bricks[1:]:
        link = links[-1]
        image = push_box(m, link.U, link.word)
        if not (image.side(e_ax).is_full() and image.side(z_ax).is_full()):
            raise AssertionError("image of the breadbox is not a pizzabox")
        q = image.intersect(brick.bottom)
        if q is None:
            raise AssertionError("pizzabox misses the next breadbox")
        U = pull_box(m, q, link.word)
        if push_box(m, U, link.word) != q:
            raise AssertionError("pull-back is not exact")
        for a in (e_ax, z_ax):
            if not U.side(a).closure_inside(link.U.side(a)):
                raise AssertionError(f"{a}-side of the new breadbox is not compactly nested")
        if not U.side(c_ax).is_full():
            raise AssertionError("new box is not a breadbox")
        links.append(ChainLink(U, link.word + brick.symbols, len(link.word) + brick.j))
    result = ChainResult(tuple(links), tuple(bricks))
    verify_chain(result)
    return result


def verify_chain(chain: ChainResult) -> None:
    """Check ``F^{N_s}(U_last)`` lies in ``B^0_s`` for every s, exactly."""
    eng = chain.bricks[0].engine
    m = eng.system
    last = chain.final
    for link, brick in zip(chain.links, chain.bricks):
        img = push_box(m, last.U, last.word[:link.N])
        if not img.subset_of(brick.b0):
            raise AssertionError(f"F^{link.N}(U) is not inside the brick")
    for a, b in zip(chain.links, chain.links[1:]):
        if not b.U.subset_of(a.U):
            raise AssertionError("breadboxes are not nested")
