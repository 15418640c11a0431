"""Periodic orbits from exact fixed points of composed branch actions.

Every admissible word ``w`` of length N gives a composed diagonal affine map
``F_w``; its fixed point, if it exists and its orbit really follows ``w``, is
a period-N point.  Orbits are enumerated one per necklace (Lyndon words over
the branch order of the system), so every orbit appears once, under its
lexicographically least rotation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from gmpy2 import mpq

from .exact import BudgetExceeded, HalfOpenInterval, Rational
from .maps import AffinePair, MapSystem, Point, inverse_symbol, words_to_str
from .symbolic import check_word, cylinder_box, fast_transfer

DEFAULT_WORD_BUDGET = 50_000_000

CLASSES = ("1d", "2d", "neutral")


def compose_word(m: MapSystem, word: Sequence[str]) -> tuple[AffinePair, ...]:
    """Per-axis affine pairs of ``f_w[N-1] o ... o f_w[0]``."""
    word = check_word(m, word)
    offsets = [mpq(0)] * m.dim
    slopes = [mpq(1)] * m.dim
    tables = m.tables
    for s in word:
        for i, (_, _, _, c, d) in enumerate(tables[s]):
            offsets[i] = c + d * offsets[i]
            slopes[i] = d * slopes[i]
    return tuple(AffinePair(c, d) for c, d in zip(offsets, slopes))


def classify_multiplier(chi: Rational) -> str:
    if chi > 1:
        return "unstable"
    if chi < 1:
        return "stable"
    return "neutral"


@dataclass(frozen=True)
class PeriodicOrbit:
    """A periodic orbit, stored as its point with the canonical word.

    ``neutral`` lists ``(axis, interval)`` pairs for axes whose composed
    action is the identity; along them every point of the interval is a
    periodic point with the same word, and ``point`` uses the midpoint.
    """

    point: Point
    word: tuple[str, ...]
    multipliers: tuple[Rational, ...]
    axes: str
    neutral: tuple[tuple[str, HalfOpenInterval], ...] = ()
    boundary: bool = False

    @property
    def period(self) -> int:
        return len(self.word)

    def chi(self, axis: str) -> Rational:
        return self.multipliers[self.axes.index(axis)]

    @property
    def classes(self) -> tuple[str, ...]:
        return tuple(classify_multiplier(abs(c)) for c in self.multipliers)

    @property
    def unstable_dimension(self) -> int:
        return self.classes.count("unstable")

    @property
    def kind(self) -> str:
        """``"neutral"`` if some axis is neutral, else ``"<n>d"`` for n unstable axes."""
        if "neutral" in self.classes:
            return "neutral"
        return f"{self.unstable_dimension}d"

    @property
    def word_str(self) -> str:
        return words_to_str(self.word)

    def points(self, m: MapSystem) -> list[Point]:
        """All N orbit points, starting at ``point``."""
        out = [self.point]
        p = self.point
        for s in self.word[:-1]:
            p = m.branch(s).apply(p)
            out.append(p)
        return out


def fixed_point_of_word(m: MapSystem, word: Sequence[str]) -> PeriodicOrbit | None:
    """The periodic orbit that follows ``word`` forever, or ``None``.

    ``None`` covers a slope-one axis with a nonzero shift, a candidate that
    leaves the unit domain, and a candidate whose orbit does not visit the
    prescribed symbol sets.
    """
    word = check_word(m, word)
    pairs = compose_word(m, word)
    coords = []
    neutral = []
    for axis, f in zip(m.axes, pairs):
        if f.slope != 1:
            coords.append(f.fixed_point())
        elif f.offset == 0:
            box = cylinder_box(m, word)
            if box is None:
                return None
            side = box.side(axis)
            neutral.append((axis, side))
            coords.append(side.midpoint())
        else:
            return None
    point = tuple(coords)
    res = m.follow(point, word)
    if res is None or res[0] != point:
        return None
    if neutral:
        neutral = [(axis, _exact_family(m, word, point, axis, side)) for axis, side in neutral]
    return PeriodicOrbit(point, word, tuple(f.slope for f in pairs), m.axes,
                         tuple(neutral), res[1])


def _exact_family(m: MapSystem, word, point, axis: str, side: HalfOpenInterval) -> HalfOpenInterval:
    # cylinder sides close at 1 by convention; test the endpoint itself
    if not side.closed_hi:
        return side
    i = m.axis(axis)
    top = point[:i] + (side.hi,) + point[i + 1:]
    res = m.follow(top, word)
    if res is not None and res[0] == top:
        return side
    return HalfOpenInterval(side.lo, side.hi, False)


def canonical_rotation(word: Sequence[str], order: Sequence[str]) -> tuple[str, ...]:
    rank = {s: i for i, s in enumerate(order)}
    word = tuple(word)
    rots = [word[i:] + word[:i] for i in range(len(word))]
    return min(rots, key=lambda w: [rank[s] for s in w])


def primitive_period(word: Sequence[str]) -> int:
    n = len(word)
    for d in range(1, n + 1):
        if n % d == 0 and tuple(word[d:]) + tuple(word[:d]) == tuple(word):
            return d
    return n


def lyndon_words(m: MapSystem, n: int, budget: int = DEFAULT_WORD_BUDGET) -> Iterator[tuple[str, ...]]:
    """Lyndon words of length ``n`` that are cyclically admissible.

    Fredricksen-Kessler-Maiorana generation in the branch order of ``m``,
    pruned whenever a prefix is inadmissible.  Cyclic admissibility (the
    word followed by itself is admissible) is a necessary condition for a
    periodic orbit.
    """
    if n < 1:
        raise ValueError("period must be at least 1")
    t = fast_transfer(m)
    symbols = m.symbols
    k = len(symbols)
    a = [0] * (n + 1)
    states = [None] * (n + 1)
    states[0] = t.initial()
    visited = 0

    def cyclic_ok(state) -> bool:
        for i in range(1, n + 1):
            state = t.step(state, symbols[a[i]])
            if state is None:
                return False
        return True

    def gen(pos: int, p: int):
        nonlocal visited
        if pos > n:
            if p == n and cyclic_ok(states[n]):
                yield tuple(symbols[a[i]] for i in range(1, n + 1))
            return
        for j in range(a[pos - p], k):
            new = t.step(states[pos - 1], symbols[j])
            visited += 1
            if new is None:
                continue
            if visited > budget:
                raise BudgetExceeded(f"word budget {budget} exceeded at period {n}")
            a[pos] = j
            states[pos] = new
            yield from gen(pos + 1, p if j == a[pos - p] else pos)

    yield from gen(1, 1)


def enumerate_periodic(m: MapSystem, max_period: int, kind: str | None = None,
                       min_period: int = 1, budget: int = DEFAULT_WORD_BUDGET) -> list[PeriodicOrbit]:
    """All periodic orbits of primitive period ``min_period..max_period``.

    ``kind`` filters on :attr:`PeriodicOrbit.kind` (``"1d"``, ``"2d"`` or
    ``"neutral"``); ``None`` keeps everything.  Ordered by period, then by
    canonical word.
    """
    if max_period < 1:
        raise ValueError("max_period must be at least 1")
    if kind is not None and kind not in CLASSES and not (kind[:-1].isdigit() and kind.endswith("d")):
        raise ValueError(f"unknown stability class {kind!r}")
    out = []
    for n in range(max(1, min_period), max_period + 1):
        for word in lyndon_words(m, n, budget):
            orb = fixed_point_of_word(m, word)
            if orb is None:
                continue
            if kind is None or orb.kind == kind:
                out.append(orb)
    return out


def inverse_word(word: Sequence[str]) -> tuple[str, ...]:
    """The word the inverse system reads along the same orbit, from the same point."""
    return tuple(inverse_symbol(s) for s in reversed(tuple(word)))
