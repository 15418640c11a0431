"""Admissibility of symbol words, admissible-word counts and growth rates.

The set of points that realize a word is a product of per-axis sets, so a
word is admissible exactly when every axis chain keeps a nonempty interior.
Axes on which the system acts as a full-branch interval map (X for the
forward hetero-chaotic maps) never constrain a word, and neither do axes
on which every domain is full; the remaining *transfer axes* carry the
state.  For the binary z-stack systems (hc2d, hc3d and their inverses) the
transfer state is a dyadic interval and the step rule is integer push/pop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

from gmpy2 import mpq

from .exact import (
    BudgetExceeded,
    Box,
    DyadicInterval,
    HalfOpenInterval,
    UNIT,
    interval_intersect,
)
from .maps import MapSystem, axis_map, preset

DEFAULT_STATE_BUDGET = 2_000_000
BRUTE_FORCE_MAX_N = 12


def free_axes(m: MapSystem) -> tuple[int, ...]:
    """Axes that impose no admissibility constraint."""
    out = []
    for i, name in enumerate(m.axes):
        if all(b.domain.sides[i].is_full() for b in m.branches):
            out.append(i)
            continue
        try:
            axis_map(m, name)
        except ValueError:
            continue
        out.append(i)
    return tuple(out)


def transfer_axes(m: MapSystem) -> tuple[int, ...]:
    free = free_axes(m)
    return tuple(i for i in range(m.dim) if i not in free)


# ---------------------------------------------------------------------------
# exact interval transfer (any system)

State = tuple  # one HalfOpenInterval per transfer axis


@dataclass(frozen=True)
class IntervalTransfer:
    """Forward image of the realizing set, tracked exactly on the transfer axes."""

    system: MapSystem

    @cached_property
    def axes(self) -> tuple[int, ...]:
        return transfer_axes(self.system)

    def initial(self) -> State:
        return tuple(UNIT for _ in self.axes)

    def step(self, state: State, symbol: str) -> State | None:
        b = self.system.branch(symbol)
        out = []
        for s, i in zip(state, self.axes):
            cut = interval_intersect(s, b.domain.sides[i])
            if cut is None:
                return None
            out.append(b.action[i].image(cut))
        return tuple(out)


def step_state(m: MapSystem, state: State, symbol: str) -> State | None:
    """One exact transfer step; ``None`` marks an inadmissible continuation."""
    return IntervalTransfer(m).step(state, symbol)


# ---------------------------------------------------------------------------
# binary stack transfer (hc2d, hc3d, hc-k(2) and the inverse of hc3d)

_PUSH0 = (mpq(0), mpq(1, 2))
_PUSH1 = (mpq(1, 2), mpq(1, 2))
_POP0 = (mpq(0), mpq(2))
_POP1 = (mpq(-1), mpq(2))
_LOWER = (mpq(0), mpq(1, 2))
_UPPER = (mpq(1, 2), mpq(1))


@dataclass(frozen=True)
class StackTransfer:
    """Dyadic-interval state ``(c, level)`` with integer push/pop rules.

    A push of bit ``b`` is ``z -> (z + b)/2``; a pop of ``b`` is the doubling
    branch on the half ``[b/2, (b+1)/2)``.  At level 0 the state is the whole
    interval and either pop succeeds.
    """

    system: MapSystem = field(repr=False)
    axis: int
    ops: dict  # symbol -> ("push" | "pop", bit)

    @classmethod
    def detect(cls, m: MapSystem) -> StackTransfer | None:
        axes = transfer_axes(m)
        if len(axes) != 1:
            return None
        i = axes[0]
        ops = {}
        for b in m.branches:
            side, f = b.domain.sides[i], b.action[i]
            pair = (f.offset, f.slope)
            bounds = (side.lo, side.hi)
            if side.is_full() and pair == _PUSH0:
                ops[b.symbol] = ("push", 0)
            elif side.is_full() and pair == _PUSH1:
                ops[b.symbol] = ("push", 1)
            elif bounds == _LOWER and pair == _POP0:
                ops[b.symbol] = ("pop", 0)
            elif bounds == _UPPER and pair == _POP1:
                ops[b.symbol] = ("pop", 1)
            else:
                return None
        return cls(m, i, ops)

    @staticmethod
    def initial() -> tuple[int, int]:
        return (0, 0)

    def step(self, state: tuple[int, int], symbol: str) -> tuple[int, int] | None:
        c, n = state
        op, bit = self.ops[symbol]
        if op == "push":
            return (c + (bit << n), n + 1)
        if n == 0:
            return (0, 0)
        top = c >> (n - 1)
        if top != bit:
            return None
        return (c - (bit << (n - 1)), n - 1)

    @staticmethod
    def to_interval(state: tuple[int, int]) -> HalfOpenInterval:
        return DyadicInterval(*state).to_interval()

    def balanced(self) -> bool:
        pops = [b for op, b in self.ops.values() if op == "pop"]
        return pops.count(0) == pops.count(1)


def fast_transfer(m: MapSystem):
    """The integer stack transfer when the system has one, else the exact one."""
    return StackTransfer.detect(m) or IntervalTransfer(m)


# ---------------------------------------------------------------------------
# words

def check_word(m: MapSystem, word: Sequence[str]) -> tuple[str, ...]:
    word = tuple(word)
    if not word:
        raise ValueError("words must be nonempty")
    for s in word:
        m.branch(s)
    return word


def is_admissible(m: MapSystem, word: Sequence[str]) -> bool:
    word = check_word(m, word)
    t = fast_transfer(m)
    state = t.initial()
    for s in word:
        state = t.step(state, s)
        if state is None:
            return False
    return True


def cylinder_box(m: MapSystem, word: Sequence[str]) -> Box | None:
    """The box of points whose first ``len(word)`` symbols are ``word``.

    Built backwards, ``D_w0 ∩ f_w0^-1(D_w1 ∩ ...)``; ``None`` when the
    interior is empty.
    """
    word = check_word(m, word)
    box = Box.unit(m.axes)
    for s in reversed(word):
        b = m.branch(s)
        box = b.domain.intersect(b.preimage_box(box))
        if box is None:
            return None
    return box


def witness(m: MapSystem, word: Sequence[str]) -> tuple | None:
    """A point realizing ``word`` in the interior of every symbol set, or ``None``."""
    box = cylinder_box(m, word)
    if box is None:
        return None
    return tuple(s.midpoint() for s in box.sides)


def non_sft_witnesses(j: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """``A^j B^(j-1) C`` (inadmissible) and ``A^j B^j C`` (admissible) on hc3d."""
    if j < 1:
        raise ValueError("j must be positive")
    bad = ("A",) * j + ("B",) * (j - 1) + ("C",)
    good = ("A",) * j + ("B",) * j + ("C",)
    return bad, good


# ---------------------------------------------------------------------------
# counting

@dataclass(frozen=True)
class AdmissibleCounts:
    counts: tuple[int, ...]  # counts[N-1] = adm(N)

    def adm(self, n: int) -> int:
        return self.counts[n - 1]

    def gamma(self, n: int) -> Fraction:
        """``adm(n)/adm(n-1)`` as an exact fraction (n >= 2)."""
        if n < 2:
            raise ValueError("the growth ratio needs n >= 2")
        return Fraction(self.counts[n - 1], self.counts[n - 2])

    def rows(self) -> Iterator[tuple[int, int, float | None]]:
        for n, a in enumerate(self.counts, 1):
            yield n, a, float(self.gamma(n)) if n >= 2 else None


def count_admissible(m: MapSystem | None, max_n: int,
                     state_budget: int = DEFAULT_STATE_BUDGET) -> AdmissibleCounts:
    """Exact ``adm(N)`` for ``N = 1..max_n`` by forward dynamic programming.

    Balanced stack systems are keyed by stack level alone (the number of
    continuations does not depend on the stored bits); other systems are
    keyed by the exact transfer state.
    """
    m = m or preset("hc3d")
    if max_n < 1:
        raise ValueError("max_n must be at least 1")
    t = fast_transfer(m)
    if not isinstance(t, StackTransfer) or not t.balanced():
        return _count_by_state(m, t, max_n, state_budget)
    pushes = sum(1 for op, _ in t.ops.values() if op == "push")
    pops = len(t.ops) - pushes
    # from level 0 every pop lands back on level 0; above it one pop in two fits
    layer = {0: 1}
    counts = []
    for _ in range(max_n):
        nxt: dict[int, int] = {}
        for level, ways in layer.items():
            if pushes:
                nxt[level + 1] = nxt.get(level + 1, 0) + ways * pushes
            if pops:
                if level == 0:
                    nxt[0] = nxt.get(0, 0) + ways * pops
                else:
                    nxt[level - 1] = nxt.get(level - 1, 0) + ways * (pops // 2)
        layer = {k: v for k, v in nxt.items() if v}
        counts.append(sum(layer.values()))
    return AdmissibleCounts(tuple(counts))


def _state_key(state):
    if isinstance(state, tuple) and state and isinstance(state[0], HalfOpenInterval):
        return tuple((s.lo, s.hi, s.closed_hi) for s in state)
    return state


def _count_by_state(m: MapSystem, t, max_n: int, budget: int) -> AdmissibleCounts:
    layer = {_state_key(t.initial()): (t.initial(), 1)}
    counts = []
    for n in range(max_n):
        nxt: dict = {}
        for state, ways in layer.values():
            for s in m.symbols:
                new = t.step(state, s)
                if new is None:
                    continue
                key = _state_key(new)
                if key in nxt:
                    nxt[key] = (nxt[key][0], nxt[key][1] + ways)
                else:
                    nxt[key] = (new, ways)
        if len(nxt) > budget:
            raise BudgetExceeded(
                f"{len(nxt)} distinct transfer states at length {n + 1} exceed the budget {budget}"
            )
        layer = nxt
        counts.append(sum(w for _, w in layer.values()))
    return AdmissibleCounts(tuple(counts))


def brute_force_admissible(m: MapSystem | None, n: int) -> int:
    """Independent count of admissible words of length ``n``.

    Depth-first search over all words with the exact interval transfer; an
    inadmissible prefix has no admissible extension, so pruning there does
    not change the count.
    """
    m = m or preset("hc3d")
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > BRUTE_FORCE_MAX_N:
        raise BudgetExceeded(f"brute force is limited to n <= {BRUTE_FORCE_MAX_N}")
    t = IntervalTransfer(m)
    symbols = m.symbols

    def walk(state, depth: int) -> int:
        if depth == n:
            return 1
        total = 0
        for s in symbols:
            new = t.step(state, s)
            if new is not None:
                total += walk(new, depth + 1)
        return total

    return walk(t.initial(), 0)


@dataclass(frozen=True)
class EntropyEstimate:
    n: int
    log_growth: float  # log(adm(n))/n
    gamma_minus_3: tuple[float, ...]  # index i is N = i + 2
    three_over_n: tuple[float, ...]


def entropy_estimate(m: MapSystem | None, n: int) -> EntropyEstimate:
    if n < 2:
        raise ValueError("n must be at least 2")
    counts = count_admissible(m, n)
    gm3 = tuple(float(counts.gamma(k) - 3) for k in range(2, n + 1))
    ton = tuple(3 / k for k in range(2, n + 1))
    return EntropyEstimate(n, math.log(counts.adm(n)) / n, gm3, ton)
