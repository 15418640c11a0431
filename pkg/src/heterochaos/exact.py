"""Exact rationals, half-open intervals and boxes.

Every coordinate, endpoint and slope in the package is a ``Rational``
(a GMP ``mpq``, always in lowest terms).  Floats only appear in the
statistics of :mod:`heterochaos.ergodic` and in convenience CSV columns.

Intervals follow one convention throughout: ``[lo, hi)`` unless ``hi == 1``,
in which case the interval may be closed, ``[lo, 1]``.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import gmpy2
from gmpy2 import mpq

Rational = type(mpq(0))

ZERO = mpq(0)
ONE = mpq(1)
HALF = mpq(1, 2)

DEFAULT_MAX_BITS = 4096
AXIS_NAMES = "XYZ"


class HeterochaosError(Exception):
    """Base class for errors raised by this package."""


class BudgetExceeded(HeterochaosError):
    """A resource guard (bit size, word or state budget) was hit."""


def Q(value, den=None) -> Rational:
    """Build a rational from an int, a ``"p/q"`` string, a Fraction or a pair."""
    if den is not None:
        return mpq(value, den)
    if isinstance(value, str):
        return parse_rational(value)
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact rationals")
    return mpq(value)


_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text: str) -> Rational:
    m = _RATIONAL_RE.match(text)
    if m is None:
        raise ValueError(f"malformed rational {text!r}; expected 'p/q'")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise ValueError(f"malformed rational {text!r}: zero denominator")
    return mpq(num, den)


def format_rational(q) -> str:
    q = mpq(q)
    return f"{q.numerator}/{q.denominator}"


def bit_size(q) -> int:
    q = mpq(q)
    return max(gmpy2.bit_length(q.numerator), gmpy2.bit_length(q.denominator))


def max_bits() -> int:
    """The active bit-size guard; ``HETEROCHAOS_MAX_BITS`` overrides the default."""
    env = os.environ.get("HETEROCHAOS_MAX_BITS")
    if env:
        return int(env)
    return DEFAULT_MAX_BITS


def check_bits(values: Iterable, limit: int | None = None) -> None:
    """Raise :class:`BudgetExceeded` if any value needs more than ``limit`` bits."""
    limit = max_bits() if limit is None else limit
    for v in values:
        if bit_size(v) > limit:
            raise BudgetExceeded(
                f"rational needs {bit_size(v)} bits, guard is {limit} "
                "(raise HETEROCHAOS_MAX_BITS to continue)"
            )


@dataclass(frozen=True)
class HalfOpenInterval:
    """``[lo, hi)``, or ``[lo, 1]`` when ``closed_hi`` is set."""

    lo: Rational
    hi: Rational
    closed_hi: bool = False

    def __post_init__(self):
        object.__setattr__(self, "lo", mpq(self.lo))
        object.__setattr__(self, "hi", mpq(self.hi))
        if not self.lo < self.hi:
            raise ValueError(f"empty interval: lo={self.lo} hi={self.hi}")
        if self.closed_hi and self.hi != 1:
            raise ValueError("only intervals ending at 1 may be closed")

    @property
    def length(self) -> Rational:
        return self.hi - self.lo

    def __contains__(self, u) -> bool:
        if u < self.lo:
            return False
        return u < self.hi or (self.closed_hi and u == self.hi)

    def contains_open(self, u) -> bool:
        return self.lo < u < self.hi

    def is_full(self) -> bool:
        return self.lo == 0 and self.hi == 1

    def subset_of(self, other: HalfOpenInterval) -> bool:
        if self.lo < other.lo or self.hi > other.hi:
            return False
        return not (self.hi == other.hi and self.closed_hi and not other.closed_hi)

    def closure_inside(self, other: HalfOpenInterval) -> bool:
        """True when ``[lo, hi]`` lies in the open interval ``(other.lo, other.hi)``."""
        return other.lo < self.lo and self.hi < other.hi

    def midpoint(self) -> Rational:
        return (self.lo + self.hi) / 2

    def __str__(self) -> str:
        close = "]" if self.closed_hi else ")"
        return f"[{format_rational(self.lo)},{format_rational(self.hi)}{close}"


def interval(lo, hi) -> HalfOpenInterval:
    """Interval under the package convention: closed exactly when ``hi == 1``."""
    hi = mpq(hi)
    return HalfOpenInterval(lo, hi, hi == 1)


UNIT = interval(0, 1)


def interval_intersect(a: HalfOpenInterval, b: HalfOpenInterval) -> HalfOpenInterval | None:
    """Half-open intersection, or ``None`` when it is empty.

    Under the half-open convention a nonempty intersection always has a
    nonempty interior, so ``None`` doubles as the empty-interior marker.
    """
    lo = max(a.lo, b.lo)
    if a.hi < b.hi:
        hi, closed = a.hi, a.closed_hi
    elif b.hi < a.hi:
        hi, closed = b.hi, b.closed_hi
    else:
        hi, closed = a.hi, a.closed_hi and b.closed_hi
    if lo < hi:
        return HalfOpenInterval(lo, hi, closed)
    return None


_INTERVAL_RE = re.compile(r"^\s*\[([^,\]]+),([^,\])]+)([)\]])\s*$")


def parse_interval(text: str) -> HalfOpenInterval:
    m = _INTERVAL_RE.match(text)
    if m is None:
        raise ValueError(f"malformed interval {text!r}; expected '[lo,hi)' or '[lo,1]'")
    lo, hi = parse_rational(m.group(1)), parse_rational(m.group(2))
    return HalfOpenInterval(lo, hi, m.group(3) == "]")


@dataclass(frozen=True)
class Box:
    """Product of half-open intervals, one per axis."""

    sides: tuple[HalfOpenInterval, ...]
    axes: str = AXIS_NAMES

    def __post_init__(self):
        object.__setattr__(self, "sides", tuple(self.sides))
        if len(self.sides) != len(self.axes):
            raise ValueError("one interval per axis is required")

    @classmethod
    def from_bounds(cls, bounds: Sequence[tuple], axes: str = AXIS_NAMES) -> Box:
        return cls(tuple(interval(lo, hi) for lo, hi in bounds), axes)

    @classmethod
    def unit(cls, axes: str = AXIS_NAMES) -> Box:
        return cls(tuple(UNIT for _ in axes), axes)

    @property
    def dim(self) -> int:
        return len(self.sides)

    def side(self, axis: str) -> HalfOpenInterval:
        return self.sides[self.axes.index(axis)]

    def __contains__(self, p) -> bool:
        return all(u in s for u, s in zip(p, self.sides))

    def contains_open(self, p) -> bool:
        return all(s.contains_open(u) for u, s in zip(p, self.sides))

    def subset_of(self, other: Box) -> bool:
        return all(a.subset_of(b) for a, b in zip(self.sides, other.sides))

    def lengths(self) -> tuple[Rational, ...]:
        return tuple(s.length for s in self.sides)

    def full_axes(self) -> str:
        return "".join(a for a, s in zip(self.axes, self.sides) if s.length == 1)

    def classify(self) -> str:
        """``"breadbox"``, ``"pizzabox"`` or ``"box"`` by the number of unit-length axes."""
        n = len(self.full_axes())
        if n == 1:
            return "breadbox"
        if n == 2:
            return "pizzabox"
        return "box"

    def intersect(self, other: Box) -> Box | None:
        sides = []
        for a, b in zip(self.sides, other.sides):
            s = interval_intersect(a, b)
            if s is None:
                return None
            sides.append(s)
        return Box(tuple(sides), self.axes)

    def replace(self, axis: str, side: HalfOpenInterval) -> Box:
        i = self.axes.index(axis)
        return Box(self.sides[:i] + (side,) + self.sides[i + 1:], self.axes)

    def __str__(self) -> str:
        return " x ".join(str(s) for s in self.sides)


def box_diameter_bound(b: Box) -> Rational:
    """Sum of side lengths, an upper bound on the diameter in any product metric."""
    return sum((s.length for s in b.sides), ZERO)


@dataclass(frozen=True)
class DyadicInterval:
    """``[c/2**level, (c+1)/2**level)``; level 0 is the whole unit interval."""

    c: int
    level: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.c < (1 << self.level):
            raise ValueError(f"bad dyadic coefficients c={self.c} level={self.level}")

    def to_interval(self) -> HalfOpenInterval:
        return interval(mpq(self.c, 1 << self.level), mpq(self.c + 1, 1 << self.level))

    @property
    def length(self) -> Rational:
        return mpq(1, 1 << self.level)

    @classmethod
    def from_interval(cls, iv: HalfOpenInterval) -> DyadicInterval | None:
        """The dyadic interval with these endpoints, or ``None`` if there is none."""
        length = iv.length
        if length.numerator != 1 or gmpy2.popcount(length.denominator) != 1:
            return None
        level = gmpy2.bit_length(length.denominator) - 1
        c = iv.lo * length.denominator
        if c.denominator != 1:
            return None
        return cls(int(c), level)


@dataclass(frozen=True)
class TrinaryInterval:
    """``[c/3**level, (c+1)/3**level)``."""

    c: int
    level: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.c < 3 ** self.level:
            raise ValueError(f"bad trinary coefficients c={self.c} level={self.level}")

    def to_interval(self) -> HalfOpenInterval:
        n = 3 ** self.level
        return interval(mpq(self.c, n), mpq(self.c + 1, n))

    @classmethod
    def containing(cls, u, level: int) -> TrinaryInterval:
        n = 3 ** level
        c = min(int(gmpy2.floor(mpq(u) * n)), n - 1)
        return cls(c, level)


def format_point(p) -> str:
    return "(" + ", ".join(format_rational(u) for u in p) + ")"


def parse_point(text: str) -> tuple[Rational, ...]:
    parts = [s for s in text.strip().strip("()").split(",") if s.strip()]
    if not parts:
        raise ValueError(f"malformed point {text!r}")
    return tuple(parse_rational(s) for s in parts)
