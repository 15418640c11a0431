"""Piecewise linear-diagonal map systems.

A :class:`MapSystem` is a list of branches; each branch owns a box of the
unit square or cube (its symbol set) and acts on it coordinatewise by
``u -> c + d*u``.  Boundary points are still mapped (the branch owning them
under the half-open convention wins) but they are flagged.
"""

from __future__ import annotations

import pathlib
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

from gmpy2 import mpq

from .exact import (
    Box,
    HalfOpenInterval,
    Rational,
    UNIT,
    check_bits,
    format_rational,
    interval,
    parse_interval,
    parse_rational,
)

Point = tuple  # tuple of Rational, one per axis


@dataclass(frozen=True)
class AffinePair:
    offset: Rational
    slope: Rational

    def __post_init__(self):
        object.__setattr__(self, "offset", mpq(self.offset))
        object.__setattr__(self, "slope", mpq(self.slope))
        if self.slope == 0:
            raise ValueError("affine slope must be nonzero")

    def __call__(self, u):
        return self.offset + self.slope * u

    def invert(self) -> AffinePair:
        return AffinePair(-self.offset / self.slope, 1 / self.slope)

    def then(self, other: AffinePair) -> AffinePair:
        """The composition ``other(self(u))``."""
        return AffinePair(other.offset + other.slope * self.offset, other.slope * self.slope)

    def fixed_point(self) -> Rational | None:
        if self.slope == 1:
            return None
        return self.offset / (1 - self.slope)

    def image(self, iv: HalfOpenInterval) -> HalfOpenInterval:
        a, b = self(iv.lo), self(iv.hi)
        if b < a:
            a, b = b, a
        return interval(a, b)

    def preimage(self, iv: HalfOpenInterval) -> HalfOpenInterval:
        return self.invert().image(iv)


IDENTITY = AffinePair(0, 1)


@dataclass(frozen=True)
class SymbolBranch:
    symbol: str
    domain: Box
    action: tuple[AffinePair, ...]

    def __post_init__(self):
        object.__setattr__(self, "action", tuple(self.action))
        if len(self.action) != self.domain.dim:
            raise ValueError(f"branch {self.symbol}: one affine pair per axis is required")

    def apply(self, p) -> Point:
        return tuple(f(u) for f, u in zip(self.action, p))

    def apply_inverse(self, p) -> Point:
        return tuple((u - f.offset) / f.slope for f, u in zip(self.action, p))

    def image_box(self, box: Box) -> Box:
        return Box(tuple(f.image(s) for f, s in zip(self.action, box.sides)), box.axes)

    def preimage_box(self, box: Box) -> Box:
        return Box(tuple(f.preimage(s) for f, s in zip(self.action, box.sides)), box.axes)

    @property
    def slopes(self) -> tuple[Rational, ...]:
        return tuple(f.slope for f in self.action)

    def jacobian(self) -> Rational:
        out = mpq(1)
        for d in self.slopes:
            out *= abs(d)
        return out


class Step(NamedTuple):
    image: Point
    symbol: str
    boundary: bool


@dataclass(frozen=True)
class MapSystem:
    name: str
    axes: str
    branches: tuple[SymbolBranch, ...]
    k: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if len({b.symbol for b in self.branches}) != len(self.branches):
            raise ValueError("branch symbols must be distinct")
        for b in self.branches:
            if b.domain.axes != self.axes:
                raise ValueError(f"branch {b.symbol} has axes {b.domain.axes}, expected {self.axes}")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(b.symbol for b in self.branches)

    @cached_property
    def _by_symbol(self) -> dict[str, SymbolBranch]:
        return {b.symbol: b for b in self.branches}

    def branch(self, symbol: str) -> SymbolBranch:
        try:
            return self._by_symbol[symbol]
        except KeyError:
            raise ValueError(f"{self.name} has no symbol {symbol!r}") from None

    def axis(self, name: str) -> int:
        return self.axes.index(name)

    def locate(self, p) -> SymbolBranch:
        if len(p) != self.dim:
            raise ValueError(f"{self.name} expects {self.dim} coordinates, got {len(p)}")
        for b in self.branches:
            if p in b.domain:
                return b
        raise ValueError(f"point {p} is outside the unit domain of {self.name}")

    def evaluate(self, p) -> Step:
        p = tuple(mpq(u) for u in p)
        b = self.locate(p)
        return Step(b.apply(p), b.symbol, not b.domain.contains_open(p))

    def __call__(self, p) -> Point:
        return self.evaluate(p).image

    @cached_property
    def tables(self) -> dict[str, tuple]:
        """Per symbol, per axis ``(lo, hi, closed_hi, offset, slope)`` for tight loops."""
        return {
            b.symbol: tuple((s.lo, s.hi, s.closed_hi, f.offset, f.slope)
                            for s, f in zip(b.domain.sides, b.action))
            for b in self.branches
        }

    def follow(self, p, word) -> tuple[Point, bool] | None:
        """Apply the branches of ``word`` in turn, checking each domain.

        Returns the final point and whether any visited point was on a
        domain boundary, or ``None`` if the orbit leaves a prescribed set.
        """
        tables = self.tables
        boundary = False
        for s in word:
            q = []
            for u, (lo, hi, closed, c, d) in zip(p, tables[s]):
                if u < lo or u > hi or (u == hi and not closed):
                    return None
                if u == lo or u == hi:
                    boundary = True
                q.append(c + d * u)
            p = tuple(q)
        return p, boundary

    def check_partition(self) -> None:
        """Exact check that branch domains tile the unit domain and map into it."""
        unit = Box.unit(self.axes)
        total = mpq(0)
        for i, a in enumerate(self.branches):
            if not a.domain.subset_of(unit):
                raise ValueError(f"domain of {a.symbol} leaves the unit domain")
            if not a.image_box(a.domain).subset_of(unit):
                raise ValueError(f"branch {a.symbol} maps outside the unit domain")
            vol = mpq(1)
            for s in a.domain.sides:
                vol *= s.length
            total += vol
            for b in self.branches[i + 1:]:
                if a.domain.intersect(b.domain) is not None:
                    raise ValueError(f"domains of {a.symbol} and {b.symbol} overlap")
        if total != 1:
            raise ValueError(f"branch domains cover volume {total}, not 1")

    def with_name(self, name: str) -> MapSystem:
        return MapSystem(name, self.axes, self.branches, self.k)


# ---------------------------------------------------------------------------
# presets

def _branch(symbol, bounds, pairs, axes) -> SymbolBranch:
    return SymbolBranch(
        symbol,
        Box.from_bounds([(mpq(lo), mpq(hi)) for lo, hi in bounds], axes),
        tuple(AffinePair(mpq(c), mpq(d)) for c, d in pairs),
    )


_THIRDS = [(0, mpq(1, 3)), (mpq(1, 3), mpq(2, 3)), (mpq(2, 3), 1)]


def _hc_generalized(k: int, dim: int, name: str, labels: Sequence[str]) -> MapSystem:
    axes = "XYZ" if dim == 3 else "XZ"

    def pick(x, y, z):
        return [x, y, z] if dim == 3 else [x, z]

    full = (0, 1)
    branches = [
        _branch(labels[0], pick(_THIRDS[0], full, full),
                pick((0, 3), (0, mpq(2, 3)), (0, mpq(1, 2))), axes),
    ]
    for j in range(1, k + 1):
        branches.append(_branch(
            labels[j],
            pick(_THIRDS[2], full, (mpq(j - 1, k), mpq(j, k))),
            pick((-2, 3), (mpq(2, 3) + mpq(j - 1, 3 * k), mpq(1, 3 * k)), (-(j - 1), k)),
            axes,
        ))
    branches.append(_branch(
        labels[k + 1], pick(_THIRDS[1], full, full),
        pick((-1, 3), (0, mpq(2, 3)), (mpq(1, 2), mpq(1, 2))), axes,
    ))
    return MapSystem(name, axes, branches, k)


def _baker2d() -> MapSystem:
    branches = [
        _branch(s, [_THIRDS[i], (0, 1)], [(-i, 3), (mpq(i, 3), mpq(1, 3))], "XY")
        for i, s in enumerate("ABC")
    ]
    return MapSystem("baker2d", "XY", branches)


def _baker3d() -> MapSystem:
    branches = []
    for i in (0, 1):
        for j in (0, 1):
            branches.append(_branch(
                f"Q{i}{j}",
                [(mpq(i, 2), mpq(i + 1, 2)), (0, 1), (mpq(j, 2), mpq(j + 1, 2))],
                [(-i, 2), (mpq(2 * i + j, 4), mpq(1, 4)), (-j, 2)],
                "XYZ",
            ))
    return MapSystem("baker3d", "XYZ", branches)


_K_RE = re.compile(r"^(hc2d|hc3d)-k(?:\((.*)\))?$")


def preset(name: str, k: int | None = None) -> MapSystem:
    """One of ``baker2d, baker3d, hc2d, hc3d, hc2d-k(k), hc3d-k(k)``.

    ``preset("hc3d", k=3)`` is the same as ``preset("hc3d-k(3)")``.
    """
    if name in ("hc2d", "hc3d") and k is not None:
        name = f"{name}-k({k})"
    m = _K_RE.match(name)
    if m:
        base, arg = m.group(1), m.group(2)
        if arg is not None:
            try:
                k = int(arg)
            except ValueError:
                raise ValueError(f"k must be an integer, got {arg!r}") from None
        if k is None or isinstance(k, bool) or not isinstance(k, int):
            raise ValueError("the generalized family needs an integer k")
        if k <= 1:
            raise ValueError(f"k must exceed 1, got {k}")
        if k == 2:
            labels = "ABCD"
        else:
            labels = ["A"] + [f"B{j}" for j in range(1, k + 1)] + ["D"]
        return _hc_generalized(k, 3 if base == "hc3d" else 2, f"{base}-k({k})", labels)
    if name == "hc3d":
        return _hc_generalized(2, 3, "hc3d", "ABCD")
    if name == "hc2d":
        return _hc_generalized(2, 2, "hc2d", "ABCD")
    if name == "baker2d":
        return _baker2d()
    if name == "baker3d":
        return _baker3d()
    raise ValueError(f"unknown map {name!r}")


PRESET_NAMES = ("baker2d", "baker3d", "hc2d", "hc3d", "hc2d-k(k)", "hc3d-k(k)")


# ---------------------------------------------------------------------------
# inverse system

def inverse_symbol(symbol: str) -> str:
    return symbol[:-1] if symbol.endswith("'") else symbol + "'"


def invert_system(m: MapSystem) -> MapSystem:
    """Inverse system built from image boxes and inverted affine pairs."""
    branches = []
    for b in m.branches:
        image = b.image_box(b.domain)
        branches.append(SymbolBranch(inverse_symbol(b.symbol), image,
                                     tuple(f.invert() for f in b.action)))
    for i, a in enumerate(branches):
        for c in branches[i + 1:]:
            if a.domain.intersect(c.domain) is not None:
                raise ValueError(
                    f"{m.name} is not one-to-one: images of {inverse_symbol(a.symbol)} "
                    f"and {inverse_symbol(c.symbol)} overlap"
                )
    name = m.name[:-4] if m.name.endswith("^-1") else m.name + "^-1"
    return MapSystem(name, m.axes, branches, m.k)


# ---------------------------------------------------------------------------
# orbits

@dataclass(frozen=True)
class OrbitSegment:
    """Exact orbit ``F^-n_backward(p), ..., p, ..., F^n_forward(p)``.

    ``symbols[i]`` is the branch of ``points[i]``; ``start`` is the index of
    the initial point; ``boundary_flag`` is the first index lying on a
    symbol-set boundary (or ``None``).
    """

    points: tuple[Point, ...]
    symbols: tuple[str, ...]
    boundary_flag: int | None
    start: int = 0


def orbit(m: MapSystem, p, n_forward: int, n_backward: int = 0,
          inverse: MapSystem | None = None) -> OrbitSegment:
    p = tuple(mpq(u) for u in p)
    back: list[Point] = []
    if n_backward:
        inverse = inverse or invert_system(m)
        q = p
        for _ in range(n_backward):
            q = inverse(q)
            check_bits(q)
            back.append(q)
        back.reverse()
    points = back + [p]
    q = p
    for _ in range(n_forward):
        q = m(q)
        check_bits(q)
        points.append(q)
    symbols = []
    flag = None
    for i, q in enumerate(points):
        step = m.evaluate(q)
        symbols.append(step.symbol)
        if step.boundary and flag is None:
            flag = i
        if i + 1 < len(points) and not step.boundary and step.image != points[i + 1]:
            raise AssertionError(f"orbit inconsistency at index {i}")
    return OrbitSegment(tuple(points), tuple(symbols), flag, len(back))


def project(p) -> Point:
    """Drop the Y coordinate: ``(x, y, z) -> (x, z)``."""
    if len(p) != 3:
        raise ValueError("projection expects a 3D point")
    return (p[0], p[2])


# ---------------------------------------------------------------------------
# one-dimensional full-branch maps (tau for F, sigma for F^-1)

@dataclass(frozen=True)
class IntervalMap:
    """Piecewise affine interval map whose pieces each map onto ``[0,1]``."""

    pieces: tuple[tuple[HalfOpenInterval, AffinePair], ...]
    name: str = ""

    def __post_init__(self):
        pieces = tuple(sorted(self.pieces, key=lambda pc: pc[0].lo))
        object.__setattr__(self, "pieces", pieces)
        if pieces[0][0].lo != 0 or pieces[-1][0].hi != 1:
            raise ValueError("pieces must cover [0,1]")
        for (a, _), (b, _) in zip(pieces, pieces[1:]):
            if a.hi != b.lo:
                raise ValueError("pieces must be contiguous")
        for iv, f in pieces:
            if f.image(iv) != UNIT:
                raise ValueError(f"piece {iv} is not a full branch")

    def piece_index(self, u) -> int:
        for i, (iv, _) in enumerate(self.pieces):
            if u in iv:
                return i
        raise ValueError(f"{u} outside [0,1]")

    def __call__(self, u):
        return self.pieces[self.piece_index(u)][1](u)

    @property
    def min_slope(self) -> Rational:
        return min(abs(f.slope) for _, f in self.pieces)

    def inverse_branch(self, i: int) -> AffinePair:
        return self.pieces[i][1].invert()

    def point_from_digits(self, prefix: Sequence[int], cycle: Sequence[int]) -> Rational:
        """The point whose piece itinerary is ``prefix`` followed by ``cycle`` forever."""
        g = None
        for i in cycle:
            h = self.inverse_branch(i)
            g = h if g is None else h.then(g)
        # g = g_{c0} o g_{c1} o ... ; its fixed point has itinerary cycle^inf
        u = g.fixed_point() if g is not None else None
        if u is None:
            raise ValueError("cycle must be nonempty and contracting")
        for i in reversed(prefix):
            u = self.inverse_branch(i)(u)
        return u

    def cylinder(self, u, n: int) -> HalfOpenInterval:
        """Consecutive points of ``ends(f, n)`` around ``u``, required to be strict."""
        digits = []
        v = u
        for _ in range(n):
            i = self.piece_index(v)
            digits.append(i)
            v = self.pieces[i][1](v)
        iv = UNIT
        for i in reversed(digits):
            iv = self.inverse_branch(i).image(iv)
        if not iv.contains_open(u):
            raise ValueError(f"{u} is an endpoint of the depth-{n} partition")
        return iv


def axis_map(m: MapSystem, axis: str) -> IntervalMap:
    """The 1D map a system induces on one axis, if that axis is autonomous."""
    i = m.axis(axis)
    pieces: dict[tuple, tuple[HalfOpenInterval, AffinePair]] = {}
    for b in m.branches:
        iv, f = b.domain.sides[i], b.action[i]
        key = (iv.lo, iv.hi)
        if key in pieces and pieces[key][1] != f:
            raise ValueError(f"axis {axis} of {m.name} is not autonomous")
        pieces[key] = (iv, f)
    return IntervalMap(tuple(pieces.values()), f"{m.name}:{axis}")


def tau() -> IntervalMap:
    return axis_map(preset("hc3d"), "X")


def sigma() -> IntervalMap:
    return axis_map(invert_system(preset("hc3d")), "Y")


def ends(f: IntervalMap, n: int) -> list[Rational]:
    """Ordered endpoints of the linearity intervals of ``f**n``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    pts = [mpq(0), mpq(1)]
    for _ in range(n):
        new = set()
        for i in range(len(f.pieces)):
            g = f.inverse_branch(i)
            new.update(g(e) for e in pts)
        pts = sorted(new)
    return pts


# ---------------------------------------------------------------------------
# map-spec text format

def dump_system(m: MapSystem) -> str:
    """One branch per line: ``branch SYM dom_1 .. dom_n c_1:d_1 .. c_n:d_n``."""
    lines = [f"name {m.name}", f"axes {m.axes}"]
    if m.k is not None:
        lines.append(f"k {m.k}")
    for b in m.branches:
        doms = " ".join(str(s) for s in b.domain.sides)
        acts = " ".join(f"{format_rational(f.offset)}:{format_rational(f.slope)}" for f in b.action)
        lines.append(f"branch {b.symbol} {doms} {acts}")
    return "\n".join(lines) + "\n"


def load_system(text: str) -> MapSystem:
    name, axes, k = "custom", None, None
    branches = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "name":
                name = rest
            elif head == "axes":
                axes = rest
            elif head == "k":
                k = int(rest)
            elif head == "branch":
                if axes is None:
                    raise ValueError("'axes' must precede the branches")
                toks = rest.split()
                n = len(axes)
                if len(toks) != 1 + 2 * n:
                    raise ValueError(f"expected symbol, {n} intervals and {n} pairs")
                doms = tuple(parse_interval(t) for t in toks[1:1 + n])
                acts = []
                for t in toks[1 + n:]:
                    c, _, d = t.partition(":")
                    acts.append(AffinePair(parse_rational(c), parse_rational(d)))
                branches.append(SymbolBranch(toks[0], Box(doms, axes), tuple(acts)))
            else:
                raise ValueError(f"unknown keyword {head!r}")
        except ValueError as e:
            raise ValueError(f"map spec line {lineno}: {e}") from None
    if not branches:
        raise ValueError("map spec has no branches")
    m = MapSystem(name, axes, branches, k)
    m.check_partition()
    return m


def resolve(name_or_path: str) -> MapSystem:
    """A preset name, or a path to a map-spec file."""
    try:
        return preset(name_or_path)
    except ValueError as e:
        if str(e).startswith("unknown map"):
            path = pathlib.Path(name_or_path)
            if path.exists():
                return load_system(path.read_text())
        raise


def words_to_str(word: Iterable[str]) -> str:
    word = tuple(word)
    if all(len(s) == 1 for s in word):
        return "".join(word)
    return ".".join(word)


def parse_word(text: str, m: MapSystem) -> tuple[str, ...]:
    if "." in text:
        word = tuple(text.split("."))
    else:
        word = tuple(text)
    for s in word:
        m.branch(s)
    return word
