"""Orbit statistics: Lyapunov numbers, Birkhoff averages, leaves and covers.

Initial coordinates on expanding axes are ``a/D`` with the fixed odd
denominator ``D = 2**31 * 3**19 + 1``.  On an axis driven by ``u -> s*u - i``
the exact itinerary of ``a/D`` is the base-s expansion of ``a/D``, which
never terminates, so the orbit never meets a piece boundary and every
symbol is decided exactly.  Floats enter only when logarithms or
observables are accumulated, and on the contracting axes Birkhoff averages
read.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np
from gmpy2 import mpq

from .exact import (
    BudgetExceeded,
    Box,
    DyadicInterval,
    HalfOpenInterval,
    Rational,
    interval,
)
from .maps import IntervalMap, MapSystem, axis_map, invert_system, preset
from .symbolic import StackTransfer, cylinder_box

SAMPLE_DENOMINATOR = 2 ** 31 * 3 ** 19 + 1
OBSERVABLES = ("coord_x", "coord_y", "coord_z", "indicator_R2", "product_xz")
_X_LOOKAHEAD = 40


# ---------------------------------------------------------------------------
# exact itineraries on expanding axes

@dataclass(frozen=True)
class DigitAxis:
    """An autonomous axis driven by ``u -> s*u - i`` on ``[i/s, (i+1)/s)``."""

    axis: str
    fmap: IntervalMap
    base: int

    @classmethod
    def detect(cls, m: MapSystem, axis: str) -> DigitAxis | None:
        try:
            fmap = axis_map(m, axis)
        except ValueError:
            return None
        s = len(fmap.pieces)
        for i, (iv, f) in enumerate(fmap.pieces):
            if iv.lo != mpq(i, s) or f.slope != s or f.offset != -i:
                return None
        return cls(axis, fmap, s)

    def itinerary(self, a: int, steps: int) -> np.ndarray:
        """Pieces visited by ``a/D`` at times ``0..steps-1`` (uint8, exact)."""
        if not 0 < a < SAMPLE_DENOMINATOR:
            raise ValueError("numerator must lie strictly between 0 and D")
        q = gmpy2.mpz(a) * gmpy2.mpz(self.base) ** steps // SAMPLE_DENOMINATOR
        text = q.digits(self.base).rjust(steps, "0") if q else "0" * steps
        return np.frombuffer(text.encode(), dtype=np.uint8) - 48

    def values(self, digits: np.ndarray, steps: int) -> np.ndarray:
        """``u_n`` for ``n < steps`` from ``steps + 40`` digits, to within ``base**-40``."""
        u = np.zeros(steps)
        for k in range(_X_LOOKAHEAD, 0, -1):
            u += digits[k - 1:k - 1 + steps] * float(self.base) ** -k
        return u


def x_axis(m: MapSystem) -> DigitAxis:
    drv = DigitAxis.detect(m, "X")
    if drv is None:
        raise ValueError(f"{m.name} has no base-s expanding X axis")
    return drv


def slopes_by_piece(m: MapSystem, drv: DigitAxis) -> tuple[tuple[Rational, ...], ...]:
    """``|d|`` per axis for each X piece; every branch on a piece must agree."""
    xi = m.axis(drv.axis)
    slopes: list = [None] * len(drv.fmap.pieces)
    for b in m.branches:
        i = drv.fmap.piece_index(b.domain.sides[xi].midpoint())
        s = tuple(abs(d) for d in b.slopes)
        if slopes[i] is None:
            slopes[i] = s
        elif slopes[i] != s:
            raise ValueError(f"slopes of {m.name} are not a function of the X piece")
    return tuple(slopes)


def sample_numerators(rng: np.random.Generator, n: int) -> np.ndarray:
    """Numerators in ``1..D-1``: values strictly inside (0,1), never on a cut."""
    return rng.integers(1, SAMPLE_DENOMINATOR, size=n, dtype=np.int64)


# ---------------------------------------------------------------------------
# Lyapunov numbers

@dataclass(frozen=True)
class LyapunovEstimate:
    axes: str
    values: tuple[float, ...]  # geometric means of |d| per axis
    predicted: tuple[float, ...]  # closed form from the piece lengths
    steps: int
    orbits: int
    seed: int
    exact: tuple[Rational | None, ...] = ()  # set when an axis has one slope

    def value(self, axis: str) -> float:
        return self.values[self.axes.index(axis)]

    def prediction(self, axis: str) -> float:
        return self.predicted[self.axes.index(axis)]

    @property
    def product(self) -> float:
        return math.prod(self.values)

    @property
    def critical_axes(self) -> str:
        """Axes whose predicted Lyapunov number is exactly 1 (hc3d-k(4) on Z)."""
        return "".join(ax for ax, c in zip(self.axes, self.critical) if c)

    critical: tuple[bool, ...] = ()


def predicted_lyapunov(m: MapSystem) -> tuple[float, ...]:
    """``exp(sum |I_i| log|d_i|)``; Lebesgue measure is invariant for a full-branch X map."""
    drv = x_axis(m)
    lengths = [iv.length for iv, _ in drv.fmap.pieces]
    slopes = slopes_by_piece(m, drv)
    out = []
    for a in range(m.dim):
        distinct = {sl[a] for sl in slopes}
        if len(distinct) == 1:
            out.append(float(distinct.pop()))
        else:
            out.append(math.exp(sum(float(w) * math.log(sl[a]) for w, sl in zip(lengths, slopes))))
    return tuple(out)


def predicted_power(m: MapSystem) -> tuple[int, tuple[Rational, ...]]:
    """``(L, prod |d_i|**(L |I_i|))``: the L-th power of each prediction, exactly.

    ``L`` is the common denominator of the X piece lengths.
    """
    drv = x_axis(m)
    lengths = [iv.length for iv, _ in drv.fmap.pieces]
    L = math.lcm(*(int(w.denominator) for w in lengths))
    slopes = slopes_by_piece(m, drv)
    out = []
    for a in range(m.dim):
        v = mpq(1)
        for w, sl in zip(lengths, slopes):
            v *= sl[a] ** int(w * L)
        out.append(v)
    return L, tuple(out)


def piece_counts(drv: DigitAxis, a0: Sequence[int], steps: int) -> np.ndarray:
    """Visits of each X piece over ``steps`` iterates, per orbit (orbits x pieces)."""
    k = len(drv.fmap.pieces)
    return np.stack([np.bincount(drv.itinerary(int(a), steps), minlength=k) for a in a0])


def parallel_map(fn, items: Sequence, workers: int = 1) -> list:
    """``[fn(*it) for it in items]``, optionally in worker processes; order is preserved."""
    if workers <= 1 or len(items) <= 1:
        return [fn(*it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, *zip(*items)))


def _orbit_counts(drv: DigitAxis, a: int, steps: int) -> np.ndarray:
    return np.bincount(drv.itinerary(a, steps), minlength=len(drv.fmap.pieces))


def lyapunov(m: MapSystem, orbits: int, steps: int, seed: int, workers: int = 1) -> LyapunovEstimate:
    """Geometric means of ``|d|`` per axis over seeded random orbits.

    Visit counts are exact integers and are pooled over all orbits before
    any logarithm is taken, so the result does not depend on orbit order.
    """
    if orbits < 1 or steps < 1:
        raise ValueError("orbits and steps must be positive")
    drv = x_axis(m)
    slopes = slopes_by_piece(m, drv)
    rng = np.random.default_rng(seed)
    nums = sample_numerators(rng, orbits).tolist()
    counts = np.sum(parallel_map(_orbit_counts, [(drv, a, steps) for a in nums], workers), axis=0)
    n = orbits * steps
    values, exact = [], []
    for ax in range(m.dim):
        distinct = {s[ax] for s in slopes}
        if len(distinct) == 1:
            e = next(iter(distinct))
            exact.append(e)
            values.append(float(e))
        else:
            exact.append(None)
            log_sum = sum(int(c) * math.log(s[ax]) for c, s in zip(counts, slopes))
            values.append(math.exp(log_sum / n))
    _, powers = predicted_power(m)
    return LyapunovEstimate(m.axes, tuple(values), predicted_lyapunov(m), steps, orbits,
                            seed, tuple(exact), tuple(p == 1 for p in powers))


def lyapunov_of_orbit(m: MapSystem, word: Sequence[str]) -> tuple[Rational, ...]:
    """``prod |d|`` per axis along one periodic word (the N-th power of the Lyapunov number)."""
    out = []
    for ax in range(m.dim):
        prod = mpq(1)
        for s in word:
            prod *= abs(m.branch(s).action[ax].slope)
        out.append(prod)
    return tuple(out)


@dataclass(frozen=True)
class PeriodicXLyapunov:
    """Lyapunov numbers along the eventually periodic orbit of a rational ``x0``."""

    x0: Rational
    preperiod: int
    period: int
    products: tuple[Rational, ...]  # prod |d| over one period, per axis

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(float(p) ** (1 / self.period) for p in self.products)


def periodic_x_lyapunov(m: MapSystem, x0, max_steps: int = 100_000) -> PeriodicXLyapunov:
    """Exact per-period slope products along the X orbit of a rational point."""
    drv = x_axis(m)
    slopes = slopes_by_piece(m, drv)
    x = mpq(x0)
    seen: dict = {}
    pieces = []
    for n in range(max_steps + 1):
        if x in seen:
            start = seen[x]
            cycle = pieces[start:]
            products = []
            for a in range(m.dim):
                v = mpq(1)
                for i in cycle:
                    v *= slopes[i][a]
                products.append(v)
            return PeriodicXLyapunov(mpq(x0), start, n - start, tuple(products))
        seen[x] = n
        i = drv.fmap.piece_index(x)
        pieces.append(i)
        x = drv.fmap.pieces[i][1](x)
    raise BudgetExceeded(f"no period found within {max_steps} steps")


# ---------------------------------------------------------------------------
# Birkhoff averages

@dataclass(frozen=True)
class BirkhoffResult:
    observable: str
    averages: tuple[float, ...]
    steps: int
    seed: int
    initial: tuple[tuple[float, ...], ...]
    # exact a/D on the expanding axes, None on float axes
    initial_exact: tuple[tuple[Rational | None, ...], ...] = ()

    @property
    def spread(self) -> float:
        return max(self.averages) - min(self.averages)

    @property
    def mean(self) -> float:
        return sum(self.averages) / len(self.averages)


@dataclass(frozen=True)
class _Walker:
    """Float walk of the non-expanding axes along exact digit itineraries."""

    digit_axes: tuple[DigitAxis, ...]
    float_axes: tuple[int, ...]
    # key: tuple of digits -> rows (domain lows on float axes, offsets, slopes)
    table: dict

    @classmethod
    def build(cls, m: MapSystem) -> _Walker:
        digit_axes = tuple(d for a in m.axes if (d := DigitAxis.detect(m, a)) is not None)
        if not digit_axes or digit_axes[0].axis != "X":
            raise ValueError(f"{m.name} has no base-s expanding X axis")
        dix = [m.axis(d.axis) for d in digit_axes]
        float_axes = tuple(i for i in range(m.dim) if i not in dix)
        table: dict = {}
        for b in m.branches:
            key = tuple(d.fmap.piece_index(b.domain.sides[i].midpoint())
                        for d, i in zip(digit_axes, dix))
            lows = tuple(float(b.domain.sides[i].lo) for i in float_axes)
            offs = tuple(float(b.action[i].offset) for i in float_axes)
            sls = tuple(float(b.action[i].slope) for i in float_axes)
            table.setdefault(key, []).append((lows, offs, sls))
        for rows in table.values():
            rows.sort()
        return cls(digit_axes, float_axes, table)

    def walk(self, digits: Sequence[np.ndarray], start: Sequence[float], steps: int) -> np.ndarray:
        """Float values of the non-expanding axes at times ``0..steps-1``."""
        out = np.empty((steps, len(self.float_axes)))
        v = list(start)
        keys = zip(*(d[:steps].tolist() for d in digits))
        table = self.table
        for t, key in enumerate(keys):
            out[t] = v
            rows = table[key]
            row = rows[0]
            for r in rows[1:]:
                # branches sharing the digits differ on one float axis
                if all(x >= lo for x, lo in zip(v, r[0])):
                    row = r
            v = [min(max(c + d * x, 0.0), 1.0) for x, c, d in zip(v, row[1], row[2])]
        return out


def _r2_pieces(m: MapSystem, drv: DigitAxis) -> list[int]:
    """X pieces lying in ``x >= 2/3``, the footprint of the doubling branches."""
    xi = m.axis("X")
    return sorted({drv.fmap.piece_index(b.domain.sides[xi].midpoint())
                   for b in m.branches if b.domain.sides[xi].lo >= mpq(2, 3)})


def _birkhoff_one(m: MapSystem, walker: _Walker, observable: str, a_row, f_row, steps: int) -> float:
    if observable == "indicator_R2":
        pieces = walker.digit_axes[0].itinerary(a_row[0], steps)
        return int(np.isin(pieces, _r2_pieces(m, walker.digit_axes[0])).sum()) / steps
    coord = {"coord_x": "X", "coord_y": "Y", "coord_z": "Z"}.get(observable)
    needed = ("X", "Z") if observable == "product_xz" else (coord,)
    float_names = [m.axes[i] for i in walker.float_axes]
    digits = [d.itinerary(a, steps + _X_LOOKAHEAD) for d, a in zip(walker.digit_axes, a_row)]
    series: dict[str, np.ndarray] = {}
    if any(ax in float_names for ax in needed):
        fl = walker.walk(digits, f_row, steps)
        series.update({ax: fl[:, j] for j, ax in enumerate(float_names)})
    for d, dg in zip(walker.digit_axes, digits):
        if d.axis in needed:
            series[d.axis] = d.values(dg, steps)
    if observable == "product_xz":
        return float(np.sum(series["X"] * series["Z"])) / steps
    return float(np.sum(series[coord])) / steps


def birkhoff(m: MapSystem, observable: str, points: int, steps: int, seed: int,
             workers: int = 1) -> BirkhoffResult:
    """Time averages of a named observable along seeded orbits.

    Expanding axes follow their exact digit itineraries.  The other axes are
    carried in float64 along them; where two branches share the same digits
    the float coordinate picks between them.
    """
    if observable not in OBSERVABLES:
        raise ValueError(f"unknown observable {observable!r}; choose from {', '.join(OBSERVABLES)}")
    if points < 1 or steps < 1:
        raise ValueError("points and steps must be positive")
    coord = {"coord_x": "X", "coord_y": "Y", "coord_z": "Z"}.get(observable)
    if coord and coord not in m.axes:
        raise ValueError(f"{m.name} has no {coord} axis")
    if observable == "product_xz" and "Z" not in m.axes:
        raise ValueError(f"{m.name} has no Z axis")
    walker = _Walker.build(m)
    rng = np.random.default_rng(seed)
    nums = sample_numerators(rng, points * len(walker.digit_axes)).reshape(points, -1).tolist()
    floats = rng.random((points, len(walker.float_axes))).tolist()
    D = SAMPLE_DENOMINATOR
    digit_names = [d.axis for d in walker.digit_axes]
    float_names = [m.axes[i] for i in walker.float_axes]
    start, exact = [], []
    for a_row, f_row in zip(nums, floats):
        init = {ax: mpq(a, D) for ax, a in zip(digit_names, a_row)}
        exact.append(tuple(init.get(ax) for ax in m.axes))
        init.update(zip(float_names, f_row))
        start.append(tuple(float(init[ax]) for ax in m.axes))
    tasks = [(m, walker, observable, a_row, f_row, steps) for a_row, f_row in zip(nums, floats)]
    averages = parallel_map(_birkhoff_one, tasks, workers)
    return BirkhoffResult(observable, tuple(averages), steps, seed, tuple(start), tuple(exact))


def birkhoff_exact(m: MapSystem, p, observable: str, steps: int) -> Rational:
    """Exact average along the orbit of one rational point (small ``steps``)."""
    if observable not in OBSERVABLES:
        raise ValueError(f"unknown observable {observable!r}")
    axes = m.axes
    total = mpq(0)
    for _ in range(steps):
        x = p[axes.index("X")]
        if observable == "coord_x":
            total += x
        elif observable == "coord_y":
            total += p[axes.index("Y")]
        elif observable == "coord_z":
            total += p[axes.index("Z")]
        elif observable == "indicator_R2":
            total += 1 if x >= mpq(2, 3) else 0
        else:
            total += x * p[axes.index("Z")]
        p = m(p)
    return total / steps


# ---------------------------------------------------------------------------
# leaves

@dataclass(frozen=True)
class LeafStep:
    n: int
    x: Rational
    y_length: Rational  # product of Y slopes: length of each Y piece
    y_hull: HalfOpenInterval  # smallest interval containing every Y piece
    z: DyadicInterval

    @property
    def z_length(self) -> Rational:
        return self.z.length

    @property
    def diameter_bound(self) -> float:
        """``|hull of Y_n| + |Z_n|``: a true bound on the diameter of the image."""
        return float(self.y_hull.length + self.z.length)

    @property
    def piece_bound(self) -> float:
        """``|Y_n| + |Z_n|`` with the length of a single Y piece."""
        return float(self.y_length + self.z.length)


@dataclass(frozen=True)
class LeafRecord:
    x0: Rational
    steps: tuple[LeafStep, ...]

    @property
    def final(self) -> LeafStep:
        return self.steps[-1]


def leaf_contraction(x0, n: int, m: MapSystem | None = None) -> LeafRecord:
    """Image of the leaf ``{x0} x [0,1] x [0,1]`` under ``n`` iterates.

    The image is ``{x_n} x Y_n x Z_n`` where ``Y_n`` is a union of intervals
    of equal length and ``Z_n`` is one dyadic interval.  When a doubling
    branch meets ``|Z_n| = 1`` the leaf splits across both halves and
    ``Z_{n+1}`` is the whole interval again.
    """
    m = m or preset("hc3d")
    x = mpq(x0)
    if not 0 <= x <= 1:
        raise ValueError("x0 must lie in [0,1]")
    if m.axes != "XYZ":
        raise ValueError("leaves need a 3D system")
    stack = StackTransfer.detect(m)
    if stack is None:
        raise ValueError(f"{m.name} has no binary z-stack")
    fmap = axis_map(m, "X")
    xi, yi = 0, 1
    # branches grouped by X piece, with their Z pop bit
    groups: dict[int, list] = {}
    for b in m.branches:
        groups.setdefault(fmap.piece_index(b.domain.sides[xi].midpoint()), []).append(b)
    y_len = mpq(1)
    lo, hi = mpq(0), mpq(1)
    state = (0, 0)
    records = [LeafStep(0, x, y_len, interval(lo, hi), DyadicInterval(0, 0))]
    for step in range(1, n + 1):
        i = fmap.piece_index(x)
        group = groups[i]
        ops = [stack.ops[b.symbol] for b in group]
        if ops[0][0] == "push":
            b = group[0]
            state = stack.step(state, b.symbol)
            f = b.action[yi]
            lo, hi = f(lo), f(hi)
        else:
            c, level = state
            if level == 0:
                fs = [b.action[yi] for b in group]
                lo, hi = min(f(lo) for f in fs), max(f(hi) for f in fs)
            else:
                bit = c >> (level - 1)
                b = next(b for b in group if stack.ops[b.symbol][1] == bit)
                state = stack.step(state, b.symbol)
                f = b.action[yi]
                lo, hi = f(lo), f(hi)
        y_len *= abs(group[0].action[yi].slope)
        x = fmap.pieces[i][1](x)
        records.append(LeafStep(step, x, y_len, interval(lo, hi), DyadicInterval(*state)))
    return LeafRecord(mpq(x0), tuple(records))


def leaf_levels(m: MapSystem, a0: np.ndarray, n: int) -> np.ndarray:
    """Final dyadic level of ``Z_n`` for many leaves at once (exact integer walk)."""
    drv = x_axis(m)
    stack = StackTransfer.detect(m)
    xi = m.axis("X")
    push = np.zeros(len(drv.fmap.pieces), dtype=bool)
    for b in m.branches:
        push[drv.fmap.piece_index(b.domain.sides[xi].midpoint())] = stack.ops[b.symbol][0] == "push"
    levels = []
    for a in a0.tolist():
        level = 0
        for i in drv.itinerary(a, n).tolist():
            level = level + 1 if push[i] else max(level - 1, 0)
        levels.append(level)
    return np.asarray(levels, dtype=np.int64)


# ---------------------------------------------------------------------------
# covers of index and heteroclinic sets

COVER_LABELS = ("H1", "H2", "H*21", "H*12")

_REGIONS = {"R1": ("A", "D"), "R2": ("B", "C")}
# label -> (region for n >= 0, region for n < 0)
_SPLITS = {"H1": ("R1", "R1"), "H2": ("R2", "R2"), "H*21": ("R1", "R2"), "H*12": ("R2", "R1")}


@dataclass(frozen=True)
class CoverResult:
    label: str
    depth: int
    boxes: tuple[Box, ...]

    def hull(self, axis: str) -> tuple[Rational, Rational]:
        sides = [b.side(axis) for b in self.boxes]
        return min(s.lo for s in sides), max(s.hi for s in sides)

    @property
    def volume(self) -> Rational:
        total = mpq(0)
        for b in self.boxes:
            v = mpq(1)
            for s in b.sides:
                v *= s.length
            total += v
        return total

    def covers(self, other: CoverResult) -> bool:
        """Every box of ``other`` lies in one box of this cover."""
        return all(any(b.subset_of(c) for c in self.boxes) for b in other.boxes)


def _words(symbols: Sequence[str], n: int):
    if n == 0:
        yield ()
        return
    for w in _words(symbols, n - 1):
        for s in symbols:
            yield w + (s,)


def merge_boxes(boxes: Sequence[Box]) -> list[Box]:
    """Merge boxes that agree on all but one axis and touch along it."""
    boxes = list(boxes)
    changed = True
    while changed:
        changed = False
        for ax in range(boxes[0].dim if boxes else 0):
            groups: dict = {}
            for b in boxes:
                key = tuple((s.lo, s.hi, s.closed_hi) for i, s in enumerate(b.sides) if i != ax)
                groups.setdefault(key, []).append(b)
            out = []
            for group in groups.values():
                group.sort(key=lambda b: b.sides[ax].lo)
                cur = group[0]
                for b in group[1:]:
                    s, t = cur.sides[ax], b.sides[ax]
                    if s.hi == t.lo and not s.closed_hi:
                        cur = Box(cur.sides[:ax] + (HalfOpenInterval(s.lo, t.hi, t.closed_hi),)
                                  + cur.sides[ax + 1:], cur.axes)
                        changed = True
                    else:
                        out.append(cur)
                        cur = b
                out.append(cur)
            boxes = out
    return sorted(boxes, key=lambda b: tuple(s.lo for s in b.sides))


def invariant_cover(label: str, depth: int, m: MapSystem | None = None,
                    max_boxes: int = 1_000_000) -> CoverResult:
    """Boxes covering the points whose itinerary from ``-depth`` to ``depth``
    stays in the regions the label prescribes."""
    if label not in COVER_LABELS:
        raise ValueError(f"unknown set {label!r}; choose from {', '.join(COVER_LABELS)}")
    if depth < 0:
        raise ValueError("depth must be non-negative")
    m = m or preset("hc3d")
    inv = invert_system(m)
    fwd_region, back_region = _SPLITS[label]
    fsyms = _REGIONS[fwd_region]
    bsyms = tuple(s + "'" for s in _REGIONS[back_region])
    if len(fsyms) ** (depth + 1) * len(bsyms) ** depth > max_boxes:
        raise BudgetExceeded(f"depth {depth} needs more than {max_boxes} boxes")
    forward = [b for w in _words(fsyms, depth + 1) if (b := cylinder_box(m, w)) is not None]
    if depth:
        backward = [b for w in _words(bsyms, depth) if (b := cylinder_box(inv, w)) is not None]
    else:
        backward = [Box.unit(m.axes)]
    boxes = []
    for f in forward:
        for b in backward:
            c = f.intersect(b)
            if c is not None:
                boxes.append(c)
    return CoverResult(label, depth, tuple(merge_boxes(boxes)))
