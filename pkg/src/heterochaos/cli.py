"""Command-line front end: every operation as a subcommand emitting CSV.

Each output starts with ``#`` comment lines recording the full run
configuration, so a file can be regenerated from its own header.  Exit
codes: 0 on success, 2 on invalid input, 3 when a budget or guard stops
the run.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import random
import sys
from fractions import Fraction
from typing import Sequence

from gmpy2 import mpq

from . import __version__
from .bricks import (
    BrickError,
    as_forward_orbit,
    brick_pipeline,
    default_engine,
    two_brick_chain,
)
from .ergodic import (
    COVER_LABELS,
    OBSERVABLES,
    birkhoff,
    invariant_cover,
    leaf_contraction,
    lyapunov,
)
from .exact import BudgetExceeded, HeterochaosError, format_rational, parse_point, parse_rational
from .maps import PRESET_NAMES, dump_system, orbit, resolve
from .periodic import CLASSES, enumerate_periodic
from .symbolic import BRUTE_FORCE_MAX_N, brute_force_admissible, count_admissible

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_BUDGET = 3


class Table:
    """Rows collected for one output, written with the config header."""

    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        self.rows: list[list] = []
        self.notes: list[str] = []

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise AssertionError("row width does not match the header")
        self.rows.append([_cell(v) for v in values])

    def note(self, text: str) -> None:
        self.notes.append(text)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (type(mpq(0)), Fraction)):
        return format_rational(mpq(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _config_lines(args: argparse.Namespace) -> list[str]:
    skip = {"func", "output", "threads"}
    items = [("command", args.command)]
    items += sorted((k, v) for k, v in vars(args).items() if k not in skip and k != "command")
    return [f"# {k}={'' if v is None else v}" for k, v in items]


def emit(args: argparse.Namespace, table: Table) -> None:
    buf = io.StringIO()
    for line in [f"# heterochaos {__version__}"] + _config_lines(args):
        buf.write(line + "\n")
    for note in table.notes:
        buf.write(f"# {note}\n")
    delim = "\t" if args.format == "tsv" else ","
    w = csv.writer(buf, delimiter=delim, lineterminator="\n")
    w.writerow(table.columns)
    w.writerows(table.rows)
    text = buf.getvalue()
    if args.output and args.output != "-":
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _point_columns(axes: str, prefix: str = "") -> list[str]:
    cols = []
    for a in axes:
        cols += [f"{prefix}{a.lower()}", f"{prefix}{a.lower()}_float"]
    return cols


def _point_values(p) -> list:
    out = []
    for u in p:
        out += [u, float(u)]
    return out


def _box_columns(axes: str) -> list[str]:
    cols = []
    for a in axes:
        a = a.lower()
        cols += [f"{a}_lo", f"{a}_hi", f"{a}_closed", f"{a}_lo_float", f"{a}_hi_float"]
    return cols


def _box_values(box) -> list:
    out = []
    for s in box.sides:
        out += [s.lo, s.hi, s.closed_hi, float(s.lo), float(s.hi)]
    return out


# ---------------------------------------------------------------------------
# subcommands

def cmd_orbit(args) -> Table:
    m = resolve(args.map)
    p = parse_point(args.point)
    if len(p) != m.dim:
        raise ValueError(f"{m.name} needs a point with {m.dim} coordinates")
    seg = orbit(m, p, args.forward, args.backward)
    t = Table(["n", "symbol"] + _point_columns(m.axes) + ["boundary"])
    for i, (q, s) in enumerate(zip(seg.points, seg.symbols)):
        boundary = seg.boundary_flag is not None and m.evaluate(q).boundary
        t.add(i - seg.start, s, *_point_values(q), boundary)
    if seg.boundary_flag is not None:
        t.note(f"first boundary point at n={seg.boundary_flag - seg.start}")
    return t


def _periodic_table(m, orbits) -> Table:
    cols = ["period", "word"] + _point_columns(m.axes)
    cols += [f"chi_{a.lower()}" for a in m.axes] + ["class", "boundary", "neutral"]
    t = Table(cols)
    for orb in orbits:
        neutral = ";".join(f"{a}:{iv}" for a, iv in orb.neutral)
        t.add(orb.period, orb.word_str, *_point_values(orb.point), *orb.multipliers,
              orb.kind, orb.boundary, neutral)
    return t


def cmd_periodic(args) -> Table:
    m = resolve(args.map)
    orbits = enumerate_periodic(m, args.max_period, kind=args.cls, min_period=args.min_period)
    return _periodic_table(m, orbits)


def _counts_table(m, max_period: int, min_period: int = 1) -> Table:
    orbits = enumerate_periodic(m, max_period, min_period=min_period)
    kinds = sorted({o.kind for o in orbits} | {"1d", "2d", "neutral"})
    t = Table(["period"] + [f"orbits_{k}" for k in kinds] + [f"points_{k}" for k in kinds])
    for n in range(min_period, max_period + 1):
        row = [sum(1 for o in orbits if o.period == n and o.kind == k) for k in kinds]
        t.add(n, *row, *(c * n for c in row))
    return t


def cmd_fig4(args) -> Table:
    m = resolve("hc2d")
    if args.counts:
        return _counts_table(m, args.max_period)
    return _periodic_table(m, enumerate_periodic(m, args.max_period, kind=args.cls))


def _adm_table(m, max_n: int, brute: int) -> Table:
    counts = count_admissible(m, max_n)
    if brute > BRUTE_FORCE_MAX_N:
        raise BudgetExceeded(f"brute force is limited to N <= {BRUTE_FORCE_MAX_N}")
    t = Table(["N", "adm", "gamma", "gamma_float", "gamma_minus_3", "three_over_n", "brute_force"])
    for n, a, _ in counts.rows():
        g = counts.gamma(n) if n >= 2 else None
        bf = brute_force_admissible(m, n) if n <= brute else None
        t.add(n, a, g, None if g is None else float(g), None if g is None else float(g - 3),
              3 / n, bf)
    return t


def cmd_adm(args) -> Table:
    return _adm_table(resolve(args.map), args.max_n, args.brute)


def cmd_fig8(args) -> Table:
    return _adm_table(resolve("hc3d"), args.max_n, 0)


def cmd_lyapunov(args) -> Table:
    m = resolve(args.map)
    est = lyapunov(m, args.orbits, args.steps, args.seed, workers=args.threads)
    t = Table(["axis", "estimate", "predicted", "exact", "critical"])
    for i, a in enumerate(m.axes):
        t.add(a, est.values[i], est.predicted[i], est.exact[i], est.critical[i])
    t.note(f"product={est.product!r}")
    return t


def cmd_birkhoff(args) -> Table:
    m = resolve(args.map)
    res = birkhoff(m, args.obs, args.points, args.steps, args.seed, workers=args.threads)
    t = Table(["index"] + _point_columns(m.axes, "start_") + ["average"])
    for i, (p, q, avg) in enumerate(zip(res.initial, res.initial_exact, res.averages)):
        vals = []
        for u, e in zip(p, q):
            vals += [e, u]
        t.add(i, *vals, avg)
    t.note(f"mean={res.mean!r}")
    t.note(f"spread={res.spread!r}")
    return t


def cmd_leaf(args) -> Table:
    m = resolve(args.map)
    rec = leaf_contraction(parse_rational(args.x0), args.n, m)
    t = Table(["n", "x", "y_length", "y_hull_lo", "y_hull_hi", "z_c", "z_level", "z_length",
               "diameter_bound", "piece_bound"])
    for s in rec.steps:
        t.add(s.n, s.x, s.y_length, s.y_hull.lo, s.y_hull.hi, s.z.c, s.z.level, s.z_length,
              s.diameter_bound, s.piece_bound)
    return t


def _engine(args):
    eng = default_engine(args.map)
    return eng.dual() if args.dual else eng


def cmd_brick(args) -> Table:
    eng = _engine(args)
    target = parse_point(args.target)
    if len(target) != 3:
        raise ValueError("targets have three coordinates")
    res = brick_pipeline(target, parse_rational(args.eps), eng)
    brick, orb = res.brick, res.orbit
    t = Table(["m", "symbol"] + _box_columns(eng.system.axes) + ["shape"])
    for i in range(-brick.j, brick.k + 1):
        sym = brick.symbols[i + brick.j] if i < brick.k else ""
        box = brick.box(i)
        t.add(i, sym, *_box_values(box), box.classify())
    t.note(f"biased_point={','.join(format_rational(u) for u in res.biased.point)}")
    t.note(f"j={brick.j} k={brick.k} interior={int(brick.interior)}")
    t.note(f"periodic_point={','.join(format_rational(u) for u in orb.point)}")
    t.note(f"period={orb.period} class={orb.kind} word={orb.word_str}")
    if args.dual:
        fo = as_forward_orbit(orb, eng.inverse)
        t.note(f"forward_class={fo.kind} forward_word={fo.word_str}")
    return t


def _read_targets(path: str) -> list[tuple]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                out.append(parse_point(line))
    if not out:
        raise ValueError(f"no targets in {path}")
    return out


def cmd_dense_chain(args) -> Table:
    eng = _engine(args)
    if args.targets:
        targets = _read_targets(args.targets)
    else:
        rng = random.Random(args.seed)
        targets = [tuple(mpq(rng.randrange(1, 10 ** 6), 10 ** 6) for _ in range(3))
                   for _ in range(args.count)]
    eps = parse_rational(args.eps)
    bricks = [brick_pipeline(tg, eps, eng).brick for tg in targets]
    chain = two_brick_chain(bricks)
    t = Table(["s", "target", "j", "k", "N"] + _box_columns(eng.system.axes))
    for s, (tg, link, brick) in enumerate(zip(targets, chain.links, chain.bricks)):
        t.add(s, ",".join(format_rational(u) for u in tg), brick.j, brick.k, link.N,
              *_box_values(link.U))
    t.note(f"word_length={len(chain.final.word)}")
    return t


def cmd_cover(args) -> Table:
    m = resolve(args.map)
    res = invariant_cover(args.set, args.depth, m)
    t = Table(["index"] + _box_columns(m.axes))
    for i, b in enumerate(res.boxes):
        t.add(i, *_box_values(b))
    for a in m.axes:
        lo, hi = res.hull(a)
        t.note(f"hull_{a.lower()}=[{format_rational(lo)},{format_rational(hi)}]")
    t.note(f"volume={format_rational(res.volume)}")
    return t


def cmd_maps(args) -> str:
    if args.action == "list":
        return "\n".join(PRESET_NAMES) + "\n"
    return dump_system(resolve(args.map))


# ---------------------------------------------------------------------------
# parser

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonnegative(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default="-", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "tsv"), default="csv")
    common.add_argument("--threads", type=_positive, default=os.cpu_count() or 1,
                        help="worker processes; output does not depend on it")

    p = argparse.ArgumentParser(prog="heterochaos",
                                description="Exact dynamics of piecewise-linear hetero-chaotic baker maps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        sp.set_defaults(func=func)
        return sp

    map_help = f"preset ({', '.join(PRESET_NAMES)}, hc2d-k(K), hc3d-k(K)) or a map-spec file"

    sp = add("orbit", cmd_orbit, "exact orbit segment of a rational point")
    sp.add_argument("--map", default="hc3d", help=map_help)
    sp.add_argument("--point", required=True, help="comma-separated rationals, e.g. 1/3,1/2,1/5")
    sp.add_argument("--forward", type=_nonnegative, default=10)
    sp.add_argument("--backward", type=_nonnegative, default=0)

    sp = add("periodic", cmd_periodic, "periodic orbits up to a maximal period")
    sp.add_argument("--map", default="hc2d", help=map_help)
    sp.add_argument("--max-period", type=_positive, required=True)
    sp.add_argument("--min-period", type=_positive, default=1)
    sp.add_argument("--class", dest="cls", choices=CLASSES)

    sp = add("adm", cmd_adm, "admissible word counts and growth ratios")
    sp.add_argument("--map", default="hc3d", help=map_help)
    sp.add_argument("--max-n", type=_positive, required=True)
    sp.add_argument("--brute", type=_nonnegative, default=0,
                    help="also brute-force the counts for N up to this value")

    sp = add("lyapunov", cmd_lyapunov, "Lyapunov numbers over seeded random orbits")
    sp.add_argument("--map", default="hc3d", help=map_help)
    sp.add_argument("--orbits", type=_positive, default=100)
    sp.add_argument("--steps", type=_positive, default=100_000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("birkhoff", cmd_birkhoff, "Birkhoff averages over seeded random points")
    sp.add_argument("--map", default="hc3d", help=map_help)
    sp.add_argument("--obs", choices=OBSERVABLES, default="coord_x")
    sp.add_argument("--points", type=_positive, default=20)
    sp.add_argument("--steps", type=_positive, default=1_000_000)
    sp.add_argument("--seed", type=int, default=0)

    sp = add("leaf", cmd_leaf, "contraction of the leaf through x0")
    sp.add_argument("--map", default="hc3d", help=map_help)
    sp.add_argument("--x0", required=True)
    sp.add_argument("--n", type=_nonnegative, default=100)

    for name, func, text in (("brick", cmd_brick, "interior brick and periodic point near a target"),
                             ("dense-chain", cmd_dense_chain, "nested breadboxes visiting several bricks")):
        sp = add(name, func, text)
        sp.add_argument("--map", default="hc3d", help="hc3d or hc3d-k(K)")
        sp.add_argument("--eps", default="1/1000")
        sp.add_argument("--dual", action="store_true", help="run on the inverse system")
        if name == "brick":
            sp.add_argument("--target", required=True, help="x,y,z")
        else:
            sp.add_argument("--targets", help="file with one x,y,z target per line")
            sp.add_argument("--count", type=_positive, default=5,
                            help="number of seeded random targets when no file is given")
            sp.add_argument("--seed", type=int, default=0)

    sp = add("cover", cmd_cover, "finite-depth box cover of an index or heteroclinic set")
    sp.add_argument("--map", default="hc3d", help=map_help)
    sp.add_argument("--set", choices=COVER_LABELS, required=True)
    sp.add_argument("--depth", type=_nonnegative, required=True)

    sp = add("maps", cmd_maps, "list presets or dump one in map-spec format")
    sp.add_argument("action", choices=("dump", "list"))
    sp.add_argument("--map", default="hc3d", help=map_help)

    sp = add("fig4", cmd_fig4, "periodic orbits of hc2d split by stability class")
    sp.add_argument("--max-period", type=_positive, default=13)
    sp.add_argument("--class", dest="cls", choices=CLASSES)
    sp.add_argument("--counts", action="store_true", help="per-period counts instead of orbits")

    sp = add("fig8", cmd_fig8, "admissible word counts of hc3d with growth columns")
    sp.add_argument("--max-n", type=_positive, default=20)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INVALID
    try:
        out = args.func(args)
        if isinstance(out, str):
            if args.output and args.output != "-":
                with open(args.output, "w", encoding="utf-8") as fh:
                    fh.write(out)
            else:
                sys.stdout.write(out)
        else:
            emit(args, out)
    except BudgetExceeded as exc:
        print(f"heterochaos: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, BrickError, OSError) as exc:
        print(f"heterochaos: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except HeterochaosError as exc:
        print(f"heterochaos: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main() -> None:
    sys.exit(run())
