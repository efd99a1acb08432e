"""Command-line surface: reduce words, run the builder, export graphs,
verify certificate files, generate demand schedules.

Exit codes: 0 success, 1 verification failure, 2 precondition failure,
3 cap exhaustion.  All randomness lives in ``demands gen`` behind an
explicit seed; everything else is deterministic.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from . import builder as bld
from . import amalgam_words as aw
from . import hnn_words as hw
from .graphs import to_dot
from .groups import BsPresentation, ParseError, make_bs_presentation, make_zmod_amalgam, parse_presentation
from .preaction_amalgam import (
    LazyGlobalizationAmalgam,
    Pt1,
    Pt2,
    parse_preaction_amalgam,
    serialize_preaction_amalgam,
)
from .preaction_hnn import LazyGlobalization, Point, parse_preaction, serialize_preaction

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PRECONDITION = 2
EXIT_CAP = 3


def _presentation_from_args(args):
    if getattr(args, "bs", None):
        return make_bs_presentation(args.bs[0], args.bs[1])
    if getattr(args, "amalgam", None):
        return make_zmod_amalgam(args.amalgam[0], args.amalgam[1])
    if getattr(args, "pres", None):
        return parse_presentation(args.pres)
    raise ParseError("no presentation given (use --bs, --amalgam or --pres)")


def cmd_reduce(args) -> int:
    pres = _presentation_from_args(args)
    if isinstance(pres, BsPresentation):
        print(hw.reduce_text(args.word, pres))
    else:
        print(aw.reduce_text_amalgam(args.word, pres))
    return EXIT_OK


def cmd_build(args) -> int:
    pres = _presentation_from_args(args)
    if args.radius > 16:
        print("radius capped at 16", file=sys.stderr)
        return EXIT_PRECONDITION
    report = bld.check_builder_preconditions(pres)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not report.ok:
        for p in report.problems:
            print(f"precondition: {p}", file=sys.stderr)
        return EXIT_PRECONDITION
    demands_text = Path(args.demands).read_text()
    maps, moves = bld.parse_demands(demands_text, pres)
    caps = bld.Caps(separation=args.sep_cap, extension=args.ext_cap)
    state = bld.run_rounds(pres, maps, rounds=args.rounds, caps=caps,
                           faithful_count=args.faithful, extra_moves=moves)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "transcript.txt").write_text(state.transcript_text())
    (out / "certificates.txt").write_text(bld.serialize_certificates(state))
    if isinstance(pres, BsPresentation):
        (out / "preaction.txt").write_text(serialize_preaction(state.core))
        gl = LazyGlobalization(state.core)
        basepts = [Point(o, pres.identity) for o in state.core.orbits]
    else:
        (out / "preaction.txt").write_text(serialize_preaction_amalgam(state.core))
        gl = LazyGlobalizationAmalgam(state.core)
        basepts = [Pt1(o, 0) for o in state.core.orbits1] + [Pt2(o, 0) for o in state.core.orbits2]
    if args.radius > 0:
        g = gl.window_graph(basepts, args.radius)
    else:
        g = state.core.graph()
    (out / "graph.dot").write_text(to_dot(g))
    if state.cap_error:
        print(f"cap: {state.cap_error}", file=sys.stderr)
        return EXIT_CAP
    bad = [i for i, c in enumerate(state.certificates) if not bld.verify_certificate(state.core, c)]
    if bad:
        print(f"verification failed for certificates {bad}", file=sys.stderr)
        return EXIT_VERIFY
    print(f"ok: {len(state.certificates)} certificates, {len(state.core.tau)} tau entries")
    return EXIT_OK


def _load_preaction(path: str):
    text = Path(path).read_text()
    head = text.splitlines()[0] if text else ""
    if "amalgam" in head:
        return parse_preaction_amalgam(text)
    return parse_preaction(text)


def cmd_graph(args) -> int:
    core = _load_preaction(args.preaction)
    if args.radius > 16:
        print("radius capped at 16", file=sys.stderr)
        return EXIT_PRECONDITION
    if args.radius == 0:
        g = core.graph()
    elif isinstance(core.pres, BsPresentation):
        gl = LazyGlobalization(core)
        g = gl.window_graph([Point(o, core.pres.identity) for o in core.orbits], args.radius)
    else:
        gl = LazyGlobalizationAmalgam(core)
        basepts = [Pt1(o, 0) for o in core.orbits1] + [Pt2(o, 0) for o in core.orbits2]
        g = gl.window_graph(basepts, args.radius)
    text = to_dot(g)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_verify(args) -> int:
    core = _load_preaction(args.preaction)
    text = Path(args.certificates).read_text()
    header, certs = bld.parse_certificates(text, core.pres)
    if header != core.pres.spec_string():
        print(f"presentation mismatch: pre-action {core.pres.spec_string()!r} vs certificates {header!r}", file=sys.stderr)
        return EXIT_VERIFY
    failures = []
    for i, cert in enumerate(certs):
        ok = bld.verify_certificate(core, cert)
        print(f"cert {i} {cert.kind}: {'ok' if ok else 'FAIL'}")
        if not ok:
            failures.append(i)
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_demands_gen(args) -> int:
    pres = _presentation_from_args(args)
    rng = random.Random(args.seed)
    lines = []
    for _ in range(args.count):
        k = rng.randint(1, args.kmax)
        pts = set()
        while len(pts) < 2 * k:
            if isinstance(pres, BsPresentation):
                pts.add((rng.randint(0, args.orbits - 1), rng.randint(-8, 8)))
            else:
                pts.add((rng.randint(0, args.orbits - 1), rng.randint(0, pres.factor1.p - 1)))
        pts = sorted(pts)
        rng.shuffle(pts)
        xs = pts[:k]
        ys = pts[k:]
        lines.append(
            "map " + " ".join(f"({o},{e})" for o, e in xs)
            + " -> " + " ".join(f"({o},{e})" for o, e in ys)
        )
    print("\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="htact", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add_pres(p):
        p.add_argument("--bs", nargs=2, type=int, metavar=("M", "N"), help="Baumslag-Solitar parameters")
        p.add_argument("--amalgam", nargs=2, type=int, metavar=("P", "Q"), help="cyclic free-product orders")
        p.add_argument("--pres", help="presentation config string, e.g. 'bs m=2 n=3'")

    p = sub.add_parser("reduce", help="print the normal form of a word")
    add_pres(p)
    p.add_argument("word")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("build", help="run builder rounds over a demand file")
    add_pres(p)
    p.add_argument("--demands", required=True)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=int, default=0,
                   help="globalization window radius for graph.dot (0: core graph)")
    p.add_argument("--faithful", type=int, default=10)
    p.add_argument("--sep-cap", type=int, default=12)
    p.add_argument("--ext-cap", type=int, default=64)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("graph", help="export a pre-action window as DOT")
    p.add_argument("preaction")
    p.add_argument("--radius", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("verify", help="replay a certificate file against a pre-action")
    p.add_argument("preaction")
    p.add_argument("certificates")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demands", help="demand-file utilities")
    dsub = p.add_subparsers(dest="demands_command", required=True)
    g = dsub.add_parser("gen", help="generate a random demand schedule")
    add_pres(g)
    g.add_argument("--count", type=int, default=8)
    g.add_argument("--kmax", type=int, default=4)
    g.add_argument("--orbits", type=int, default=3)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_demands_gen)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except bld.PreconditionFailed as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except bld.CapExceeded as exc:
        print(f"cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ParseError, bld.BuilderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
