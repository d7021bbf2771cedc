"""Command-line front end.

Subcommands parse graph/map description files, dispatch the displacement
and flow operations, and emit human-readable or structured (JSON) reports.
Exit codes: 0 success, 1 domain error, 2 parse error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from ttkit import displacement as dp
from ttkit import flow
from ttkit.dsl import ParseError, export_dot, parse_graph, parse_map
from ttkit.errors import TTKitError
from ttkit.graphs import core, validate
from ttkit.loops import enumerate_candidates, format_word, length
from ttkit.maps import is_optimal, is_weakly_optimal, lip, loop_image_length
from ttkit.policy import EXACT, float_policy


def _scalar_record(x):
    """Exact rational plus a decimal rendering."""
    if x is None:
        return None
    x = Fraction(x)
    return {"exact": f"{x.numerator}/{x.denominator}", "decimal": float(x)}


class Session:
    def __init__(self, args):
        self.fmt = args.format
        self.seed = args.seed
        self.rng = random.Random(args.seed)
        spec = args.policy
        if spec == "exact":
            self.policy = EXACT
        elif spec.startswith("float:"):
            self.policy = float_policy(Fraction(spec[len("float:"):]).limit_denominator(10 ** 15))
        elif spec == "float":
            self.policy = float_policy()
        else:
            raise ParseError(f"bad policy {spec!r}; expected exact or float:<tol>")
        self.graphs = {}
        self.maps = {}

    def load_graph(self, path):
        name, g = parse_graph(_read(path))
        name = name or path
        self.graphs[name] = g
        return name, g

    def load_map(self, path, graph, graph_name=None):
        name, f = parse_map(_read(path), graph, graph_name)
        name = name or path
        self.maps[name] = f
        return name, f

    def emit(self, record: dict, human_lines):
        if self.fmt == "structured":
            print(json.dumps(record, default=str, sort_keys=True))
        else:
            for line in human_lines:
                print(line)


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}")


def _read_lengths(path, g):
    """Length vector file: one `<edge> <scalar>` per line."""
    from ttkit.policy import parse_scalar
    out = {}
    for ln, raw in enumerate(_read(path).splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) != 2 or toks[0] not in g.edges:
            raise ParseError(f"expected `<edge> <scalar>`", ln)
        out[toks[0]] = parse_scalar(toks[1])
    missing = set(g.edges) - set(out)
    if missing:
        raise ParseError(f"no length for edges {sorted(missing)}")
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_validate(sess, args):
    _, g = sess.load_graph(args.graph)
    rep = validate(g)
    issues = ([f"free leaf {v}" for v in rep.free_leaves]
              + [f"redundant valence-2 vertex {v}" for v in rep.redundant_vertices]
              + [f"bad length on {e}" for e in rep.bad_lengths]
              + [f"duplicate label {lab}" for lab in rep.duplicate_labels])
    sess.emit({"command": "validate", "isValidPoint": rep.is_valid_point,
               "issues": issues},
              [f"isValidPoint {str(rep.is_valid_point).lower()}"]
              + [f"  issue: {i}" for i in issues])
    return 0 if rep.is_valid_point else 1


def cmd_candidates(sess, args):
    _, g = sess.load_graph(args.graph)
    cands = enumerate_candidates(g)
    lines = [f"{len(cands)} candidates"]
    recs = []
    for c in cands:
        recs.append({"shape": c.shape, "loop": format_word(c.loop.letters),
                     "length": _scalar_record(length(g, c.loop))})
        lines.append(f"  {c.shape:26s} {format_word(c.loop.letters)}")
    sess.emit({"command": "candidates", "count": len(cands),
               "candidates": recs}, lines)
    return 0


def cmd_lambda(sess, args):
    gname, g = sess.load_graph(args.graph)
    _, f = sess.load_map(args.map, g, gname)
    best = None
    arg = None
    for c in enumerate_candidates(g):
        den = length(g, c.loop)
        if den == 0:
            continue
        r = loop_image_length(f, c.loop) / den
        if best is None or r > best:
            best, arg = r, c
    sess.emit({"command": "lambda", "lambda": _scalar_record(best),
               "candidate": format_word(arg.loop.letters),
               "shape": arg.shape,
               "lip": _scalar_record(lip(f)),
               "optimal": is_optimal(f, sess.policy),
               "weaklyOptimal": is_weakly_optimal(f, sess.policy)},
              [f"lambda {float(best):.9f}",
               f"realized by {arg.shape}: {format_word(arg.loop.letters)}"])
    return 0


def cmd_minimize(sess, args):
    gname, g = sess.load_graph(args.graph)
    _, f = sess.load_map(args.map, g, gname)
    tol = Fraction(args.tol).limit_denominator(10 ** 15)
    closed = dp.SimplexSpec(g, f, Fraction(args.floor).limit_denominator(10 ** 15))
    lam, witness, flags = dp.min_in_simplex(closed, tol)
    # the open-simplex value is reported alongside, with a small uniform floor
    open_spec = dp.SimplexSpec(g, f, Fraction(1, 10 ** 6 * len(g.edges)))
    lam_open, _, _ = dp.min_in_simplex(open_spec, tol)
    sess.emit({"command": "minimize",
               "lambda": _scalar_record(lam),
               "lambdaOpenSimplex": _scalar_record(lam_open),
               "witness": {e: _scalar_record(v) for e, v in sorted(witness.items())},
               "boundaryFlags": sorted(flags)},
              [f"lambda* {float(lam):.9f} (open-simplex {float(lam_open):.9f})",
               "witness " + " ".join(f"{e}={float(v):.6g}"
                                     for e, v in sorted(witness.items()))]
              + ([f"boundary flags: {' '.join(sorted(flags))}"] if flags else []))
    return 0


def cmd_segment(sess, args):
    gname, g = sess.load_graph(args.graph)
    _, f = sess.load_map(args.map, g, gname)
    A = _read_lengths(args.A, g)
    B = _read_lengths(args.B, g)
    spec = dp.SimplexSpec(g, f, 0)
    prof = dp.segment_profile(A, B, spec, args.samples)
    sess.emit({"command": "segment",
               "quasiConvex": prof.quasi_convex_ok,
               "derivativeBound": prof.derivative_ok,
               "samples": [{"t": _scalar_record(t), "lambda": _scalar_record(l)}
                           for t, l in prof.samples],
               "degenerate": len(prof.degenerate)},
              [f"quasi-convex {prof.quasi_convex_ok}, "
               f"derivative bound {prof.derivative_ok}"]
              + [f"  t={float(t):.4f} lambda={float(l):.9f}"
                 for t, l in prof.samples])
    return 0


def cmd_jump(sess, args):
    gname, g = sess.load_graph(args.graph)
    _, f = sess.load_map(args.map, g, gname)
    edges = frozenset(args.collapse.split(","))
    unknown = edges - set(g.edges)
    if unknown:
        raise ParseError(f"unknown edges in --collapse: {sorted(unknown)}")
    A = core(g.subgraph(edges))
    tol = Fraction(args.tol).limit_denominator(10 ** 15)
    rep = dp.jump_analysis(g, f, A, tol)
    sess.emit({"command": "jump", "verdict": rep.verdict,
               "lambdaFace": _scalar_record(rep.lambda_face),
               "lambdaSub": _scalar_record(rep.lambda_sub),
               "lambdaClosure": _scalar_record(rep.lambda_closure),
               "forbiddenIntervalRespected": rep.forbidden_ok},
              [f"{rep.verdict}: face {float(rep.lambda_face):.9f}, "
               f"sub {float(rep.lambda_sub):.9f}, "
               f"closure {float(rep.lambda_closure):.9f}",
               f"forbidden interval respected: {rep.forbidden_ok}"])
    return 0


def cmd_traintrack(sess, args):
    gname, g = sess.load_graph(args.graph)
    _, f = sess.load_map(args.map, g, gname)
    tol = Fraction(args.tol).limit_denominator(10 ** 15)
    res = dp.global_min_search(g, f, budget=args.budget, tol=tol,
                               policy=sess.policy if not sess.policy.exact
                               else None)
    witness = {e: res.graph.edge_len(e) for e in sorted(res.graph.edges)} \
        if res.graph is not None else {}
    sess.emit({"command": "traintrack",
               "classification": res.classification,
               "lambda": _scalar_record(res.lam),
               "lengths": {e: _scalar_record(v) for e, v in witness.items()},
               "collapseStack": [sorted(r.collapsed.edge_ids)
                                 for r in res.collapse_stack],
               "jumps": [r.verdict for r in res.jump_reports],
               "trajectory": [_scalar_record(x) for x in res.trajectory]},
              [f"classification {res.classification}",
               f"lambda {float(res.lam):.9f}" if res.lam is not None else "lambda n/a",
               "lengths " + " ".join(f"{e}={float(v):.6g}"
                                     for e, v in witness.items())]
              + [f"collapsed: {' '.join(sorted(r.collapsed.edge_ids))}"
                 for r in res.collapse_stack])
    return 0


def cmd_spectrum(sess, args):
    gname, g = sess.load_graph(args.graph)
    specs = []
    for mpath in args.maps:
        _, f = sess.load_map(mpath, g, gname)
        specs.append(dp.SimplexSpec(g, f, 0))
    tol = Fraction(args.tol).limit_denominator(10 ** 15)
    vals = dp.spectrum_sample(specs, tol)
    sess.emit({"command": "spectrum",
               "values": [_scalar_record(v) for v in vals]},
              [f"{len(vals)} distinct in-simplex minima"]
              + [f"  {float(v):.9f}" for v in vals])
    return 0


def cmd_power(sess, args):
    gname, g = sess.load_graph(args.graph)
    _, f = sess.load_map(args.map, g, gname)
    from ttkit.maps import iterate
    lam1 = dp.lambda_(f)
    rows = []
    lines = [f"lambda^1 {float(lam1):.9f}"]
    ok_all = True
    for k in range(2, args.k + 1):
        lam_k = dp.lambda_(iterate(f, k))
        expected = lam1 ** k
        ok = abs(lam_k - expected) <= Fraction(1, 10 ** 6) * max(1, expected)
        ok_all = ok_all and ok
        rows.append({"k": k, "lambda": _scalar_record(lam_k),
                     "expected": _scalar_record(expected), "ok": ok})
        lines.append(f"lambda^{k} {float(lam_k):.9f} "
                     f"(expected {float(expected):.9f}) {'ok' if ok else 'MISMATCH'}")
    sess.emit({"command": "power", "base": _scalar_record(lam1),
               "powers": rows, "ok": ok_all}, lines)
    return 0


def cmd_weakopt(sess, args):
    gname, g = sess.load_graph(args.graph)
    _, f = sess.load_map(args.map, g, gname)
    target = None
    if args.target is not None:
        from ttkit.policy import parse_scalar
        target = parse_scalar(args.target)
    result, cert = flow.weakopt(f, target=target)
    if args.trace:
        with open(args.trace, "w") as fh:
            for ev in cert.events:
                fh.write(json.dumps(
                    {"dt": _scalar_record(ev["dt"]),
                     "lip": _scalar_record(ev["lip"]),
                     "moved": ev["moved"]}) + "\n")
    sess.emit({"command": "weakopt",
               "target": _scalar_record(cert.target),
               "lipStart": _scalar_record(cert.lip_start),
               "lipEnd": _scalar_record(cert.lip_end),
               "tFinal": _scalar_record(cert.t_final),
               "dInf": _scalar_record(cert.d_inf),
               "bound": _scalar_record(cert.bound),
               "boundHolds": cert.bound_holds,
               "events": len(cert.events)},
              [f"lip {float(cert.lip_start):.9f} -> {float(cert.lip_end):.9f} "
               f"(target {float(cert.target):.9f})",
               f"t_final {float(cert.t_final):.9f}, d_inf {float(cert.d_inf):.9f} "
               f"<= bound {float(cert.bound):.9f}: {cert.bound_holds}",
               f"{len(cert.events)} events"])
    return 0


def cmd_dot(sess, args):
    gname, g = sess.load_graph(args.graph)
    f = None
    if args.map:
        _, f = sess.load_map(args.map, g, gname)
    sys.stdout.write(export_dot(g, f, name=gname or "G"))
    return 0


def cmd_fixtures(sess, args):
    from importlib import resources
    names = sorted(r.name for r in resources.files("ttkit.data").iterdir()
                   if r.name.endswith((".g", ".map")))
    if args.name is None:
        sess.emit({"command": "fixtures", "files": names},
                  names)
        return 0
    if args.name not in names:
        raise ParseError(f"unknown fixture {args.name!r}; have {names}")
    sys.stdout.write(resources.files("ttkit.data").joinpath(args.name).read_text())
    return 0


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="ttkit",
                                description="displacement toolkit for marked metric graphs")
    p.add_argument("--format", choices=["human", "structured"], default="human")
    p.add_argument("--policy", default="exact",
                   help="exact | float:<tol>")
    p.add_argument("--seed", type=int, default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate");  s.add_argument("graph"); s.set_defaults(fn=cmd_validate)
    s = sub.add_parser("candidates"); s.add_argument("graph"); s.set_defaults(fn=cmd_candidates)
    s = sub.add_parser("lambda"); s.add_argument("graph"); s.add_argument("map")
    s.set_defaults(fn=cmd_lambda)
    s = sub.add_parser("minimize"); s.add_argument("graph"); s.add_argument("map")
    s.add_argument("--floor", default="0"); s.add_argument("--tol", default="1e-9")
    s.set_defaults(fn=cmd_minimize)
    s = sub.add_parser("segment"); s.add_argument("graph"); s.add_argument("map")
    s.add_argument("A"); s.add_argument("B")
    s.add_argument("--samples", type=int, default=20)
    s.set_defaults(fn=cmd_segment)
    s = sub.add_parser("jump"); s.add_argument("graph"); s.add_argument("map")
    s.add_argument("--collapse", required=True, help="comma-separated edge ids")
    s.add_argument("--tol", default="1e-9")
    s.set_defaults(fn=cmd_jump)
    s = sub.add_parser("traintrack"); s.add_argument("graph"); s.add_argument("map")
    s.add_argument("--budget", type=int, default=16); s.add_argument("--tol", default="1e-9")
    s.set_defaults(fn=cmd_traintrack)
    s = sub.add_parser("spectrum"); s.add_argument("graph")
    s.add_argument("maps", nargs="+"); s.add_argument("--tol", default="1e-9")
    s.set_defaults(fn=cmd_spectrum)
    s = sub.add_parser("power"); s.add_argument("graph"); s.add_argument("map")
    s.add_argument("--k", type=int, default=4)
    s.set_defaults(fn=cmd_power)
    s = sub.add_parser("weakopt"); s.add_argument("graph"); s.add_argument("map")
    s.add_argument("--target", default=None); s.add_argument("--trace", default=None)
    s.set_defaults(fn=cmd_weakopt)
    s = sub.add_parser("dot"); s.add_argument("graph")
    s.add_argument("map", nargs="?", default=None)
    s.set_defaults(fn=cmd_dot)
    s = sub.add_parser("fixtures"); s.add_argument("name", nargs="?", default=None)
    s.set_defaults(fn=cmd_fixtures)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        sess = Session(args)
        return args.fn(sess, args)
    except ParseError as exc:
        print(json.dumps({"error": "parse", "message": str(exc),
                          "line": exc.line}), file=sys.stderr)
        return 2
    except TTKitError as exc:
        print(json.dumps({"error": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
