"""Text formats: graph and map description language, plus DOT export.

Graph files hold one statement per line:

    graph theta
    vertex P free
    vertex W nonfree(G1)
    edge e1 P Q len 2*sqrt2

Map files describe a straight map on a named graph:

    map psi on theta
    v P -> point e2 1/2
    v Q -> vertex Q
    e e1 -> e2' e1 e3[0..1/4]

Path letters follow the loop syntax (`e3'` reversed, `@v.1` markers) with
an optional `[lo..hi]` fractional range on edge letters.  Scalars accept
integers, fractions `p/q`, decimals, and the tokens `sqrt2`/`golden`
(resolved to rational approximations accurate to 1e-12).
"""

from __future__ import annotations

from fractions import Fraction

from ttkit.graphs import MarkedGraph, Point
from ttkit.loops import format_letter, parse_letter
from ttkit.maps import F, FracPath, StraightMap, tension_graph
from ttkit.policy import parse_scalar, render_scalar


class ParseError(Exception):
    """Malformed DSL input; carries a 1-based line number."""

    def __init__(self, message: str, line: int = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


# ---------------------------------------------------------------------------
# graphs


def parse_graph(text: str):
    """(name or None, MarkedGraph) from graph DSL text."""
    name = None
    vertices = {}
    edges = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kind = toks[0]
        if kind == "graph":
            if len(toks) != 2:
                raise ParseError("expected: graph <name>", ln)
            name = toks[1]
        elif kind == "vertex":
            if len(toks) != 3:
                raise ParseError("expected: vertex <id> free|nonfree(<label>)", ln)
            vid, spec = toks[1], toks[2]
            if vid in vertices:
                raise ParseError(f"duplicate vertex {vid}", ln)
            if spec == "free":
                vertices[vid] = None
            elif spec.startswith("nonfree(") and spec.endswith(")"):
                label = spec[len("nonfree("):-1]
                if not label:
                    raise ParseError("empty vertex group label", ln)
                vertices[vid] = label
            else:
                raise ParseError(f"bad vertex kind {spec!r}", ln)
        elif kind == "edge":
            if len(toks) != 6 or toks[4] != "len":
                raise ParseError("expected: edge <id> <v> <v> len <scalar>", ln)
            eid, u, w = toks[1], toks[2], toks[3]
            if eid in edges:
                raise ParseError(f"duplicate edge {eid}", ln)
            if u not in vertices or w not in vertices:
                raise ParseError(f"edge {eid} references unknown vertex", ln)
            try:
                length = parse_scalar(toks[5])
            except ValueError as exc:
                raise ParseError(str(exc), ln)
            if length < 0:
                raise ParseError(f"negative length on edge {eid}", ln)
            edges[eid] = (u, w, length)
        else:
            raise ParseError(f"unknown statement {kind!r}", ln)
    if not vertices:
        raise ParseError("graph has no vertices")
    return name, MarkedGraph(vertices, edges)


def print_graph(g: MarkedGraph, name: str = None) -> str:
    lines = []
    if name:
        lines.append(f"graph {name}")
    for v in sorted(g.vertices):
        lab = g.vertices[v]
        lines.append(f"vertex {v} " + ("free" if lab is None else f"nonfree({lab})"))
    for e in sorted(g.edges):
        u, w, l = g.edges[e]
        lines.append(f"edge {e} {u} {w} len {render_scalar(l)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# maps


def _parse_path_letter(tok: str, ln: int):
    if "[" in tok:
        head, rest = tok.split("[", 1)
        if not rest.endswith("]") or ".." not in rest:
            raise ParseError(f"bad fractional range in {tok!r}", ln)
        lo_s, hi_s = rest[:-1].split("..", 1)
        try:
            lo, hi = parse_scalar(lo_s), parse_scalar(hi_s)
        except ValueError as exc:
            raise ParseError(str(exc), ln)
        sign = 1
        if head.endswith("'"):
            sign = -1
            head = head[:-1]
        if not (0 <= lo < hi <= 1):
            raise ParseError(f"fractional range must satisfy 0 <= lo < hi <= 1 in {tok!r}", ln)
        return F(head, sign, lo, hi)
    try:
        return parse_letter(tok)
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad path letter {tok!r}", ln)


def _format_path_letter(l) -> str:
    if l[0] == "F":
        base = l[1] + ("'" if l[2] < 0 else "")
        return f"{base}[{render_scalar(l[3])}..{render_scalar(l[4])}]"
    return format_letter(l)


def parse_map(text: str, graph: MarkedGraph, graph_name: str = None):
    """(name, StraightMap) from map DSL text; the map is a self-map of graph."""
    name = None
    vi = {}
    ei = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        kind = toks[0]
        if kind == "map":
            if len(toks) != 4 or toks[2] != "on":
                raise ParseError("expected: map <name> on <graph>", ln)
            name = toks[1]
            if graph_name is not None and toks[3] != graph_name:
                raise ParseError(f"map is on graph {toks[3]!r}, got {graph_name!r}", ln)
        elif kind == "sigma":
            # component permutation; implicit in the vertex images, accepted
            # for compatibility and not stored separately
            continue
        elif kind == "v":
            if len(toks) < 4 or toks[2] != "->":
                raise ParseError("expected: v <id> -> vertex <id> | point <edge> <t>", ln)
            vid = toks[1]
            if vid not in graph.vertices:
                raise ParseError(f"unknown vertex {vid}", ln)
            if toks[3] == "vertex" and len(toks) == 5:
                if toks[4] not in graph.vertices:
                    raise ParseError(f"unknown image vertex {toks[4]}", ln)
                vi[vid] = Point.at_vertex(toks[4])
            elif toks[3] == "point" and len(toks) == 6:
                eid = toks[4]
                if eid not in graph.edges:
                    raise ParseError(f"unknown edge {eid}", ln)
                try:
                    t = parse_scalar(toks[5])
                except ValueError as exc:
                    raise ParseError(str(exc), ln)
                if not (0 <= t <= 1):
                    raise ParseError("point parameter outside [0,1]", ln)
                vi[vid] = Point.interior(graph, (eid, 1), t)
            else:
                raise ParseError("expected: v <id> -> vertex <id> | point <edge> <t>", ln)
        elif kind == "e":
            if len(toks) < 3 or toks[2] != "->":
                raise ParseError("expected: e <id> -> <path>", ln)
            eid = toks[1]
            if eid not in graph.edges:
                raise ParseError(f"unknown edge {eid}", ln)
            ei[eid] = ([_parse_path_letter(t, ln) for t in toks[3:]], ln)
        else:
            raise ParseError(f"unknown statement {kind!r}", ln)
    missing_v = set(graph.vertices) - set(vi)
    if missing_v:
        raise ParseError(f"no image for vertices {sorted(missing_v)}")
    missing_e = set(graph.edges) - set(ei)
    if missing_e:
        raise ParseError(f"no image for edges {sorted(missing_e)}")
    images = {}
    for eid, (letters, ln) in ei.items():
        start = vi[graph.edges[eid][0]]
        try:
            images[eid] = FracPath(graph, letters, start=start)
        except Exception as exc:
            raise ParseError(f"bad image path for edge {eid}: {exc}", ln)
    try:
        return name, StraightMap(graph, graph, vi, images)
    except AssertionError as exc:
        raise ParseError(f"inconsistent map: {exc}")


def print_map(f: StraightMap, name: str = "f", graph_name: str = "g") -> str:
    lines = [f"map {name} on {graph_name}"]
    for v in sorted(f.vertex_image):
        p = f.vertex_image[v]
        if p.is_vertex():
            lines.append(f"v {v} -> vertex {p.vertex}")
        else:
            lines.append(f"v {v} -> point {p.edge} {render_scalar(p.t)}")
    for e in sorted(f.edge_image):
        word = " ".join(_format_path_letter(l) for l in f.edge_image[e].letters)
        lines.append(f"e {e} -> {word}".rstrip())
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# DOT export


def export_dot(g: MarkedGraph, f: StraightMap = None, stack=None,
               name: str = "G", policy=None) -> str:
    """Deterministic DOT text; tension edges styled when a map is given,
    collapse records rendered as clusters.

    Styling uses a tolerant comparison by default so that edges whose
    stretch equals the maximum up to the irrational-approximation error
    are all marked.
    """
    from ttkit.policy import float_policy
    lines = [f'digraph "{name}" {{']
    tension = frozenset()
    if f is not None:
        tension = tension_graph(f, policy or float_policy()).edge_ids
    for v in sorted(g.vertices):
        lab = g.vertices[v]
        shape = "circle" if lab is None else "doublecircle"
        extra = "" if lab is None else f', xlabel="{lab}"'
        lines.append(f'  "{v}" [shape={shape}{extra}];')
    for e in sorted(g.edges):
        u, w, l = g.edges[e]
        style = ', color=red, penwidth=2, fontcolor=red, comment="max"' \
            if e in tension else ""
        lines.append(f'  "{u}" -> "{w}" [label="{e} ({float(l):.6g})"{style}];')
    for i, rec in enumerate(stack or []):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f'    label="collapse {i}";')
        for e in sorted(rec.collapsed.edge_ids):
            lines.append(f'    "collapsed_{i}_{e}" [label="{e}", shape=box];')
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"
