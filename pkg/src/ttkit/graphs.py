"""Marked metric graphs of groups with trivial edge groups.

A MarkedGraph is a finite metric graph whose vertices are either free or
carry an opaque vertex-group label.  It models a point of Outer space (or
of its bordification when a collapsed subgraph is designated).  Oriented
edges are pairs (edge id, sign); the reversal involution flips the sign.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from ttkit.policy import Scalar

# ---------------------------------------------------------------------------
# oriented edges

OEdge = tuple[str, int]  # (edge id, +1 or -1)


def rev(o: OEdge) -> OEdge:
    return (o[0], -o[1])


# ---------------------------------------------------------------------------


class MarkedGraph:
    """Finite metric graph of groups with trivial edge groups.

    vertices: dict vertex id -> None (free) or group label (non-free).
    edges: dict edge id -> (origin vertex, terminus vertex, length).
    collapsed: edge ids allowed to carry zero length (boundary bookkeeping).
    """

    def __init__(self, vertices: dict, edges: dict, collapsed=frozenset()):
        self.vertices = dict(vertices)
        self.edges = {e: (u, v, Fraction(l)) for e, (u, v, l) in edges.items()}
        self.collapsed = frozenset(collapsed)
        for e, (u, v, l) in self.edges.items():
            assert u in self.vertices and v in self.vertices, f"edge {e} has unknown endpoint"
            assert l >= 0, f"edge {e} has negative length"
        self._germs_cache: Optional[dict] = None

    # -- basic accessors ----------------------------------------------------

    def is_free(self, v: str) -> bool:
        return self.vertices[v] is None

    def label(self, v: str):
        return self.vertices[v]

    def edge_len(self, e: str) -> Scalar:
        return self.edges[e][2]

    def origin(self, o: OEdge) -> str:
        u, v, _ = self.edges[o[0]]
        return u if o[1] > 0 else v

    def terminus(self, o: OEdge) -> str:
        return self.origin(rev(o))

    def germs(self, v: str) -> list[OEdge]:
        """Oriented edges emanating from v (a loop contributes two germs)."""
        if self._germs_cache is None:
            cache = {w: [] for w in self.vertices}
            for e in sorted(self.edges):
                u, w, _ = self.edges[e]
                cache[u].append((e, 1))
                cache[w].append((e, -1))
            self._germs_cache = cache
        return list(self._germs_cache[v])

    def valence(self, v: str) -> int:
        return len(self.germs(v))

    def volume(self) -> Scalar:
        return sum((l for _, _, l in self.edges.values()), Fraction(0))

    # -- components ---------------------------------------------------------

    def components(self) -> list[frozenset]:
        seen = set()
        comps = []
        for v in sorted(self.vertices):
            if v in seen:
                continue
            comp = {v}
            stack = [v]
            while stack:
                w = stack.pop()
                for o in self.germs(w):
                    t = self.terminus(o)
                    if t not in comp:
                        comp.add(t)
                        stack.append(t)
            seen |= comp
            comps.append(frozenset(comp))
        return comps

    # -- derived constructions ----------------------------------------------

    def with_lengths(self, lengths: dict) -> "MarkedGraph":
        edges = {e: (u, v, Fraction(lengths.get(e, l))) for e, (u, v, l) in self.edges.items()}
        return MarkedGraph(self.vertices, edges, self.collapsed)

    def full_subgraph(self) -> "Subgraph":
        return Subgraph(self, frozenset(self.edges))

    def subgraph(self, edge_ids, extra_vertices=()) -> "Subgraph":
        return Subgraph(self, frozenset(edge_ids), frozenset(extra_vertices))

    def __repr__(self):
        return f"MarkedGraph({len(self.vertices)} vertices, {len(self.edges)} edges)"


# ---------------------------------------------------------------------------


class Point:
    """A point of the geometric realization of a MarkedGraph.

    Either at a vertex, or in the interior of an edge at parameter
    t in (0,1) measured along the positive orientation.  Interior(e, t)
    and Interior(reversed e, 1-t) denote the same point; the canonical
    form always stores the positive orientation.
    """

    __slots__ = ("kind", "vertex", "edge", "t")

    def __init__(self, kind, vertex=None, edge=None, t=None):
        self.kind = kind
        self.vertex = vertex
        self.edge = edge
        self.t = t

    @staticmethod
    def at_vertex(v: str) -> "Point":
        return Point("vertex", vertex=v)

    @staticmethod
    def interior(g: MarkedGraph, o: OEdge, t: Scalar) -> "Point":
        """Point at parameter t along the oriented edge o."""
        t = Fraction(t)
        if o[1] < 0:
            t = 1 - t
        if t == 0:
            return Point.at_vertex(g.origin((o[0], 1)))
        if t == 1:
            return Point.at_vertex(g.terminus((o[0], 1)))
        assert 0 < t < 1
        return Point("interior", edge=o[0], t=t)

    def is_vertex(self) -> bool:
        return self.kind == "vertex"

    def param_along(self, o: OEdge) -> Scalar:
        """Parameter of this interior point along the oriented edge o."""
        assert self.kind == "interior" and self.edge == o[0]
        return self.t if o[1] > 0 else 1 - self.t

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        if self.kind != other.kind:
            return False
        if self.kind == "vertex":
            return self.vertex == other.vertex
        return self.edge == other.edge and self.t == other.t

    def __hash__(self):
        return hash((self.kind, self.vertex, self.edge, self.t))

    def __repr__(self):
        if self.kind == "vertex":
            return f"Point@{self.vertex}"
        return f"Point@{self.edge}[{self.t}]"


# ---------------------------------------------------------------------------


class Subgraph:
    """A subgraph given by a set of edge ids plus explicit isolated vertices."""

    def __init__(self, owner: MarkedGraph, edge_ids: frozenset, extra_vertices: frozenset = frozenset()):
        assert set(edge_ids) <= set(owner.edges), "edge set not contained in owner"
        self.owner = owner
        self.edge_ids = frozenset(edge_ids)
        self.extra_vertices = frozenset(extra_vertices)

    @property
    def vertex_set(self) -> frozenset:
        vs = set(self.extra_vertices)
        for e in self.edge_ids:
            u, v, _ = self.owner.edges[e]
            vs.add(u)
            vs.add(v)
        return frozenset(vs)

    def valence(self, v: str) -> int:
        return sum(1 for o in self.owner.germs(v) if o[0] in self.edge_ids)

    def volume(self) -> Scalar:
        return sum((self.owner.edge_len(e) for e in self.edge_ids), Fraction(0))

    def components(self) -> list["Subgraph"]:
        """Connected components, each as a Subgraph."""
        g = self.owner
        remaining_edges = set(self.edge_ids)
        vs_left = set(self.extra_vertices)
        comps = []
        while remaining_edges:
            e0 = min(remaining_edges)
            comp_edges = {e0}
            comp_vs = set(g.edges[e0][:2])
            stack = list(comp_vs)
            while stack:
                v = stack.pop()
                for o in g.germs(v):
                    if o[0] in remaining_edges and o[0] not in comp_edges:
                        comp_edges.add(o[0])
                        t = g.terminus(o)
                        if t not in comp_vs:
                            comp_vs.add(t)
                            stack.append(t)
                        u = g.origin(o)
                        if u not in comp_vs:
                            comp_vs.add(u)
                            stack.append(u)
            remaining_edges -= comp_edges
            vs_left -= comp_vs
            comps.append(Subgraph(g, frozenset(comp_edges)))
        for v in sorted(vs_left):
            comps.append(Subgraph(g, frozenset(), frozenset({v})))
        return comps

    def is_nontrivial(self) -> bool:
        """True if some component is not a tree with at most one non-free vertex."""
        g = self.owner
        for comp in self.components():
            nv = len(comp.vertex_set)
            ne = len(comp.edge_ids)
            betti = ne - nv + 1
            nonfree = sum(1 for v in comp.vertex_set if not g.is_free(v))
            if betti > 0 or nonfree >= 2:
                return True
        return False

    def __contains__(self, e: str) -> bool:
        return e in self.edge_ids

    def __eq__(self, other):
        return (
            isinstance(other, Subgraph)
            and other.owner is self.owner
            and other.edge_ids == self.edge_ids
            and other.extra_vertices == self.extra_vertices
        )

    def __hash__(self):
        return hash((id(self.owner), self.edge_ids, self.extra_vertices))

    def __repr__(self):
        return f"Subgraph({sorted(self.edge_ids)})"


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidityReport:
    free_leaves: list = field(default_factory=list)
    redundant_vertices: list = field(default_factory=list)
    bad_lengths: list = field(default_factory=list)
    duplicate_labels: list = field(default_factory=list)

    @property
    def is_valid_point(self) -> bool:
        return not (self.free_leaves or self.redundant_vertices or self.bad_lengths or self.duplicate_labels)


def validate(g: MarkedGraph) -> ValidityReport:
    rep = ValidityReport()
    for v in sorted(g.vertices):
        if g.is_free(v) and g.valence(v) == 1:
            rep.free_leaves.append(v)
        if g.is_free(v) and g.valence(v) == 2:
            # a free valence-2 vertex is redundant unless both germs belong
            # to the same loop edge (a loop needs its base vertex)
            germs = g.germs(v)
            if germs[0][0] != germs[1][0]:
                rep.redundant_vertices.append(v)
    for e in sorted(g.edges):
        l = g.edge_len(e)
        if l < 0 or (l == 0 and e not in g.collapsed):
            rep.bad_lengths.append(e)
    labels = {}
    for v in sorted(g.vertices):
        lab = g.label(v)
        if lab is not None:
            labels.setdefault(lab, []).append(v)
    for lab, vs in labels.items():
        if len(vs) > 1:
            rep.duplicate_labels.append(lab)
    return rep


def volume(g: MarkedGraph) -> Scalar:
    return g.volume()


# ---------------------------------------------------------------------------
# core


def core(s: Subgraph) -> Subgraph:
    """Maximal core subgraph: recursively cut edges at free valence-1 vertices."""
    g = s.owner
    edges = set(s.edge_ids)
    changed = True
    while changed:
        changed = False
        val = {}
        for e in edges:
            u, v, _ = g.edges[e]
            val[u] = val.get(u, 0) + 1
            val[v] = val.get(v, 0) + 1
        for e in sorted(edges):
            u, v, _ = g.edges[e]
            if (g.is_free(u) and val[u] == 1) or (g.is_free(v) and val[v] == 1):
                edges.discard(e)
                changed = True
        # recompute from scratch each round; graphs are tiny
    # keep non-free vertices of the original subgraph that lost their edges
    survivors = set()
    for e in edges:
        u, v, _ = g.edges[e]
        survivors.add(u)
        survivors.add(v)
    extras = {
        v
        for v in s.vertex_set | set(s.extra_vertices)
        if not g.is_free(v) and v not in survivors
    }
    return Subgraph(g, frozenset(edges), frozenset(extras))


# ---------------------------------------------------------------------------
# collapse


@dataclass
class CollapseRecord:
    source: MarkedGraph
    collapsed: Subgraph
    quotient: MarkedGraph
    projection: dict  # edge id -> edge id or None (collapsed)
    vertex_image: dict  # vertex id -> quotient vertex id
    face_at_infinity: bool
    validity: ValidityReport
    # (quotient vertex, marker index) -> letters of the collapsed-run element,
    # filled in by the induced-map construction when one exists
    marker_elements: dict = field(default_factory=dict)


_FRESH_LABEL_COUNTER = [0]


def _fresh_label(base: str) -> str:
    _FRESH_LABEL_COUNTER[0] += 1
    return f"{base}#{_FRESH_LABEL_COUNTER[0]}"


def collapse(g: MarkedGraph, s: Subgraph) -> CollapseRecord:
    """Collapse each component of s to a point.

    Components with nontrivial fundamental group (or merging two vertex
    groups) become non-free vertices with fresh labels: a face at
    infinity.  Collapsed trees with at most one non-free vertex yield
    finitary faces.
    """
    assert s.owner is g
    vertex_image = {v: v for v in g.vertices}
    new_vertices = dict(g.vertices)
    at_infinity = False
    for comp in s.components():
        vs = sorted(comp.vertex_set)
        ne = len(comp.edge_ids)
        betti = ne - len(vs) + 1
        nonfree = [v for v in vs if not g.is_free(v)]
        rep = vs[0]
        for v in vs:
            vertex_image[v] = rep
        for v in vs:
            if v != rep and v in new_vertices:
                del new_vertices[v]
        if betti > 0 or len(nonfree) >= 2:
            at_infinity = True
            new_vertices[rep] = _fresh_label("G")
        elif len(nonfree) == 1:
            new_vertices[rep] = g.label(nonfree[0])
        else:
            new_vertices[rep] = None
    projection = {}
    new_edges = {}
    for e, (u, v, l) in g.edges.items():
        if e in s.edge_ids:
            projection[e] = None
        else:
            projection[e] = e
            new_edges[e] = (vertex_image[u], vertex_image[v], l)
    quotient = MarkedGraph(new_vertices, new_edges, g.collapsed & set(new_edges))
    return CollapseRecord(
        source=g,
        collapsed=s,
        quotient=quotient,
        projection=projection,
        vertex_image=vertex_image,
        face_at_infinity=at_infinity,
        validity=validate(quotient),
    )


# ---------------------------------------------------------------------------
# thin part and (M, eps)-collapsedness


def thin_part(g: MarkedGraph, eps: Scalar, loop_oracle=None) -> Subgraph:
    """Union of supports of loops shorter than eps * vol(g), cored."""
    assert eps > 0
    from ttkit import loops as loops_mod

    loop_list = loop_oracle(g) if loop_oracle is not None else loops_mod.brute_force_loops(g, 2)
    threshold = Fraction(eps) * g.volume()
    support = set()
    for gamma in loop_list:
        if loops_mod.length(g, gamma) < threshold:
            support |= {eid for eid in gamma.occurrence()}
    return core(Subgraph(g, frozenset(support)))


def is_M_eps_collapsed(g: MarkedGraph, M: Scalar, eps: Scalar, loop_oracle=None) -> bool:
    """Some loop is shorter than eps*vol and no loop length lies in [eps*vol, M*vol]."""
    M = Fraction(M)
    eps = Fraction(eps)
    assert M > eps > 0
    from ttkit import loops as loops_mod

    loop_list = loop_oracle(g) if loop_oracle is not None else loops_mod.brute_force_loops(g, 2)
    vol = g.volume()
    lengths = [loops_mod.length(g, gamma) for gamma in loop_list]
    if not any(l < eps * vol for l in lengths):
        return False
    return all(l < eps * vol or l > M * vol for l in lengths)


# ---------------------------------------------------------------------------
# kurosh rank


def kurosh_rank(g: MarkedGraph) -> int:
    """Sum over components of first Betti number plus non-free vertex count."""
    total = 0
    for comp in g.components():
        ne = sum(1 for e, (u, v, _) in g.edges.items() if u in comp)
        nv = len(comp)
        betti = ne - nv + 1
        nonfree = sum(1 for v in comp if not g.is_free(v))
        total += betti + nonfree
    return total


# ---------------------------------------------------------------------------
# normalization (removal of redundant free valence-2 vertices)


def normalize(g: MarkedGraph):
    """Remove redundant free valence-2 vertices by merging their two edges.

    Returns (graph, edge_trace) where edge_trace maps each new edge id to
    the list of oriented edges of g it replaces (in order).
    """
    vertices = dict(g.vertices)
    edges = dict(g.edges)
    trace = {e: [(e, 1)] for e in edges}

    def germs_of(v):
        out = []
        for e, (u, w, _) in edges.items():
            if u == v:
                out.append((e, 1))
            if w == v:
                out.append((e, -1))
        return out

    changed = True
    while changed:
        changed = False
        for v in sorted(vertices):
            if vertices[v] is not None:
                continue
            gs = germs_of(v)
            if len(gs) != 2 or gs[0][0] == gs[1][0]:
                continue
            (e1, s1), (e2, s2) = gs
            # merged edge runs from the far end of e1 to the far end of e2
            o1 = (e1, -s1)  # oriented into v reversed: from far end to v
            u1 = edges[e1][0] if s1 < 0 else edges[e1][1]
            # origin of merged edge: far endpoint of e1
            far1 = edges[e1][1] if s1 > 0 else edges[e1][0]
            far2 = edges[e2][1] if s2 > 0 else edges[e2][0]
            new_len = edges[e1][2] + edges[e2][2]
            new_id = e1
            seq = [(x, s * (-s1)) for (x, s) in reversed(trace[e1])]
            # orient e1 toward v then continue through e2
            seq = []
            t1 = trace[e1] if s1 < 0 else [(x, -s) for (x, s) in reversed(trace[e1])]
            # t1 now runs from far1 to v
            t2 = trace[e2] if s2 > 0 else None
            t2 = [(x, s) for (x, s) in trace[e2]] if s2 > 0 else [(x, -s) for (x, s) in reversed(trace[e2])]
            # t2 runs from v to far2
            seq = t1 + t2
            del edges[e2]
            del trace[e2]
            edges[new_id] = (far1, far2, new_len)
            trace[new_id] = seq
            del vertices[v]
            changed = True
            break
    return MarkedGraph(vertices, edges, g.collapsed & set(edges)), trace
