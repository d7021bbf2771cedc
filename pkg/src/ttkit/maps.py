"""Straight maps: fractional paths, stretch, gates, legality, train-track predicates.

Edge images are fractional paths: sequences of letters that extend the
loops-module alphabet with partial traversals ('F', edge id, sign, lo, hi),
meaning the segment of the oriented edge from parameter lo to parameter hi
(0 <= lo < hi <= 1, measured along the chosen orientation).
"""

from __future__ import annotations

from fractions import Fraction

from ttkit.errors import (EmptyLoop, NotInvariant, NotStabilized, ZeroLengthEdge)
from ttkit.graphs import MarkedGraph, Point, Subgraph, core
from ttkit.loops import (E, Loop, M, cancels, inv_letter, inv_word, is_edge_letter,
                         letter_origin, letter_terminus, tighten)
from ttkit.policy import EXACT, NumericPolicy, Scalar

# ---------------------------------------------------------------------------
# fractional letters


def F(eid: str, sign: int, lo, hi):
    lo, hi = Fraction(lo), Fraction(hi)
    assert 0 <= lo < hi <= 1
    if lo == 0 and hi == 1:
        return ("E", eid, sign)
    return ("F", eid, sign, lo, hi)


def frac_inv_letter(l):
    if l[0] == "F":
        return ("F", l[1], -l[2], 1 - l[4], 1 - l[3])
    return inv_letter(l)


def frac_inv_word(word):
    return [frac_inv_letter(l) for l in reversed(word)]


def _as_frac(l):
    """Normalize an edge letter to ('F', e, s, lo, hi) form."""
    if l[0] == "E":
        return ("F", l[1], l[2], Fraction(0), Fraction(1))
    return l


def _canon_frac(l):
    if l[0] == "F" and l[3] == 0 and l[4] == 1:
        return ("E", l[1], l[2])
    return l


def letter_length(g: MarkedGraph, l) -> Scalar:
    if l[0] == "E":
        return g.edge_len(l[1])
    if l[0] == "F":
        return (l[4] - l[3]) * g.edge_len(l[1])
    return Fraction(0)


def letter_start(g: MarkedGraph, l) -> Point:
    if l[0] == "M":
        return Point.at_vertex(l[1])
    if l[0] == "E":
        return Point.at_vertex(g.origin((l[1], l[2])))
    return Point.interior(g, (l[1], l[2]), l[3])


def letter_end(g: MarkedGraph, l) -> Point:
    if l[0] == "M":
        return Point.at_vertex(l[1])
    if l[0] == "E":
        return Point.at_vertex(g.terminus((l[1], l[2])))
    return Point.interior(g, (l[1], l[2]), l[4])


def _combine(a, b):
    """Interaction of adjacent letters: None (push), [] (cancel), or [merged]."""
    if a[0] == "M" or b[0] == "M":
        if cancels(a, b) if (a[0] == "M" and b[0] == "M") else False:
            return []
        return None
    if a[1] != b[1]:
        return None
    fa, fb = _as_frac(a), _as_frac(b)
    if fa[2] == fb[2]:
        # same direction: continuation requires fa.hi == fb.lo
        if fa[4] == fb[3]:
            return [F(fa[1], fa[2], fa[3], fb[4])]
        return None
    # opposite direction: fb covers, in fa's coordinates, 1-fb.hi .. 1-fb.lo
    # and starts (in fa coordinates) at 1-fb.lo; adjacency means fa.hi == 1-fb.lo
    if fa[4] != 1 - fb[3]:
        return None
    c = 1 - fb[4]  # endpoint in fa coordinates
    if c == fa[3]:
        return []
    if c > fa[3]:
        return [F(fa[1], fa[2], fa[3], c)]
    return [F(fa[1], -fa[2], 1 - fa[3], 1 - c)]


def frac_tighten(word) -> list:
    out = []
    for l in word:
        cur = l
        while out is not None and cur is not None:
            if not out:
                out.append(cur)
                cur = None
                break
            res = _combine(out[-1], cur)
            if res is None:
                out.append(cur)
                cur = None
            elif res == []:
                out.pop()
                cur = None
            else:
                out.pop()
                cur = res[0]
        # loop exits with cur consumed
    return [_canon_frac(l) for l in out]


def cyclic_frac_tighten(word) -> list:
    w = frac_tighten(word)
    while len(w) >= 2:
        res = _combine(w[-1], w[0])
        if res is None:
            break
        if res == []:
            w = frac_tighten(w[1:-1])
        else:
            w = frac_tighten(res + w[1:-1]) if len(w) > 2 else res
            if len(w) <= 1:
                break
            # merged letter now sits at the seam; keep it at the front
            continue
    return [_canon_frac(l) for l in w]


def frac_length(g: MarkedGraph, word) -> Scalar:
    return sum((letter_length(g, l) for l in word), Fraction(0))


def support(word) -> set:
    return {l[1] for l in word if l[0] in ("E", "F")}


# ---------------------------------------------------------------------------


class FracPath:
    """Tight constant-speed path in the geometric realization of a graph."""

    __slots__ = ("graph", "letters", "_start")

    def __init__(self, graph: MarkedGraph, letters, start: Point = None, pretightened=False):
        self.graph = graph
        letters = list(letters) if pretightened else frac_tighten(list(letters))
        self.letters = tuple(letters)
        if not letters:
            assert start is not None, "degenerate path needs an explicit point"
            self._start = start
        else:
            self._start = letter_start(graph, letters[0])
            if start is not None:
                assert start == self._start, f"start mismatch: {start} vs {self._start}"

    @property
    def start(self) -> Point:
        return self._start

    @property
    def end(self) -> Point:
        if not self.letters:
            return self._start
        return letter_end(self.graph, self.letters[-1])

    def is_degenerate(self) -> bool:
        return not self.letters

    def length(self) -> Scalar:
        return frac_length(self.graph, self.letters)

    def reverse(self) -> "FracPath":
        return FracPath(self.graph, frac_inv_word(list(self.letters)), start=self.end, pretightened=True)

    def support(self) -> set:
        return support(self.letters)

    def first_direction(self):
        """(leading markers, ('dir', e, s) or None) describing the initial germ."""
        markers = []
        for l in self.letters:
            if l[0] == "M":
                markers.append(l)
            else:
                return (tuple(markers), ("dir", l[1], l[2]))
        return (tuple(markers), None)

    def point_at_length(self, s: Scalar) -> Point:
        s = Fraction(s)
        assert 0 <= s <= self.length()
        if not self.letters:
            return self._start
        acc = Fraction(0)
        for l in self.letters:
            ll = letter_length(self.graph, l)
            if s <= acc + ll and ll > 0:
                fl = _as_frac(l) if l[0] != "M" else None
                if fl is None:
                    return Point.at_vertex(l[1])
                t = fl[3] + (fl[4] - fl[3]) * (s - acc) / ll
                return Point.interior(self.graph, (fl[1], fl[2]), t)
            acc += ll
        return self.end

    def point_at_fraction(self, t: Scalar) -> Point:
        if self.is_degenerate():
            return self._start
        return self.point_at_length(Fraction(t) * self.length())

    def subpath_by_length(self, s0: Scalar, s1: Scalar) -> "FracPath":
        """Portion between arclengths s0 <= s1.  Markers at interior positions
        are kept; markers sitting exactly at a cut are kept when they lie at
        the boundary closest to the retained side that first reaches them."""
        s0, s1 = Fraction(s0), Fraction(s1)
        L = self.length()
        assert 0 <= s0 <= s1 <= L
        if s0 == s1:
            return FracPath(self.graph, [], start=self.point_at_length(s0))
        out = []
        acc = Fraction(0)
        for l in self.letters:
            ll = letter_length(self.graph, l)
            if l[0] == "M":
                if s0 < acc < s1 or (s0 == acc and out) or (acc == s1 and False):
                    out.append(l)
                continue
            lo_cut = max(s0, acc)
            hi_cut = min(s1, acc + ll)
            if lo_cut < hi_cut:
                fl = _as_frac(l)
                a = fl[3] + (fl[4] - fl[3]) * (lo_cut - acc) / ll
                b = fl[3] + (fl[4] - fl[3]) * (hi_cut - acc) / ll
                out.append(F(fl[1], fl[2], a, b))
            acc += ll
        return FracPath(self.graph, out, start=self.point_at_length(s0))

    def subpath_by_fraction(self, t0: Scalar, t1: Scalar) -> "FracPath":
        L = self.length()
        return self.subpath_by_length(Fraction(t0) * L, Fraction(t1) * L)

    def __eq__(self, other):
        return (
            isinstance(other, FracPath)
            and self.letters == other.letters
            and self._start == other._start
        )

    def __hash__(self):
        return hash((self.letters, self._start))

    def __repr__(self):
        if not self.letters:
            return f"FracPath(degenerate at {self._start})"
        return f"FracPath({self.letters})"


# ---------------------------------------------------------------------------


class StraightMap:
    """Straight map between marked graphs, determined by vertex/edge images.

    Edge images are stored for the positive orientation; the image of the
    reversed edge is the reversed path.  Non-free vertices map to non-free
    vertices; markers transport to the image vertex with index and sign
    preserved unless an explicit marker_map overrides the index.
    """

    def __init__(self, domain: MarkedGraph, codomain: MarkedGraph,
                 vertex_image: dict, edge_image: dict, marker_map: dict = None):
        self.domain = domain
        self.codomain = codomain
        self.vertex_image = dict(vertex_image)
        self.edge_image = dict(edge_image)
        self.marker_map = dict(marker_map or {})
        self.nonfree_map = {}
        for v in domain.vertices:
            assert v in self.vertex_image, f"missing vertex image for {v}"
            p = self.vertex_image[v]
            if not domain.is_free(v):
                assert p.is_vertex() and not codomain.is_free(p.vertex), \
                    f"non-free vertex {v} must map to a non-free vertex"
                self.nonfree_map[v] = p.vertex
        for e, (u, v, _) in domain.edges.items():
            img = self.edge_image[e]
            assert isinstance(img, FracPath) and img.graph is codomain
            assert img.start == self.vertex_image[u], f"edge {e}: start {img.start} != f({u})"
            assert img.end == self.vertex_image[v], f"edge {e}: end {img.end} != f({v})"

    def is_self_map(self) -> bool:
        return self.domain is self.codomain or (
            self.domain.vertices == self.codomain.vertices
            and self.domain.edges == self.codomain.edges
        )

    def oriented_image(self, o) -> FracPath:
        img = self.edge_image[o[0]]
        return img if o[1] > 0 else img.reverse()

    def transport_marker(self, l):
        assert l[0] == "M"
        v, idx, sign = l[1], l[2], l[3]
        w = self.nonfree_map[v]
        idx2 = self.marker_map.get((v, idx), idx)
        return ("M", w, idx2, sign)

    def point_image(self, p: Point) -> Point:
        if p.is_vertex():
            return self.vertex_image[p.vertex]
        img = self.edge_image[p.edge]
        return img.point_at_fraction(p.t)

    def with_updates(self, vertex_image=None, edge_image=None) -> "StraightMap":
        vi = dict(self.vertex_image)
        ei = dict(self.edge_image)
        if vertex_image:
            vi.update(vertex_image)
        if edge_image:
            ei.update(edge_image)
        return StraightMap(self.domain, self.codomain, vi, ei, self.marker_map)

    def __repr__(self):
        return f"StraightMap({len(self.domain.edges)} edges)"


# ---------------------------------------------------------------------------
# stretch / tension


def stretch(f: StraightMap, e: str) -> Scalar:
    l = f.domain.edge_len(e)
    if l == 0:
        if e in f.domain.collapsed:
            return Fraction(0)
        raise ZeroLengthEdge(e)
    return f.edge_image[e].length() / l


def lip(f: StraightMap) -> Scalar:
    vals = [stretch(f, e) for e in f.domain.edges if f.domain.edge_len(e) > 0]
    assert vals, "graph has no positive-length edges"
    return max(vals)


def tension_graph(f: StraightMap, policy: NumericPolicy = EXACT) -> Subgraph:
    m = lip(f)
    edges = {e for e in f.domain.edges
             if f.domain.edge_len(e) > 0 and policy.geq(stretch(f, e), m)}
    return Subgraph(f.domain, frozenset(edges))


# ---------------------------------------------------------------------------
# images of paths and loops


def map_word(f: StraightMap, word) -> list:
    """Concatenated letter images, not yet tightened."""
    out = []
    for l in word:
        if l[0] == "M":
            out.append(f.transport_marker(l))
        elif l[0] == "E":
            out.extend(f.oriented_image((l[1], l[2])).letters)
        else:
            img = f.edge_image[l[1]]
            if l[2] > 0:
                out.extend(img.subpath_by_fraction(l[3], l[4]).letters)
            else:
                out.extend(img.subpath_by_fraction(1 - l[4], 1 - l[3]).reverse().letters)
    return out


def image_of_path(f: StraightMap, x):
    """f-sharp: straight image followed by (cyclic) tightening.

    EdgePath input (list of letters) yields a FracPath; Loop input yields
    the cyclically tightened image word (possibly with fractional letters),
    raising EmptyLoop for elliptic images.
    """
    if isinstance(x, Loop):
        w = cyclic_frac_tighten(map_word(f, list(x.letters)))
        if not any(l[0] in ("E", "F") for l in w):
            raise EmptyLoop("image of loop is elliptic")
        return w
    start = f.point_image(letter_start(f.domain, x[0])) if x else None
    return FracPath(f.codomain, frac_tighten(map_word(f, list(x))), start=start)


def loop_image_length(f: StraightMap, gamma: Loop) -> Scalar:
    try:
        return frac_length(f.codomain, image_of_path(f, gamma))
    except EmptyLoop:
        return Fraction(0)


# ---------------------------------------------------------------------------
# gates


class GateStructure:
    """Partition of the edge-germs at each vertex."""

    def __init__(self, graph: MarkedGraph, partition: dict):
        # partition: vertex -> list of frozensets of germs (oriented edges)
        self.graph = graph
        self.partition = {v: sorted(gates, key=sorted) for v, gates in partition.items()}
        self._index = {}
        for v, gates in self.partition.items():
            for i, gate in enumerate(gates):
                for germ in gate:
                    self._index[germ] = (v, i)

    def gate_of(self, germ):
        return self._index[germ]

    def gates_at(self, v):
        return self.partition.get(v, [])

    def same_gate(self, g1, g2) -> bool:
        return self._index[g1] == self._index[g2]

    def num_gates(self, v, germs=None) -> int:
        if germs is None:
            return len(self.partition.get(v, []))
        return len({self._index[g] for g in germs})

    def refines(self, other: "GateStructure") -> bool:
        for v, gates in self.partition.items():
            for gate in gates:
                reps = {other._index[g] for g in gate}
                if len(reps) > 1:
                    return False
        return True

    def __eq__(self, other):
        return isinstance(other, GateStructure) and self.partition == other.partition

    def __repr__(self):
        return f"GateStructure({self.partition})"


def _germ_image_key(f: StraightMap, germ):
    img = f.oriented_image(germ)
    if img.is_degenerate():
        return ("collapsed", germ)
    markers, d = img.first_direction()
    return ("dir", markers, d)


def gates(f: StraightMap) -> GateStructure:
    """Germs grouped by equal nondegenerate image direction.

    Collapsed germs are singleton gates.  At non-free vertices the germs
    separated by a marker in their images land in different groups because
    the leading-marker prefix is part of the grouping key.
    """
    partition = {}
    for v in sorted(f.domain.vertices):
        groups = {}
        for germ in f.domain.germs(v):
            key = _germ_image_key(f, germ)
            groups.setdefault(key, set()).add(germ)
        partition[v] = [frozenset(s) for s in groups.values()]
    return GateStructure(f.domain, partition)


def _join_partitions(gs_list, graph):
    parent = {}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for v in graph.vertices:
        for germ in graph.germs(v):
            parent[germ] = germ
    for gs in gs_list:
        for v, gate_list in gs.partition.items():
            for gate in gate_list:
                gate = sorted(gate)
                for g in gate[1:]:
                    union(gate[0], g)
    partition = {}
    for v in sorted(graph.vertices):
        classes = {}
        for germ in graph.germs(v):
            classes.setdefault(find(germ), set()).add(germ)
        partition[v] = [frozenset(s) for s in classes.values()]
    return GateStructure(graph, partition)


def gate_closure(f: StraightMap, k_max: int = None) -> GateStructure:
    """Join of the gate structures of f, f^2, ... until stabilization."""
    assert f.is_self_map()
    total_germs = sum(len(f.domain.germs(v)) for v in f.domain.vertices)
    if k_max is None:
        k_max = max(2, total_germs)
    current = gates(f)
    fk = f
    for k in range(2, k_max + 1):
        fk = compose(f, fk)
        joined = _join_partitions([current, gates(fk)], f.domain)
        if joined == current:
            return current
        current = joined
    # one extra check: closure must be a fixpoint of joining the next power
    fk = compose(f, fk)
    joined = _join_partitions([current, gates(fk)], f.domain)
    if joined == current:
        return current
    raise NotStabilized(f"gate closure did not stabilize within k={k_max}")


# ---------------------------------------------------------------------------
# legality


def is_legal_turn(gs: GateStructure, germ1, germ2, through_marker: bool = False) -> bool:
    if through_marker:
        return True
    return not gs.same_gate(germ1, germ2)


def _word_turns(g: MarkedGraph, word, cyclic: bool):
    """Turns of a word of full edge/marker letters: (incoming germ, outgoing germ, through_marker)."""
    items = list(word)
    n = len(items)
    pairs = list(zip(range(n), range(1, n))) + ([(n - 1, 0)] if cyclic and n > 1 else [])
    if cyclic and n == 1 and items[0][0] == "E":
        pairs = [(0, 0)]
    turns = []
    for i, j in pairs:
        a, b = items[i], items[j]
        if a[0] == "M" or b[0] == "M":
            # scan to the surrounding edge letters; the turn is through a marker
            continue
        turns.append(((a[1], -a[2]), (b[1], b[2]), False))
    # turns across markers: edge letter, markers, edge letter -> through marker (always legal)
    return turns


def is_legal(x, gs: GateStructure) -> bool:
    """Legality of a turn, path, or loop with respect to a gate structure."""
    if isinstance(x, tuple) and len(x) == 3 and isinstance(x[0], str):
        raise TypeError("pass turns as (germ1, germ2, through_marker)")
    if isinstance(x, tuple) and len(x) == 3:
        return is_legal_turn(gs, x[0], x[1], x[2])
    word = list(x.letters) if isinstance(x, Loop) else list(x)
    cyclic = isinstance(x, Loop)
    for g1, g2, tm in _word_turns(gs.graph, word, cyclic):
        if not is_legal_turn(gs, g1, g2, tm):
            return False
    return True


def image_word_is_legal(word, gs: GateStructure) -> bool:
    """Legality of a fractional image word: only full-letter turns count."""
    full = [l for l in word]
    n = len(full)
    for i in range(n - 1):
        a, b = full[i], full[i + 1]
        if a[0] == "M" or b[0] == "M":
            continue
        fa, fb = _as_frac(a), _as_frac(b)
        if fa[4] != 1 or fb[3] != 0:
            continue  # interior junction, not at a vertex
        g1 = (fa[1], -fa[2])
        g2 = (fb[1], fb[2])
        if gs.same_gate(g1, g2):
            return False
    return True


# ---------------------------------------------------------------------------
# optimality predicates


def _tension_vertex_ok(f, gs, T: Subgraph, v) -> bool:
    germs = [o for o in f.domain.germs(v) if o[0] in T.edge_ids]
    if not germs:
        return True
    if not f.domain.is_free(v):
        return True  # a marker always provides a second gate
    return gs.num_gates(v, germs) >= 2


def is_optimal(f: StraightMap, policy: NumericPolicy = EXACT) -> bool:
    T = tension_graph(f, policy)
    gs = gates(f)
    return all(_tension_vertex_ok(f, gs, T, v) for v in T.vertex_set)


def is_weakly_optimal(f: StraightMap, policy: NumericPolicy = EXACT) -> bool:
    """lip(f) equals the candidate-computed displacement of the domain point."""
    from ttkit.loops import enumerate_candidates, length

    assert f.is_self_map()
    best = Fraction(0)
    for cand in enumerate_candidates(f.domain):
        denom = length(f.domain, cand.loop)
        if denom == 0:
            continue
        best = max(best, loop_image_length(f, cand.loop) / denom)
    return policy.eq(lip(f), best)


def maximal_legal_candidates(f: StraightMap, policy: NumericPolicy = EXACT):
    """Candidate loops inside the tension graph, legal, stretched by lip(f)."""
    from ttkit.loops import enumerate_candidates, length

    T = tension_graph(f, policy)
    gs = gates(f)
    m = lip(f)
    out = []
    for cand in enumerate_candidates(f.domain):
        occ = cand.loop.occurrence()
        if not set(occ) <= T.edge_ids:
            continue
        if not is_legal(cand.loop, gs):
            continue
        denom = length(f.domain, cand.loop)
        if denom > 0 and policy.eq(loop_image_length(f, cand.loop) / denom, m):
            out.append(cand)
    return out


def is_minimal_optimal(f: StraightMap, policy: NumericPolicy = EXACT) -> bool:
    """Tension graph covered by axes of maximally stretched legal loops."""
    if not is_optimal(f, policy):
        return False
    T = tension_graph(f, policy)
    covered = set()
    for cand in maximal_legal_candidates(f, policy):
        covered |= set(cand.loop.occurrence())
    return T.edge_ids <= covered


# ---------------------------------------------------------------------------
# invariant subgraphs, partial train tracks


def invariant_subgraph(f: StraightMap, within: Subgraph) -> Subgraph:
    """Maximal subgraph of `within` whose edge-image supports stay inside it."""
    edges = set(within.edge_ids)
    changed = True
    while changed:
        changed = False
        for e in sorted(edges):
            if not f.edge_image[e].support() <= edges:
                edges.discard(e)
                changed = True
    return core(Subgraph(f.domain, frozenset(edges)))


def _germ_closure_key(f: StraightMap, gs: GateStructure, germ):
    """Image gate of a germ: leading markers plus the gate of the first image germ."""
    img = f.oriented_image(germ)
    if img.is_degenerate():
        return ("collapsed", germ)
    markers, d = img.first_direction()
    if d is None:
        return ("markers-only", markers)
    _, e, s = d
    first = img.letters[len(markers)]
    if first[0] == "E" or (_as_frac(first)[3] == 0):
        # starts at a vertex: compare gates of the outgoing germ there
        return ("gate", markers, gs.gate_of((e, s)))
    return ("interior-dir", markers, (e, s, _as_frac(first)[3]))


def is_partial_train_track(f: StraightMap, policy: NumericPolicy = EXACT):
    """A nontrivial invariant subgraph of the tension graph on which f is a
    train track map with respect to the iterated gate structure.

    Returns (A, gate_closure, one_step_flag) or None.
    """
    assert f.is_self_map()
    T = tension_graph(f, policy)
    A = invariant_subgraph(f, T)
    if not A.edge_ids or not A.is_nontrivial():
        return None

    closure = gate_closure(f)

    def checks(gs: GateStructure) -> bool:
        for v in A.vertex_set:
            germs = [o for o in f.domain.germs(v) if o[0] in A.edge_ids]
            if f.domain.is_free(v) and germs and gs.num_gates(v, germs) < 2:
                return False
            # germs in distinct gates must map to distinct image gates
            keys_by_gate = {}
            for germ in germs:
                gate = gs.gate_of(germ)
                keys_by_gate.setdefault(gate, set()).add(_germ_closure_key(f, gs, germ))
            gate_list = sorted(keys_by_gate)
            for i, g1 in enumerate(gate_list):
                for g2 in gate_list[i + 1:]:
                    if keys_by_gate[g1] & keys_by_gate[g2]:
                        return False
        for e in sorted(A.edge_ids):
            img = f.edge_image[e]
            if img.is_degenerate():
                return False
            if not image_word_is_legal(list(img.letters), gs):
                return False
        return True

    if not checks(closure):
        return None
    one_step = checks(gates(f))
    return (A, closure, one_step)


# ---------------------------------------------------------------------------
# composition / iteration


def compose(g: StraightMap, f: StraightMap) -> StraightMap:
    """g after f."""
    assert f.codomain is g.domain or f.codomain.edges == g.domain.edges
    vi = {v: g.point_image(f.vertex_image[v]) for v in f.domain.vertices}
    ei = {}
    for e in f.domain.edges:
        word = map_word(g, list(f.edge_image[e].letters))
        u = f.domain.edges[e][0]
        ei[e] = FracPath(g.codomain, frac_tighten(word), start=vi[u])
    mm = {}
    for (v, idx), idx2 in f.marker_map.items():
        w = f.nonfree_map[v]
        mm[(v, idx)] = g.marker_map.get((w, idx2), idx2)
    return StraightMap(f.domain, g.codomain, vi, ei, mm)


def iterate(f: StraightMap, k: int) -> StraightMap:
    assert k >= 1 and f.is_self_map()
    out = f
    for _ in range(k - 1):
        out = compose(f, out)
    return out


# ---------------------------------------------------------------------------
# combinatorialization (integral occurrence vectors for the LP)


def combinatorialize(f: StraightMap) -> StraightMap:
    """Homotope vertex images to vertices so edge images use full letters.

    A vertex whose image lies inside an edge is slid to the forward endpoint
    of that edge; edge images are corrected by the connecting paths and
    re-tightened.  The result is homotopic to f and has integral occurrence
    vectors for every loop image.
    """
    rho = {}
    vi = {}
    for v, p in f.vertex_image.items():
        if p.is_vertex():
            rho[v] = None
            vi[v] = p
        else:
            rho[v] = [F(p.edge, 1, p.t, 1)]
            vi[v] = Point.at_vertex(f.codomain.terminus((p.edge, 1)))
    ei = {}
    for e, (u, v, _) in f.domain.edges.items():
        word = list(f.edge_image[e].letters)
        if rho[u] is not None:
            word = frac_inv_word(rho[u]) + word
        if rho[v] is not None:
            word = word + rho[v]
        word = frac_tighten(word)
        assert all(l[0] in ("E", "M") for l in word), f"residual fractional letter in {word}"
        ei[e] = FracPath(f.codomain, word, start=vi[u], pretightened=True)
    return StraightMap(f.domain, f.codomain, vi, ei, f.marker_map)


# ---------------------------------------------------------------------------
# quotient and restriction


class InfinityFlag:
    """Returned when a collapsed subgraph is not invariant: λ = ∞ semantics."""

    def __repr__(self):
        return "InfinityFlag"


INFINITY_FLAG = InfinityFlag()


def _is_strictly_invariant(f: StraightMap, A: Subgraph) -> bool:
    return all(f.edge_image[e].support() <= A.edge_ids for e in A.edge_ids)


def quotient_map(f: StraightMap, A: Subgraph):
    """Induced map on the collapse of an invariant core subgraph.

    Each maximal run of collapsed letters in an edge image represents an
    element of the fundamental group of its component (conjugated onto a
    fixed basepoint by spanning-tree paths).  Trivial elements disappear;
    nontrivial ones become markers at the new non-free vertex, with a
    per-vertex registry assigning indices so that a run and its exact
    inverse get opposite signs.  Returns InfinityFlag if A is not invariant.
    """
    from ttkit.graphs import collapse

    assert f.is_self_map()
    if not _is_strictly_invariant(f, A):
        return INFINITY_FLAG
    rec = collapse(f.domain, A)
    Q = rec.quotient
    g0 = f.domain
    comps = A.components()
    comp_of = {}
    for ci, comp in enumerate(comps):
        for w in comp.vertex_set:
            comp_of[w] = ci

    # spanning tree per component: tree_path[v] = letters from the base to v
    tree_path = {}
    comp_is_tree = []
    for comp in comps:
        vs = sorted(comp.vertex_set)
        base = vs[0]
        paths = {base: []}
        frontier = [base]
        tree_edges = set()
        while frontier:
            w = frontier.pop(0)
            for o in g0.germs(w):
                if o[0] in comp.edge_ids and o[0] not in tree_edges:
                    t = g0.terminus(o)
                    if t not in paths:
                        paths[t] = paths[w] + [("E", o[0], o[1])]
                        tree_edges.add(o[0])
                        frontier.append(t)
        tree_path.update(paths)
        nonfree = sum(1 for w in comp.vertex_set if not g0.is_free(w))
        comp_is_tree.append(len(comp.edge_ids) == len(tree_edges) and nonfree <= 1)

    def path_from_base(p: Point):
        """Letters from the component base to the point p inside it."""
        if p.is_vertex():
            return list(tree_path[p.vertex])
        u = g0.edges[p.edge][0]
        return list(tree_path[u]) + [F(p.edge, 1, 0, p.t)] if p.t > 0 else list(tree_path[u])

    registry = {}  # quotient vertex -> {elem word: index}
    next_index = {}

    def project_point(p: Point) -> Point:
        if p.is_vertex():
            return Point.at_vertex(rec.vertex_image[p.vertex])
        if p.edge in A.edge_ids:
            return Point.at_vertex(rec.vertex_image[g0.edges[p.edge][0]])
        return p

    def run_to_letters(run, qv):
        start = letter_start(g0, run[0])
        end = letter_end(g0, run[-1])
        elem = frac_tighten(path_from_base(start) + list(run) + frac_inv_word(path_from_base(end)))
        if not elem:
            return []
        ci = comp_of[start.vertex if start.is_vertex() else g0.edges[start.edge][0]]
        if comp_is_tree[ci]:
            # trivial fundamental group: only markers survive, conjugation
            # by tree paths is immaterial for opaque elements
            return [("M", qv, l[2], l[3]) for l in elem if l[0] == "M"]
        key = tuple(elem)
        ikey = tuple(frac_inv_word(elem))
        reg = registry.setdefault(qv, {})
        if key in reg:
            return [("M", qv, reg[key], 1)]
        if ikey in reg:
            return [("M", qv, reg[ikey], -1)]
        # indices from 1001 up: disjoint from user-supplied marker indices
        idx = next_index.get(qv, 1001)
        next_index[qv] = idx + 1
        reg[key] = idx
        rec.marker_elements[(qv, idx)] = tuple(elem)
        return [("M", qv, idx, 1)]

    vi = {v: project_point(f.vertex_image[v]) for v in Q.vertices}
    ei = {}
    for e in Q.edges:
        out = []
        run = []
        for l in f.edge_image[e].letters:
            in_A = (l[0] in ("E", "F") and l[1] in A.edge_ids) or (
                l[0] == "M" and comp_of.get(l[1]) is not None
            )
            if in_A:
                run.append(l)
            else:
                if run:
                    qv = rec.vertex_image[letter_origin(g0, run[0]) if run[0][0] != "F"
                                          else g0.edges[run[0][1]][0]]
                    out.extend(run_to_letters(run, qv))
                    run = []
                out.append(l)
        if run:
            qv = rec.vertex_image[letter_origin(g0, run[0]) if run[0][0] != "F"
                                  else g0.edges[run[0][1]][0]]
            out.extend(run_to_letters(run, qv))
        u = Q.edges[e][0]
        ei[e] = FracPath(Q, frac_tighten(out), start=vi[u])
    return StraightMap(Q, Q, vi, ei, f.marker_map), rec


def restriction(f: StraightMap, A: Subgraph) -> StraightMap:
    """Self-map of A induced by f; requires strict invariance of A."""
    if not _is_strictly_invariant(f, A):
        raise NotInvariant("edge-image support leaves the subgraph")
    g = f.domain
    C = MarkedGraph(
        {v: g.vertices[v] for v in A.vertex_set},
        {e: g.edges[e] for e in A.edge_ids},
        g.collapsed & A.edge_ids,
    )
    vi = {}
    for v in C.vertices:
        p = f.vertex_image[v]
        vi[v] = Point.at_vertex(p.vertex) if p.is_vertex() else Point("interior", edge=p.edge, t=p.t)
    ei = {}
    for e in C.edges:
        letters = list(f.edge_image[e].letters)
        ei[e] = FracPath(C, letters, start=vi[C.edges[e][0]], pretightened=True)
    mm = {k: v for k, v in f.marker_map.items() if k[0] in C.vertices}
    return StraightMap(C, C, vi, ei, mm)
