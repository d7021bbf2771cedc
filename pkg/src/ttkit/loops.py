"""Tight edge paths and loops, candidate enumeration, brute-force loop oracle.

Path letters are tuples: ('E', edge id, sign) traverses an oriented edge,
('M', vertex id, index, sign) is an opaque nontrivial vertex-group marker
at a non-free vertex.  Markers carry zero length and tightening never
cancels an edge pair across a marker.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ttkit.errors import EmptyLoop, IncompatibleLetters, ResourceLimit
from ttkit.graphs import MarkedGraph
from ttkit.policy import Scalar

# ---------------------------------------------------------------------------
# letters


def E(eid: str, sign: int = 1):
    assert sign in (1, -1)
    return ("E", eid, sign)


def M(vid: str, idx: int = 1, sign: int = 1):
    assert sign in (1, -1)
    return ("M", vid, idx, sign)


def inv_letter(l):
    if l[0] == "E":
        return ("E", l[1], -l[2])
    return ("M", l[1], l[2], -l[3])


def inv_word(word):
    return [inv_letter(l) for l in reversed(word)]


def is_edge_letter(l) -> bool:
    return l[0] == "E"


def letter_origin(g: MarkedGraph, l) -> str:
    if l[0] == "M":
        return l[1]
    return g.origin((l[1], l[2]))


def letter_terminus(g: MarkedGraph, l) -> str:
    if l[0] == "M":
        return l[1]
    return g.terminus((l[1], l[2]))


def cancels(l1, l2) -> bool:
    """Whether the two adjacent letters form a cancelling pair."""
    if l1[0] != l2[0]:
        return False
    if l1[0] == "E":
        return l1[1] == l2[1] and l1[2] == -l2[2]
    return l1[1] == l2[1] and l1[2] == l2[2] and l1[3] == -l2[3]


def check_compatible(g: MarkedGraph, word, cyclic: bool = False):
    for l in word:
        if l[0] == "M" and g.is_free(l[1]):
            raise IncompatibleLetters(f"marker at free vertex {l[1]}")
    for a, b in zip(word, word[1:]):
        if letter_terminus(g, a) != letter_origin(g, b):
            raise IncompatibleLetters(f"{a} then {b}")
    if cyclic and word:
        if letter_terminus(g, word[-1]) != letter_origin(g, word[0]):
            raise IncompatibleLetters("cyclic wrap endpoints mismatch")


# ---------------------------------------------------------------------------
# tightening


def tighten(word, g: MarkedGraph = None) -> list:
    """Free reduction under the marker model (stack based, order independent)."""
    if g is not None:
        check_compatible(g, list(word))
    out = []
    for l in word:
        if out and cancels(out[-1], l):
            out.pop()
        else:
            out.append(l)
    return out


def cyclic_tighten(word, g: MarkedGraph = None) -> "Loop":
    """Tighten as a cyclic word; raises EmptyLoop for trivial/elliptic results.

    A cyclic word whose reduction contains no edge letter (for instance a
    conjugate of a single marker) represents an elliptic element and has no
    axis; it is rejected rather than assigned a length.
    """
    if g is not None:
        check_compatible(g, list(word), cyclic=True)
    w = tighten(word)
    while len(w) >= 2 and cancels(w[-1], w[0]):
        w = tighten(w[1:-1])
    if not any(is_edge_letter(l) for l in w):
        raise EmptyLoop(f"cyclic word reduces to {w!r}")
    return Loop(w)


# ---------------------------------------------------------------------------
# loops


def _canonical(word):
    word = tuple(word)
    best = None
    for w in (word, tuple(inv_word(list(word)))):
        for i in range(len(w)):
            rot = w[i:] + w[:i]
            if best is None or rot < best:
                best = rot
    return best


class Loop:
    """Cyclically tight loop in canonical rotation.

    Canonical form is the lexicographically least tuple among all rotations
    of the word and of its inverse, so a loop, its inverse, and all its
    rotations compare equal.
    """

    __slots__ = ("letters",)

    def __init__(self, word):
        word = list(word)
        assert word, "empty loop"
        for a, b in zip(word, word[1:] + word[:1]):
            assert not cancels(a, b), f"cyclic word not tight at {a}|{b}"
        self.letters = _canonical(word)

    def occurrence(self) -> dict:
        """Edge traversal counts, both orientations summed; markers excluded."""
        occ = {}
        for l in self.letters:
            if l[0] == "E":
                occ[l[1]] = occ.get(l[1], 0) + 1
        return occ

    def has_marker(self) -> bool:
        return any(l[0] == "M" for l in self.letters)

    def __eq__(self, other):
        return isinstance(other, Loop) and self.letters == other.letters

    def __lt__(self, other):
        return self.letters < other.letters

    def __hash__(self):
        return hash(self.letters)

    def __repr__(self):
        return f"Loop({format_word(self.letters)})"


def occurrence(x) -> dict:
    if isinstance(x, Loop):
        return x.occurrence()
    occ = {}
    for l in x:
        if l[0] == "E":
            occ[l[1]] = occ.get(l[1], 0) + 1
    return occ


def length(g: MarkedGraph, x) -> Scalar:
    """Bilinear length pairing; markers contribute zero."""
    total = Fraction(0)
    for eid, count in occurrence(x).items():
        total += count * g.edge_len(eid)
    return total


# ---------------------------------------------------------------------------
# rendering and parsing


def format_letter(l) -> str:
    if l[0] == "E":
        return l[1] + ("'" if l[2] < 0 else "")
    return f"@{l[1]}.{l[2]}" + ("'" if l[3] < 0 else "")


def format_word(word) -> str:
    return " ".join(format_letter(l) for l in word)


def parse_letter(tok: str):
    sign = 1
    if tok.endswith("'"):
        sign = -1
        tok = tok[:-1]
    if tok.startswith("@"):
        body = tok[1:]
        if "." not in body:
            raise ValueError(f"malformed marker letter {tok!r}")
        vid, idx = body.rsplit(".", 1)
        return ("M", vid, int(idx), sign)
    if not tok:
        raise ValueError("empty letter")
    return ("E", tok, sign)


def parse_word(text: str) -> list:
    return [parse_letter(t) for t in text.split()]


# ---------------------------------------------------------------------------
# candidates


@dataclass(frozen=True)
class Candidate:
    loop: Loop
    shape: str  # SimpleLoop | InfinityLoop | Barbell | SinglyDegenerateBarbell | DoublyDegenerateBarbell


def _word_vertices(g, word):
    return {letter_origin(g, l) for l in word}


def _rotate_to(g, word, v):
    """Rotate a circle word so it starts at vertex v."""
    for i, l in enumerate(word):
        if letter_origin(g, l) == v:
            return word[i:] + word[:i]
    raise AssertionError(f"vertex {v} not on circle")


def _embedded_circles(g: MarkedGraph) -> list:
    """All embedded circles as edge-letter words, one per canonical class."""
    seen = {}
    for start in sorted(g.vertices):
        stack = [([], {start}, set(), start)]
        while stack:
            word, visited, used, cur = stack.pop()
            for o in g.germs(cur):
                if o[0] in used:
                    continue
                t = g.terminus(o)
                nw = word + [E(*o)]
                if t == start and nw:
                    key = _canonical(nw)
                    if key not in seen:
                        seen[key] = nw
                elif t not in visited:
                    stack.append((nw, visited | {t}, used | {o[0]}, t))
    return [seen[k] for k in sorted(seen)]


def _embedded_arcs(g: MarkedGraph) -> list:
    """All embedded arcs (vertex-distinct simple paths, >= 1 edge) as words."""
    out = []
    for start in sorted(g.vertices):
        stack = [([], [start], set())]
        while stack:
            word, vseq, used = stack.pop()
            cur = vseq[-1]
            for o in g.germs(cur):
                if o[0] in used:
                    continue
                t = g.terminus(o)
                if t in vseq:
                    continue
                nw = word + [E(*o)]
                out.append((nw, vseq + [t]))
                stack.append((nw, vseq + [t], used | {o[0]}))
    return out


def enumerate_candidates(g: MarkedGraph) -> list:
    """All candidate loops of the five shapes, deduplicated and sorted.

    Shapes: embedded simple loop; two embedded circles sharing one vertex;
    two disjoint circles joined by an embedded arc; arc from a non-free
    vertex to a disjoint circle with a marker at the non-free end (or the
    circle alone with a marker when the non-free vertex lies on it); arc
    between two distinct non-free vertices with markers at both ends.
    """
    circles = _embedded_circles(g)
    arcs = _embedded_arcs(g)
    nonfree = [v for v in sorted(g.vertices) if not g.is_free(v)]
    found: dict = {}

    def add(word, shape):
        key = _canonical(word)
        if key not in found:
            found[key] = Candidate(Loop(word), shape)

    for c in circles:
        add(c, "SimpleLoop")

    for i, c1 in enumerate(circles):
        v1s, e1s = _word_vertices(g, c1), {l[1] for l in c1}
        for c2 in circles[i + 1:]:
            v2s, e2s = _word_vertices(g, c2), {l[1] for l in c2}
            if e1s & e2s:
                continue
            shared = v1s & v2s
            if len(shared) == 1:
                v = next(iter(shared))
                w1 = _rotate_to(g, c1, v)
                w2 = _rotate_to(g, c2, v)
                add(w1 + w2, "InfinityLoop")
                add(w1 + _rotate_to(g, inv_word(c2), v), "InfinityLoop")
            elif not shared:
                for arc, vseq in arcs:
                    if vseq[0] in v1s and vseq[-1] in v2s:
                        if set(vseq[1:-1]) & (v1s | v2s):
                            continue
                        w1 = _rotate_to(g, c1, vseq[0])
                        w2 = _rotate_to(g, c2, vseq[-1])
                        add(w1 + arc + w2 + inv_word(arc), "Barbell")
                        add(w1 + arc + _rotate_to(g, inv_word(c2), vseq[-1]) + inv_word(arc), "Barbell")

    for v in nonfree:
        for c in circles:
            vs = _word_vertices(g, c)
            if v in vs:
                add([M(v)] + _rotate_to(g, c, v), "SinglyDegenerateBarbell")
                add([M(v)] + _rotate_to(g, inv_word(c), v), "SinglyDegenerateBarbell")
            else:
                for arc, vseq in arcs:
                    if vseq[0] == v and vseq[-1] in vs and not (set(vseq[1:-1]) & vs):
                        w = _rotate_to(g, c, vseq[-1])
                        add([M(v)] + arc + w + inv_word(arc), "SinglyDegenerateBarbell")
                        add([M(v)] + arc + _rotate_to(g, inv_word(c), vseq[-1]) + inv_word(arc),
                            "SinglyDegenerateBarbell")

    for i, v1 in enumerate(nonfree):
        for v2 in nonfree[i + 1:]:
            for arc, vseq in arcs:
                if vseq[0] == v1 and vseq[-1] == v2:
                    add([M(v1)] + arc + [M(v2)] + inv_word(arc), "DoublyDegenerateBarbell")

    return [found[k] for k in sorted(found)]


# ---------------------------------------------------------------------------
# brute-force oracle


def brute_force_loops(g: MarkedGraph, multiplicity_bound: int = 2, cap: int = 10 ** 6) -> list:
    """Every tight loop with edge multiplicity <= bound, up to canonical form.

    At most one marker (index 1, either sign) per non-free vertex visit.
    Independent maximizer oracle for the candidate enumeration.
    """
    assert multiplicity_bound >= 1
    results: set = set()
    nodes = 0

    letters_at = {}
    for v in g.vertices:
        out = [E(*o) for o in g.germs(v)]
        if not g.is_free(v):
            out.append(M(v, 1, 1))
            out.append(M(v, 1, -1))
        letters_at[v] = out

    # every rotation of a loop appears as a word starting with that
    # rotation's first letter, so restricting the search to words that
    # never contain a letter smaller than their first visits each loop at
    # least once (at the rotation through its minimal letter) and prunes
    # the rest of the rotations
    alphabet = sorted({l for ls in letters_at.values() for l in ls})
    for first in alphabet:
        start = letter_origin(g, first)
        usage = {}
        if first[0] == "E":
            usage[first[1]] = 1
        word = [first]

        def extend(cur):
            nonlocal nodes
            nodes += 1
            if nodes > 20 * cap or len(results) > cap:
                raise ResourceLimit("brute-force loop enumeration cap exceeded")
            if cur == start and any(is_edge_letter(l) for l in word):
                last = word[-1]
                if not cancels(last, first) and not (first[0] == "M" and last[0] == "M"):
                    results.add(Loop(word).letters)
            for l in letters_at[cur]:
                if l < first:
                    continue
                if cancels(word[-1], l):
                    continue
                if l[0] == "M" and word[-1][0] == "M":
                    continue
                if l[0] == "E":
                    if usage.get(l[1], 0) >= multiplicity_bound:
                        continue
                    usage[l[1]] = usage.get(l[1], 0) + 1
                    word.append(l)
                    extend(letter_terminus(g, l))
                    word.pop()
                    usage[l[1]] -= 1
                else:
                    word.append(l)
                    extend(l[1])
                    word.pop()

        extend(letter_terminus(g, first))
    return [Loop(w) for w in sorted(results)]
