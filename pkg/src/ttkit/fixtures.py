"""Built-in example graphs and maps used by tests and the CLI.

All constructions use exact rationals; the square-root lengths resolve to
rational approximations accurate to 1e-12 (see ttkit.policy).
"""

from __future__ import annotations

from fractions import Fraction

from ttkit.graphs import MarkedGraph, Point
from ttkit.loops import E
from ttkit.maps import F, FracPath, StraightMap
from ttkit.policy import GOLDEN, SQRT2


def rose2(len_a=1, len_b=1) -> MarkedGraph:
    return MarkedGraph({"v": None}, {"a": ("v", "v", len_a), "b": ("v", "v", len_b)})


def phi_fib(g: MarkedGraph = None) -> StraightMap:
    """a -> a b, b -> a on the two-petal rose."""
    if g is None:
        g = rose2()
    vi = {"v": Point.at_vertex("v")}
    ei = {
        "a": FracPath(g, [E("a"), E("b")]),
        "b": FracPath(g, [E("a")]),
    }
    return StraightMap(g, g, vi, ei)


def golden_rose2() -> MarkedGraph:
    """Two-petal rose normalized to volume one with golden length ratio."""
    la = GOLDEN / (1 + GOLDEN)
    return rose2(la, 1 - la)


def theta314(t=Fraction(0)):
    """Theta graph with a one-parameter family of straight maps, every edge
    stretched by the same factor 1 + sqrt(2)."""
    t = Fraction(t)
    assert 0 <= t <= 1
    x = 2 * SQRT2
    delta = 1 + 2 * SQRT2
    g = MarkedGraph(
        {"P": None, "Q": None},
        {"e1": ("P", "Q", x), "e2": ("P", "Q", 2), "e3": ("P", "Q", 1 + delta)},
    )
    s = (1 + t) / 2                    # position of f(P) along e2
    tau = (1 - t) / (1 + delta)        # position of f(Q) along e3

    def seg(eid, lo, hi):
        return [F(eid, 1, lo, hi)] if lo < hi else []

    def rev(word):
        from ttkit.maps import frac_inv_word
        return frac_inv_word(word)

    a = seg("e2", 0, s)                # P  .. f(P)   on e2
    c = seg("e2", s, 1)                # f(P) .. Q    on e2
    b = seg("e3", 0, tau)              # P  .. f(Q)   on e3
    d = seg("e3", tau, 1)              # f(Q) .. Q    on e3

    vi = {"P": Point.interior(g, ("e2", 1), s), "Q": Point.interior(g, ("e3", 1), tau)}
    ei = {
        "e1": FracPath(g, rev(a) + [E("e1")] + rev(c) + rev(a) + b, start=vi["P"]),
        "e2": FracPath(g, c + rev(d), start=vi["P"]),
        "e3": FracPath(g, c + rev(d) + rev(b) + a + c + rev(d), start=vi["P"]),
    }
    return g, StraightMap(g, g, vi, ei)


def fig322():
    """Two barbells joined by a vertical edge; the straight map exchanges
    the barbells, stretches the top one by two, and is optimal but not
    minimal: the top bar-edges lie on no legal maximally stretched loop."""
    g = MarkedGraph(
        {"a": None, "m": None, "b": None, "c": None, "n": None, "d": None},
        {
            "tl": ("a", "a", 1), "tb1": ("a", "m", 1), "tb2": ("m", "b", 1),
            "tr": ("b", "b", 1), "vm": ("m", "n", 1),
            "bb1": ("c", "n", 1), "bb2": ("n", "d", 1),
            "bl": ("c", "c", 2), "br": ("d", "d", 2),
        },
    )
    half = Fraction(1, 2)
    vi = {
        "a": Point.interior(g, ("bl", 1), half),
        "m": Point.at_vertex("n"),
        "b": Point.interior(g, ("br", 1), half),
        "c": Point.at_vertex("a"),
        "n": Point.at_vertex("m"),
        "d": Point.at_vertex("b"),
    }
    ei = {
        "tl": FracPath(g, [F("bl", 1, half, 1), F("bl", 1, 0, half)]),
        "tb1": FracPath(g, [F("bl", 1, half, 1), E("bb1", 1)], start=vi["a"]),
        "tb2": FracPath(g, [E("bb2"), F("br", 1, 0, half)]),
        "tr": FracPath(g, [F("br", 1, half, 1), F("br", 1, 0, half)]),
        "vm": FracPath(g, [E("vm", -1)]),
        "bb1": FracPath(g, [E("tb1", 1)], start=vi["c"]),
        "bb2": FracPath(g, [E("tb2")]),
        "bl": FracPath(g, [E("tl")]),
        "br": FracPath(g, [E("tr")]),
    }
    return g, StraightMap(g, g, vi, ei)


def exjumpseg(lengths=None):
    """Rank-4 rose with an automorphism whose displacement minimum sits at
    the boundary collapse of the petals a0, b0.

    psi acts as the a->ab, b->a substitution on the a0,b0 pair and appends
    the connecting letter a0 to the images of the outer petals:
    a1 -> a1 b1 a0, b1 -> a1 a0.
    """
    if lengths is None:
        lengths = {"a0": 1, "b0": 1, "a1": 1, "b1": 1}
    g = MarkedGraph(
        {"v": None},
        {e: ("v", "v", lengths[e]) for e in ("a0", "b0", "a1", "b1")},
    )
    vi = {"v": Point.at_vertex("v")}
    ei = {
        "a0": FracPath(g, [E("a0"), E("b0")]),
        "b0": FracPath(g, [E("a0")]),
        "a1": FracPath(g, [E("a1"), E("b1"), E("a0")]),
        "b1": FracPath(g, [E("a1"), E("a0")]),
    }
    return g, StraightMap(g, g, vi, ei)
