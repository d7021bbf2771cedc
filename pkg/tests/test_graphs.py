import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from generators import random_graph
from ttkit import fixtures
from ttkit.graphs import (MarkedGraph, Point, Subgraph, collapse, core,
                          kurosh_rank, normalize, thin_part, validate)


def test_point_orientation_identity():
    g = fixtures.rose2()
    p = Point.interior(g, ("a", 1), Fraction(1, 3))
    q = Point.interior(g, ("a", -1), Fraction(2, 3))
    assert p == q
    assert Point.interior(g, ("a", 1), 0) == Point.at_vertex("v")
    assert Point.interior(g, ("a", 1), 1) == Point.at_vertex("v")


def test_kurosh_rank_examples():
    assert kurosh_rank(fixtures.rose2()) == 2
    circle = MarkedGraph({"v": "H"}, {"e": ("v", "v", 1)})
    assert kurosh_rank(circle) == 2
    two_circles = MarkedGraph(
        {"v": None, "w": None},
        {"e": ("v", "v", 1), "f": ("w", "w", 1)},
    )
    assert kurosh_rank(two_circles) == 2


def test_core_idempotent_and_prunes_hair():
    g = MarkedGraph(
        {"v": None, "leaf": None},
        {"a": ("v", "v", 1), "hair": ("v", "leaf", 1)},
    )
    s = core(g.full_subgraph())
    assert s.edge_ids == frozenset({"a"})
    s2 = core(s)
    assert s2.edge_ids == s.edge_ids and s2.extra_vertices == s.extra_vertices


def test_collapse_volume_and_face_kind():
    g, _ = fixtures.fig322()
    s = core(g.subgraph(frozenset({"tl", "tb1", "tb2", "tr"})))
    rec = collapse(g, s)
    assert rec.quotient.volume() == g.volume() - s.volume()
    assert rec.face_at_infinity  # the top barbell carries fundamental group
    tree = g.subgraph(frozenset({"vm"}))
    rec2 = collapse(g, tree)
    assert not rec2.face_at_infinity
    assert rec2.quotient.volume() == g.volume() - 1


def test_thin_part_monotone():
    g = fixtures.rose2(Fraction(1, 100), 1)
    t1 = thin_part(g, Fraction(1, 50))
    t2 = thin_part(g, Fraction(1, 2))
    assert t1.edge_ids <= t2.edge_ids
    assert "a" in t1.edge_ids and "b" not in t1.edge_ids


def test_validate_flags_problems():
    g = MarkedGraph(
        {"v": None, "leaf": None, "mid": None},
        {"a": ("v", "v", 1), "h": ("v", "leaf", 1), "b": ("v", "mid", 1),
         "c": ("mid", "v", 1)},
    )
    rep = validate(g)
    assert "leaf" in rep.free_leaves
    assert "mid" in rep.redundant_vertices
    assert not rep.is_valid_point
    assert validate(fixtures.rose2()).is_valid_point


def test_normalize_removes_redundant_vertices():
    g = MarkedGraph(
        {"v": None, "mid": None},
        {"b": ("v", "mid", 1), "c": ("mid", "v", 2), "a": ("v", "v", 1)},
    )
    g2, trace = normalize(g)
    assert validate(g2).is_valid_point
    assert g2.volume() == g.volume()
    assert len(g2.edges) == 2
    # the merged edge replaces the b-c chain through the removed vertex
    merged = [run for run in trace.values() if len(run) == 2]
    assert len(merged) == 1
    assert {o[0] for o in merged[0]} == {"b", "c"}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_graph_core_idempotent(seed):
    g = random_graph(random.Random(seed))
    s = core(g.full_subgraph())
    s2 = core(s)
    assert s2.edge_ids == s.edge_ids
    assert s2.extra_vertices == s.extra_vertices
