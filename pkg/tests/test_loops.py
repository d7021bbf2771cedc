import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from generators import random_graph
from ttkit import fixtures
from ttkit.errors import EmptyLoop
from ttkit.graphs import MarkedGraph
from ttkit.loops import (E, Loop, M, brute_force_loops, cyclic_tighten,
                         enumerate_candidates, format_word, length, occurrence,
                         parse_word, tighten)


def test_tighten_cancels_edge_pairs():
    assert tighten([E("a"), E("a", -1), E("b")]) == [E("b")]
    assert tighten([E("a"), M("w", 1, 1), E("a", -1)]) == \
        [E("a"), M("w", 1, 1), E("a", -1)]
    assert tighten([M("w", 1, 1), M("w", 1, -1)]) == []
    assert tighten([M("w", 1, 1), M("w", 2, -1)]) == [M("w", 1, 1), M("w", 2, -1)]


def test_cyclic_tighten_rotational_cancellation():
    loop = cyclic_tighten([E("b", -1), E("a"), E("b")])
    assert loop == cyclic_tighten([E("a")])
    with pytest.raises(EmptyLoop):
        cyclic_tighten([E("a"), E("a", -1)])


def test_loop_canonical_rotation_and_inverse():
    l1 = cyclic_tighten([E("a"), E("b")])
    l2 = cyclic_tighten([E("b"), E("a")])
    l3 = cyclic_tighten([E("b", -1), E("a", -1)])
    assert l1 == l2 == l3


def test_length_pairing_is_bilinear():
    g = fixtures.rose2(Fraction(3, 2), Fraction(1, 3))
    loop = cyclic_tighten([E("a"), E("b"), E("a")])
    occ = occurrence(loop)
    assert occ == {"a": 2, "b": 1}
    assert length(g, loop) == 2 * Fraction(3, 2) + Fraction(1, 3)


def test_parse_format_round_trip():
    text = "a b' @w.1 @w.2'"
    word = parse_word(text)
    assert format_word(word) == text


def test_candidate_counts_on_fixtures():
    assert len(enumerate_candidates(fixtures.rose2())) == 4
    g, _ = fixtures.theta314()
    assert len(enumerate_candidates(g)) == 3
    g, _ = fixtures.fig322()
    assert len(enumerate_candidates(g)) == 16


def test_candidate_invariants():
    g, _ = fixtures.fig322()
    shapes = {"SimpleLoop", "InfinityLoop", "Barbell",
              "SinglyDegenerateBarbell", "DoublyDegenerateBarbell"}
    for c in enumerate_candidates(g):
        assert c.shape in shapes
        assert all(n <= 2 for n in occurrence(c.loop).values())


def test_brute_force_count_rose2():
    # loops with edge multiplicity <= 2 on the 2-petal rose, up to cyclic
    # rotation and inversion: 17 classes (necklace count)
    assert len(brute_force_loops(fixtures.rose2(), 2)) == 17


def test_candidates_are_brute_force_subset():
    g, _ = fixtures.theta314()
    everything = set(brute_force_loops(g, 2))
    for c in enumerate_candidates(g):
        assert c.loop in everything


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_random_candidates_within_multiplicity_bound(seed):
    g = random_graph(random.Random(seed))
    for c in enumerate_candidates(g):
        assert all(n <= 2 for n in occurrence(c.loop).values())
