import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import GOLDEN_ORACLE
from ttkit import fixtures
from ttkit.displacement import (AttachmentData, SimplexSpec,
                                constancy_before_jump, exit_search,
                                global_min_search, jump_analysis, lambda_,
                                min_in_simplex, power_check, regenerate,
                                segment_profile, spectrum_sample)
from ttkit.errors import NotInvariant, NumericalPolicyViolation
from ttkit.graphs import MarkedGraph, Point, core
from ttkit.loops import E
from ttkit.maps import FracPath, StraightMap, lip, quotient_map
from ttkit.policy import float_policy

TOL = Fraction(1, 10 ** 10)


def three_petal_jump():
    """Rose with an invariant expanding pair and a fixed third petal; the
    collapse of the pair jumps: face value 1, restriction value golden."""
    g = MarkedGraph({"v": None},
                    {"a": ("v", "v", 1), "b": ("v", "v", 1), "c": ("v", "v", 1)})
    vi = {"v": Point.at_vertex("v")}
    ei = {"a": FracPath(g, [E("a"), E("b")]),
          "b": FracPath(g, [E("a")]),
          "c": FracPath(g, [E("c"), E("a"), E("b")])}
    return g, StraightMap(g, g, vi, ei)


def test_lambda_matches_uniform_eval():
    f = fixtures.phi_fib()
    assert lambda_(f) == 2
    spec = SimplexSpec(f.domain, f, 0)
    assert spec.eval_lambda({"a": Fraction(1, 2), "b": Fraction(1, 2)}) == 2


def test_min_in_simplex_needs_exact_backend():
    f = fixtures.phi_fib()
    spec = SimplexSpec(f.domain, f, 0)
    with pytest.raises(NumericalPolicyViolation):
        min_in_simplex(spec, TOL, policy=float_policy())


def test_min_in_simplex_golden():
    f = fixtures.phi_fib()
    lam, w, flags = min_in_simplex(SimplexSpec(f.domain, f, 0), TOL)
    assert abs(lam - GOLDEN_ORACLE) < Fraction(1, 10 ** 9)
    assert abs(w["a"] / w["b"] - GOLDEN_ORACLE) < Fraction(1, 10 ** 6)
    assert not flags


def test_min_in_simplex_identity_has_interior_witness():
    g = fixtures.rose2()
    vi = {"v": Point.at_vertex("v")}
    ei = {"a": FracPath(g, [E("a")]), "b": FracPath(g, [E("b")])}
    ident = StraightMap(g, g, vi, ei)
    lam, w, flags = min_in_simplex(SimplexSpec(g, ident, 0), TOL)
    assert lam == 1
    assert not flags
    assert min(w.values()) > Fraction(1, 100)


def test_segment_profile_checks():
    f = fixtures.phi_fib()
    spec = SimplexSpec(f.domain, f, 0)
    A = {"a": Fraction(1, 2), "b": Fraction(1, 2)}
    B = {"a": Fraction(3, 4), "b": Fraction(1, 4)}
    prof = segment_profile(A, B, spec, 16)
    assert prof.quasi_convex_ok
    assert prof.derivative_ok
    bound = max(prof.samples[0][1], prof.samples[-1][1])
    assert all(l <= bound for _, l in prof.samples)


def test_jump_analysis_both_verdicts():
    g, f = fixtures.exjumpseg()
    A = core(g.subgraph(frozenset({"a0", "b0"})))
    rep = jump_analysis(g, f, A, Fraction(1, 10 ** 9))
    assert rep.verdict == "NotJumped"
    assert rep.forbidden_ok
    g2, f2 = three_petal_jump()
    A2 = core(g2.subgraph(frozenset({"a", "b"})))
    rep2 = jump_analysis(g2, f2, A2, Fraction(1, 10 ** 9))
    assert rep2.verdict == "Jumped"
    assert rep2.lambda_face < rep2.lambda_sub
    assert rep2.forbidden_ok
    B = core(g2.subgraph(frozenset({"a", "c"})))
    with pytest.raises(NotInvariant):
        jump_analysis(g2, f2, B, Fraction(1, 10 ** 9))


def test_constancy_before_jump():
    g, f = three_petal_jump()
    A = core(g.subgraph(frozenset({"a", "b"})))
    rep = constancy_before_jump(
        g, f, A, [Fraction(k, 1000) for k in (1, 2, 5, 10, 20, 50)])
    assert rep.applicable
    assert rep.target == 2  # restriction a->ab, b->a at unit lengths
    assert rep.radius >= Fraction(1, 50)


def test_regenerate_round_trip():
    g, f = three_petal_jump()
    A = core(g.subgraph(frozenset({"a", "b"})))
    fq, rec = quotient_map(f, A)
    assert rec.marker_elements  # collapsed-run elements were recorded
    ins = MarkedGraph({"w": None}, {"a2": ("w", "w", 1), "b2": ("w", "w", 1)})
    fi = StraightMap(ins, ins, {"w": Point.at_vertex("w")},
                     {"a2": FracPath(ins, [E("a2"), E("b2")]),
                      "b2": FracPath(ins, [E("a2")])})
    attach = AttachmentData(vertex="v", base="w",
                            germ_points={("c", 1): "w", ("c", -1): "w"},
                            marker_words={1001: [E("a2"), E("b2")]})
    for delta in (Fraction(1, 4), Fraction(1, 100)):
        Z, fz = regenerate(fq.domain, ins, attach, delta, fq, fi)
        assert Z.volume() == 1
        # the regenerated map realizes the original up to renaming
        assert lip(fz) == 2
        assert lambda_(fz) == 2


def test_exit_search_none_at_train_track():
    f = fixtures.phi_fib()
    lam, w, _ = min_in_simplex(SimplexSpec(f.domain, f, 0), TOL)
    from ttkit.displacement import _optimize, _with_metric
    fw = _optimize(_with_metric(f, w))
    assert exit_search(fw.domain, fw,
                       policy=float_policy(Fraction(1, 10 ** 6))) is None


def test_global_search_interior():
    f = fixtures.phi_fib()
    res = global_min_search(f.domain, f)
    assert res.classification == "InteriorTrainTrack"
    assert abs(res.lam - GOLDEN_ORACLE) < Fraction(1, 10 ** 9)
    assert not res.collapse_stack
    # trajectory of lambda values never increases
    assert all(b <= a + Fraction(1, 10 ** 9)
               for a, b in zip(res.trajectory, res.trajectory[1:]))


def test_global_search_boundary():
    g, f = fixtures.exjumpseg()
    res = global_min_search(g, f)
    assert res.classification == "TrainTrackAtInfinity"
    assert len(res.collapse_stack) == 1
    assert res.collapse_stack[0].collapsed.edge_ids == frozenset({"a0", "b0"})


def test_power_check_at_train_track():
    res = global_min_search(*fixtures.exjumpseg())
    report = power_check(res, k_max=4)
    assert report["ok"]


def test_spectrum_sample_dedupes():
    f = fixtures.phi_fib()
    s1 = SimplexSpec(f.domain, f, 0)
    s2 = SimplexSpec(f.domain, f, 0)
    vals = spectrum_sample([s1, s2], TOL)
    assert len(vals) == 1


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_quasi_convexity_random_segments(seed):
    rng = random.Random(seed)
    g, f = fixtures.exjumpseg()
    spec = SimplexSpec(g, f, 0)

    def rand_point():
        raw = [Fraction(rng.randint(1, 9)) for _ in g.edges]
        tot = sum(raw)
        return {e: r / tot for e, r in zip(sorted(g.edges), raw)}

    prof = segment_profile(rand_point(), rand_point(), spec, 10)
    assert prof.quasi_convex_ok
    assert prof.derivative_ok
