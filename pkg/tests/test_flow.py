import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from generators import random_perturbation
from oracles import SILVER_ORACLE
from ttkit import fixtures
from ttkit.errors import DeltaTooLarge, TargetUnreachable
from ttkit.flow import (candidate_lambda, minimize_tension_graph, opt,
                        reduce_tension_graph, simple_fold, weakopt)
from ttkit.maps import (gates, is_minimal_optimal, is_optimal,
                        is_weakly_optimal, lip, tension_graph)
from ttkit.policy import float_policy

FLOAT9 = float_policy(Fraction(1, 10 ** 9))
EPS = Fraction(1, 1000)


def test_candidate_lambda_fixtures():
    assert candidate_lambda(fixtures.phi_fib()) == 2
    g, f = fixtures.theta314()
    assert abs(candidate_lambda(f) - SILVER_ORACLE) < Fraction(1, 10 ** 9)


def test_weakopt_near_noop_on_weakly_optimal():
    # theta314 uses a rational sqrt(2), so under exact arithmetic the map
    # is weakly optimal only up to ~1e-12; the flow may take one vanishing
    # step but must not move anything by a visible amount
    g, f = fixtures.theta314()
    out, cert = weakopt(f)
    assert cert.lip_start - cert.lip_end <= Fraction(1, 10 ** 9)
    assert cert.d_inf <= Fraction(1, 10 ** 9)
    assert cert.bound_holds


def test_weakopt_restores_perturbed_map():
    g, f = fixtures.theta314(Fraction(1, 2))
    lam = candidate_lambda(f)
    pert = random_perturbation(random.Random(7), f)
    assert lip(pert) > lam
    out, cert = weakopt(pert)
    assert lip(out) == lam
    assert cert.bound_holds
    assert cert.d_inf <= g.volume() * (cert.lip_start - lam)


def test_weakopt_target_below_lambda_rejected():
    g, f = fixtures.theta314()
    with pytest.raises(TargetUnreachable):
        weakopt(f, target=Fraction(1))


def test_fig322_reduce_and_minimize():
    g, f = fixtures.fig322()
    assert is_optimal(f)
    assert not is_minimal_optimal(f)
    T0 = tension_graph(f).edge_ids
    assert T0 == frozenset({"tl", "tb1", "tb2", "tr"})
    red = reduce_tension_graph(f, EPS)
    assert tension_graph(red).edge_ids < T0
    assert lip(red) == lip(f)
    mini = minimize_tension_graph(f, EPS)
    assert is_minimal_optimal(mini)
    assert lip(mini) == lip(f)


def test_opt_preserves_lip():
    g, f = fixtures.theta314(Fraction(1, 4))
    pert = random_perturbation(random.Random(3), f)
    w, _ = weakopt(pert)
    o = opt(w, EPS)
    assert is_optimal(o, FLOAT9)
    assert lip(o) == lip(w)


def test_simple_fold_basics():
    f = fixtures.phi_fib()
    gs = gates(f)
    turn = ("a", 1), ("b", 1)
    assert gs.same_gate(*turn)
    rec = simple_fold(f, turn)
    z = rec.target
    assert z.domain.volume() == f.domain.volume() - rec.delta
    assert candidate_lambda(z) <= candidate_lambda(f)
    assert rec.stem_edge in z.domain.edges
    with pytest.raises(DeltaTooLarge):
        simple_fold(f, turn, delta=Fraction(10))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.sampled_from([0, 1, 2, 3, 4]))
def test_weakopt_certificate_random(seed, quarter):
    g, f = fixtures.theta314(Fraction(quarter, 4))
    lam = candidate_lambda(f)
    pert = random_perturbation(random.Random(seed), f)
    out, cert = weakopt(pert)
    assert lip(out) == lam
    assert is_weakly_optimal(out, FLOAT9)
    assert cert.bound_holds
