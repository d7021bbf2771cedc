"""Acceptance suite: one test (and one printed pass/fail line) per criterion.

Each test enforces the stated numeric tolerance and wall-clock budget.
"""

import random
import time
from fractions import Fraction

from generators import random_graph, random_map, random_perturbation
from oracles import GOLDEN_ORACLE, SILVER_ORACLE
from ttkit import fixtures
from ttkit.displacement import (SimplexSpec, constancy_before_jump,
                                global_min_search, jump_analysis, lambda_,
                                min_in_simplex, power_check, segment_profile)
from ttkit.flow import candidate_lambda, reduce_tension_graph, weakopt
from ttkit.graphs import MarkedGraph, Point, core
from ttkit.loops import (E, brute_force_loops, enumerate_candidates, length)
from ttkit.maps import (FracPath, StraightMap, INFINITY_FLAG, is_minimal_optimal,
                        is_optimal, is_weakly_optimal, lip, loop_image_length,
                        quotient_map, restriction, stretch)
from ttkit.policy import float_policy

FLOAT9 = float_policy(Fraction(1, 10 ** 9))


def report(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    assert ok, line


def test_criterion_1_uniform_stretch_family():
    t0 = time.monotonic()
    ok = True
    worst = Fraction(0)
    for q in (0, 1, 2, 3, 4):
        g, f = fixtures.theta314(Fraction(q, 4))
        vals = [stretch(f, e) for e in sorted(g.edges)]
        spread = max(vals) - min(vals)
        worst = max(worst, spread,
                    max(abs(v - SILVER_ORACLE) for v in vals))
        ok &= spread <= Fraction(1, 10 ** 9)
        ok &= all(abs(v - SILVER_ORACLE) <= Fraction(1, 10 ** 6) for v in vals)
        ok &= is_optimal(f, FLOAT9) and is_weakly_optimal(f, FLOAT9)
    elapsed = time.monotonic() - t0
    ok &= elapsed < 1.0
    report(1, ok, f"max deviation {float(worst):.2e}, {elapsed:.2f}s")


def test_criterion_2_nonminimal_optimal_reduction():
    t0 = time.monotonic()
    g, f = fixtures.fig322()
    from ttkit.maps import tension_graph
    T = tension_graph(f).edge_ids
    ok = T == frozenset({"tl", "tb1", "tb2", "tr"})
    ok &= is_optimal(f)
    ok &= not is_minimal_optimal(f)
    red = reduce_tension_graph(f, Fraction(1, 1000))
    ok &= tension_graph(red).edge_ids < T
    elapsed = time.monotonic() - t0
    ok &= elapsed < 1.0
    report(2, ok, f"tension {sorted(T)} shrank, {elapsed:.2f}s")


def test_criterion_3_candidate_oracle_equivalence():
    t0 = time.monotonic()
    rng = random.Random(20260823)
    mismatches = 0
    for _ in range(200):
        g = random_graph(rng)
        f = random_map(rng, g)
        cand_max = max((loop_image_length(f, c.loop) / length(g, c.loop)
                        for c in enumerate_candidates(g)
                        if length(g, c.loop) > 0), default=Fraction(0))
        brute_max = max((loop_image_length(f, gamma) / length(g, gamma)
                         for gamma in brute_force_loops(g, 2)
                         if length(g, gamma) > 0), default=Fraction(0))
        if cand_max != brute_max:
            mismatches += 1
    elapsed = time.monotonic() - t0
    ok = mismatches == 0 and elapsed < 60.0
    report(3, ok, f"200 instances, {mismatches} mismatches, {elapsed:.1f}s")


def test_criterion_4_flow_certificate_bound():
    t0 = time.monotonic()
    rng = random.Random(4)
    violations = 0
    for i in range(100):
        g, f = fixtures.theta314(Fraction(i % 5, 4))
        lam = candidate_lambda(f)
        pert = random_perturbation(rng, f)
        out, cert = weakopt(pert)
        if lip(out) != lam:
            violations += 1
        if cert.d_inf > g.volume() * (cert.lip_start - lam):
            violations += 1
    elapsed = time.monotonic() - t0
    ok = violations == 0 and elapsed < 120.0
    report(4, ok, f"100 runs, {violations} violations, {elapsed:.1f}s")


def test_criterion_5_golden_minimization():
    t0 = time.monotonic()
    f = fixtures.phi_fib()
    lam, w, flags = min_in_simplex(SimplexSpec(f.domain, f, 0),
                                   Fraction(1, 10 ** 10))
    lam_err = abs(lam - GOLDEN_ORACLE)
    ratio_err = abs(w["a"] / w["b"] - GOLDEN_ORACLE)
    elapsed = time.monotonic() - t0
    ok = (lam_err <= Fraction(1, 10 ** 9)
          and ratio_err <= Fraction(1, 10 ** 6)
          and not flags and elapsed < 5.0)
    report(5, ok, f"lambda err {float(lam_err):.2e}, "
                  f"ratio err {float(ratio_err):.2e}, {elapsed:.2f}s")


def test_criterion_6_global_search_boundary_descent():
    t0 = time.monotonic()
    g, f = fixtures.exjumpseg()
    res = global_min_search(g, f)
    ok = res.classification == "TrainTrackAtInfinity"
    ok &= abs(res.lam - GOLDEN_ORACLE) <= Fraction(1, 10 ** 9)
    ok &= len(res.collapse_stack) == 1
    ok &= res.collapse_stack[0].collapsed.edge_ids == frozenset({"a0", "b0"})
    ok &= len(res.jump_reports) == 1
    ok &= res.jump_reports[0].verdict == "NotJumped"
    ok &= res.jump_reports[0].forbidden_ok
    elapsed = time.monotonic() - t0
    ok &= elapsed < 30.0
    report(6, ok, f"{res.classification}, lambda {float(res.lam):.9f}, "
                  f"{elapsed:.1f}s")


def _simplex_pool():
    pool = [(fixtures.phi_fib().domain, fixtures.phi_fib())]
    g, f = fixtures.theta314()
    pool.append((g, f))
    g, f = fixtures.fig322()
    pool.append((g, f))
    g, f = fixtures.exjumpseg()
    pool.append((g, f))
    g = MarkedGraph({"v": None},
                    {"a": ("v", "v", 1), "b": ("v", "v", 1), "c": ("v", "v", 1)})
    vi = {"v": Point.at_vertex("v")}
    ei = {"a": FracPath(g, [E("a"), E("b")]),
          "b": FracPath(g, [E("a")]),
          "c": FracPath(g, [E("c"), E("a"), E("b")])}
    pool.append((g, StraightMap(g, g, vi, ei)))
    return pool


def test_criterion_7_quasi_convexity_and_derivative():
    t0 = time.monotonic()
    rng = random.Random(7)
    pool = _simplex_pool()
    samples = 0
    qc_bad = 0
    der_bad = 0
    while samples < 1000:
        g, f = pool[samples % len(pool)]
        spec = SimplexSpec(g, f, 0)
        order = sorted(g.edges)

        def rand_point():
            raw = [Fraction(rng.randint(1, 12)) for _ in order]
            tot = sum(raw)
            return {e: r / tot for e, r in zip(order, raw)}

        prof = segment_profile(rand_point(), rand_point(), spec, 10,
                               tol=Fraction(1, 10 ** 6))
        samples += len(prof.samples)
        qc_bad += 0 if prof.quasi_convex_ok else 1
        der_bad += 0 if prof.derivative_ok else 1
    elapsed = time.monotonic() - t0
    ok = qc_bad == 0 and der_bad == 0 and elapsed < 120.0
    report(7, ok, f"{samples} samples over {len(pool)} simplices, "
                  f"{qc_bad} convexity / {der_bad} derivative violations, "
                  f"{elapsed:.1f}s")


def test_criterion_8_power_multiplicativity():
    t0 = time.monotonic()
    # train-track points found by the minimizations of criteria 5 and 6
    res5 = global_min_search(fixtures.phi_fib().domain, fixtures.phi_fib())
    res6 = global_min_search(*fixtures.exjumpseg())
    ok = res5.classification == "InteriorTrainTrack"
    ok &= res6.classification == "TrainTrackAtInfinity"
    for res in (res5, res6):
        rep = power_check(res, k_max=4, tol=Fraction(1, 10 ** 6))
        ok &= rep["ok"]
    elapsed = time.monotonic() - t0
    ok &= elapsed < 10.0
    report(8, ok, f"k in 2..4 at both train-track points, {elapsed:.1f}s")


def test_criterion_9_semicontinuity_and_constancy():
    t0 = time.monotonic()
    rng = random.Random(9)
    tol = Fraction(1, 10 ** 9)
    grid = [Fraction(k, 1000) for k in (1, 2, 5, 10, 20, 50)]
    segments = 0
    semi_bad = 0
    const_bad = 0
    jumped_seen = 0
    while segments < 50:
        if segments % 2 == 0:
            lens = {e: Fraction(rng.randint(1, 5)) for e in
                    ("a0", "b0", "a1", "b1")}
            g, f = fixtures.exjumpseg(lens)
            A = core(g.subgraph(frozenset({"a0", "b0"})))
        else:
            g = MarkedGraph({"v": None},
                            {"a": ("v", "v", Fraction(rng.randint(1, 4))),
                             "b": ("v", "v", Fraction(rng.randint(1, 4))),
                             "c": ("v", "v", Fraction(rng.randint(1, 4)))})
            vi = {"v": Point.at_vertex("v")}
            ei = {"a": FracPath(g, [E("a"), E("b")]),
                  "b": FracPath(g, [E("a")]),
                  "c": FracPath(g, [E("c"), E("a"), E("b")])}
            f = StraightMap(g, g, vi, ei)
            A = core(g.subgraph(frozenset({"a", "b"})))
        segments += 1
        q = quotient_map(f, A)
        assert q is not INFINITY_FLAG
        lam_face = lambda_(q[0])
        spec = SimplexSpec(g, f, 0)
        lx = {e: g.edge_len(e) for e in g.edges}
        lface = {e: (Fraction(0) if e in A.edge_ids else lx[e])
                 for e in g.edges}
        tail = []
        for t in grid:
            lt = {e: (1 - t) * lface[e] + t * lx[e] for e in g.edges}
            tail.append(spec.eval_lambda(lt))
        if lam_face > min(tail) + tol:
            semi_bad += 1
        target = lambda_(restriction(f, A))
        if lam_face < target:        # a jump: constant value before it
            jumped_seen += 1
            rep = constancy_before_jump(g, f, A, grid)
            small = [l for t, l in rep.samples if t <= Fraction(1, 100)]
            if not rep.applicable or not small or \
                    any(l != rep.target for l in small):
                const_bad += 1
    elapsed = time.monotonic() - t0
    ok = (semi_bad == 0 and const_bad == 0 and jumped_seen > 0
          and elapsed < 60.0)
    report(9, ok, f"{segments} segments, {jumped_seen} jumped, "
                  f"{semi_bad} semicontinuity / {const_bad} constancy "
                  f"violations, {elapsed:.1f}s")
