"""Optimization flow: event-driven piecewise-linear motion of vertex images.

The flow moves the images of one-gated tension-graph vertices along their
single gate direction with recursively assigned speeds, so that every
consumed tension edge loses stretch at rate at least one while the target
stretch is approached.  All arithmetic is exact rational; events are the
only places where combinatorics change.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ttkit.errors import (DeltaTooLarge, IllegalFoldAtNonFree, NoProgress,
                          ResourceLimit, TargetUnreachable)
from ttkit.graphs import MarkedGraph, Point, Subgraph
from ttkit.loops import E, enumerate_candidates, length as loop_length
from ttkit.maps import (F, FracPath, GateStructure, StraightMap, frac_inv_word,
                        frac_tighten, gates, is_optimal, letter_end, lip,
                        loop_image_length, stretch, tension_graph)
from ttkit.policy import EXACT, NumericPolicy, Scalar

# ---------------------------------------------------------------------------
# helpers


def candidate_lambda(f: StraightMap) -> Scalar:
    """Displacement of the domain point, computed via candidate loops."""
    assert f.is_self_map()
    best = Fraction(0)
    for cand in enumerate_candidates(f.domain):
        denom = loop_length(f.domain, cand.loop)
        if denom > 0:
            best = max(best, loop_image_length(f, cand.loop) / denom)
    return best


def _direction_of_gate(f: StraightMap, gate) -> tuple:
    """Common (marker prefix, ('dir', e, s)) of a gate's germ images."""
    germ = sorted(gate)[0]
    markers, d = f.oriented_image(germ).first_direction()
    assert d is not None, "cannot take the direction of a collapsed gate"
    return markers, d


def _motion_letters(g: MarkedGraph, p: Point, d, dist: Scalar):
    """Letters of the straight motion of length dist from p along ('dir',e,s)."""
    if dist == 0:
        return []
    _, e, s = d
    L = g.edge_len(e)
    if p.is_vertex():
        assert g.origin((e, s)) == p.vertex, "direction does not start at the point"
        t0 = Fraction(0)
    else:
        assert p.edge == e
        t0 = p.param_along((e, s))
    t1 = t0 + dist / L
    assert t1 <= 1, "motion overshoots the edge (missing vertex-hit event)"
    return [F(e, s, t0, t1)]


def apply_motion(f: StraightMap, motions: dict) -> StraightMap:
    """Move vertex images: motions maps v -> (marker prefix, motion letters).

    The new image of an edge from u to w is
    tighten(rev(m_u) + inv(mu_u) + old + mu_w + m_w): germs whose images
    start with the prefix get shortened, all others get the connecting path
    prepended/appended.
    """
    g = f.codomain
    vi = dict(f.vertex_image)
    for v, (mu, m) in motions.items():
        if m:
            vi[v] = letter_end(g, m[-1])
    ei = {}
    for e, (u, w, _) in f.domain.edges.items():
        mu_u, m_u = motions.get(u, ((), []))
        mu_w, m_w = motions.get(w, ((), []))
        word = (frac_inv_word(list(m_u)) + frac_inv_word(list(mu_u))
                + list(f.edge_image[e].letters) + list(mu_w) + list(m_w))
        ei[e] = FracPath(g, frac_tighten(word), start=vi[u])
    return StraightMap(f.domain, f.codomain, vi, ei, f.marker_map)


# ---------------------------------------------------------------------------
# strata and speeds


def compute_strata(f: StraightMap, T: Subgraph, gs: GateStructure):
    """Strata of the flow: lists of (V_i, E_i), preferred gates, terminal data.

    V_0 = one-gated free vertices of the tension graph; E_i = remaining
    tension edges incident to V_i; V_{i+1} = one-gated vertices of the
    residual.  Non-free vertices are never one-gated.
    """
    g = f.domain
    remaining = set(T.edge_ids)
    strata = []
    pref = {}
    stage_of = {}
    consumed_stage = {}
    assigned = set()
    stage = 0
    while True:
        Vi = []
        for v in sorted({x for e in remaining for x in g.edges[e][:2]}):
            if v in assigned or not g.is_free(v):
                continue
            germs = [o for o in g.germs(v) if o[0] in remaining]
            gate_ids = {gs.gate_of(o) for o in germs}
            if len(gate_ids) == 1:
                Vi.append(v)
                gate_id = gate_ids.pop()
                pref[v] = frozenset(gs.partition[v][gate_id[1]])
        if not Vi:
            break
        Ei = {e for e in remaining if g.edges[e][0] in Vi or g.edges[e][1] in Vi}
        for v in Vi:
            assigned.add(v)
            stage_of[v] = stage
        for e in Ei:
            consumed_stage[e] = stage
        remaining -= Ei
        strata.append((Vi, sorted(Ei)))
        stage += 1
    terminal = {x for e in remaining for x in g.edges[e][:2]}
    return strata, pref, stage_of, consumed_stage, sorted(remaining), terminal


def compute_speeds(f: StraightMap, strata, pref, stage_of, consumed_stage):
    """Speeds by descending total order: later strata first, ties by id."""
    g = f.domain
    moving = [v for Vi, _ in strata for v in Vi]
    # larger = later stratum, then larger id; compute in descending order
    order = sorted(moving, key=lambda v: (stage_of[v], v), reverse=True)
    rank = {v: i for i, v in enumerate(order)}  # smaller rank = bigger
    speeds = {}
    for v in order:
        best = Fraction(0)
        stage = stage_of[v]
        for o in g.germs(v):
            e = o[0]
            if consumed_stage.get(e) != stage:
                continue
            L = g.edges[e][2]
            other = g.terminus(o)
            if other == v:
                # loop edge: both germs in the preferred gate, rate -2s/L
                best = max(best, L / 2)
                continue
            if other in speeds:
                # the other endpoint was computed already (it is bigger)
                if other in pref and (e, -o[1]) in pref[other]:
                    sigma = -1
                else:
                    sigma = 1
                best = max(best, L + sigma * speeds[other])
            elif other not in rank:
                # terminal or static endpoint: speed 0
                best = max(best, L)
            # else: the other endpoint is smaller and will enforce this edge
        speeds[v] = best
    return speeds


def _edge_rates(f: StraightMap, pref, speeds):
    """d(lambda_e)/dt for every edge, given motions at unit time scale."""
    g = f.domain
    rates = {}
    for e, (u, w, L) in g.edges.items():
        num = Fraction(0)
        for germ in ((e, 1), (e, -1)):
            a = g.origin(germ)
            if a in speeds and speeds[a] > 0:
                if germ in pref[a]:
                    num -= speeds[a]
                else:
                    num += speeds[a]
        rates[e] = num / L if L > 0 else Fraction(0)
    return rates


def _dist_to_vertex(g: MarkedGraph, p: Point, d) -> Scalar:
    _, e, s = d
    L = g.edge_len(e)
    if p.is_vertex():
        return L
    return (1 - p.param_along((e, s))) * L


def _phase_dynamics(cur: StraightMap, subT: Subgraph, gs: GateStructure):
    strata, pref, stage_of, consumed, residual, terminal = compute_strata(cur, subT, gs)
    if not strata:
        return None
    speeds = compute_speeds(cur, strata, pref, stage_of, consumed)
    rates = _edge_rates(cur, pref, speeds)
    return speeds, pref, rates


def _sliding_dynamics(cur: StraightMap, T: Subgraph, gs: GateStructure, small_ids):
    """Anti-chattering dynamics when the tension set alternates A subset B.

    The plain speed scheme can make an edge x = B - A leave and re-enter the
    maximum with geometrically shrinking steps (a Zeno accumulation).  The
    limiting flow is the convex blend of the two phase dynamics with the
    weight that gives x the same decay rate as the binding edge of A, so
    that all of B stays maximal and shrinks together.  Returns (speeds,
    preferred gates) or None when the blend does not apply.
    """
    g = cur.domain
    big = frozenset(T.edge_ids)
    extra = sorted(big - small_ids)
    if len(extra) != 1:
        return None
    x = extra[0]
    dA = _phase_dynamics(cur, g.subgraph(small_ids), gs)
    dB = _phase_dynamics(cur, T, gs)
    if dA is None or dB is None:
        return None
    sA, prefA, rA = dA
    sB, prefB, rB = dB
    b = max(small_ids, key=lambda e: (rA[e], e))  # binding edge of phase A
    gapA = rA[x] - rA[b]
    gapB = rB[x] - rB[b]
    if gapA <= 0 or gapB >= 0:
        return None
    theta = gapB / (gapB - gapA)
    speeds = {}
    pref = {}
    for v in set(sA) | set(sB):
        a = sA.get(v, Fraction(0))
        bb = sB.get(v, Fraction(0))
        s = theta * a + (1 - theta) * bb
        if s == 0:
            continue
        gateA = prefA.get(v) if a > 0 else None
        gateB = prefB.get(v) if bb > 0 else None
        if gateA is not None and gateB is not None and gateA != gateB:
            return None
        pref[v] = gateA if gateA is not None else gateB
        speeds[v] = s
    if not speeds:
        return None
    rates = _edge_rates(cur, pref, speeds)
    top = max(rates[e] for e in big)
    if rates[x] != top or top >= 0:
        return None
    return speeds, pref


# ---------------------------------------------------------------------------
# weakopt


@dataclass
class FlowCertificate:
    target: Scalar
    lip_start: Scalar
    lip_end: Scalar
    t_final: Scalar
    d_inf: Scalar
    bound: Scalar
    events: list = field(default_factory=list)

    @property
    def bound_holds(self) -> bool:
        return self.d_inf <= self.bound


def weakopt(f: StraightMap, target=None, max_events: int = 10 ** 4):
    """Flow f to a map with Lipschitz constant equal to the displacement.

    Returns (map, FlowCertificate) with d_inf <= vol * (lip(f) - target).
    """
    assert f.is_self_map()
    lam = candidate_lambda(f)
    if target is None:
        target = lam
    else:
        target = Fraction(target)
        if target < lam:
            raise TargetUnreachable(f"target {target} below displacement {lam}")
    lip0 = lip(f)
    vol = f.domain.volume()
    moved = {v: Fraction(0) for v in f.domain.vertices}
    events = []
    thist = []  # tension edge-sets seen, for chattering detection
    cur = f
    while lip(cur) > target:
        if len(events) >= max_events:
            raise ResourceLimit("weakopt event cap exceeded")
        g = cur.domain
        m = lip(cur)
        T = tension_graph(cur, EXACT)
        gs = gates(cur)
        thist.append(frozenset(T.edge_ids))
        strata, pref, stage_of, consumed, residual, terminal = compute_strata(cur, T, gs)
        if not strata:
            # no one-gated vertex: the map is optimal, so lip should equal
            # the displacement already
            assert m <= target, "optimal map with lip above the displacement"
            break
        speeds = compute_speeds(cur, strata, pref, stage_of, consumed)
        if (len(thist) >= 3 and thist[-1] == thist[-3]
                and thist[-2] < thist[-1]):
            sliding = _sliding_dynamics(cur, T, gs, thist[-2])
            if sliding is not None:
                speeds, pref = sliding
        rates = _edge_rates(cur, pref, speeds)
        tension_rates = [rates[e] for e in T.edge_ids]
        r_slow = max(tension_rates)
        cands = []
        if r_slow < 0:
            cands.append((m - target) / (-r_slow))
        lam_others = [stretch(cur, e) for e in g.edges
                      if e not in T.edge_ids and g.edge_len(e) > 0]
        second = max(lam_others) if lam_others else None
        for e in g.edges:
            le = g.edge_len(e)
            if le == 0:
                continue
            r = rates[e]
            if e not in T.edge_ids and r > r_slow:
                cands.append((m - stretch(cur, e)) / (r - r_slow))
            if e in T.edge_ids and r < r_slow and r < 0 and second is not None and second < m:
                cands.append((m - second) / (-r))
            if r < 0:
                cands.append(stretch(cur, e) / (-r))  # image collapse guard
        dirs = {}
        for v, sp in speeds.items():
            if sp > 0:
                mu, d = _direction_of_gate(cur, pref[v])
                dirs[v] = (mu, d)
                cands.append(_dist_to_vertex(g, cur.vertex_image[v], d) / sp)
        dt = min(c for c in cands if c > 0)
        motions = {}
        for v, sp in speeds.items():
            if sp > 0:
                mu, d = dirs[v]
                motions[v] = (mu, _motion_letters(g, cur.vertex_image[v], d, sp * dt))
                moved[v] += sp * dt
        cur = apply_motion(cur, motions)
        events.append({"dt": dt, "lip": lip(cur), "moved": sorted(motions)})
    d_inf = max(moved.values()) if moved else Fraction(0)
    cert = FlowCertificate(
        target=target, lip_start=lip0, lip_end=lip(cur),
        t_final=lip0 - lip(cur), d_inf=d_inf,
        bound=vol * (lip0 - target), events=events,
    )
    return cur, cert


# ---------------------------------------------------------------------------
# opt: perturbation to an optimal map


def opt(f: StraightMap, eps: Scalar, max_rounds: int = 200) -> StraightMap:
    """Perturb a weakly optimal map into an optimal one, lip preserved."""
    eps = Fraction(eps)
    assert eps > 0
    lam = lip(f)
    budget = eps
    cur = f
    for _ in range(max_rounds):
        if is_optimal(cur, EXACT):
            assert lip(cur) == lam, "perturbation changed the Lipschitz constant"
            return cur
        g = cur.domain
        T = tension_graph(cur, EXACT)
        gs = gates(cur)
        strata, pref, stage_of, consumed, residual, terminal = compute_strata(cur, T, gs)
        if not strata:
            return cur
        speeds = compute_speeds(cur, strata, pref, stage_of, consumed)
        rates = _edge_rates(cur, pref, speeds)
        m = lam
        cands = []
        for e in g.edges:
            le = g.edge_len(e)
            if le == 0:
                continue
            r = rates[e]
            if e not in T.edge_ids and r > 0:
                cands.append((m - stretch(cur, e)) / r)
            if r < 0:
                cands.append(stretch(cur, e) / (-r))
        dirs = {}
        max_speed = max(speeds.values()) if speeds else Fraction(0)
        if max_speed == 0:
            raise NoProgress("all one-gated vertices have zero speed")
        for v, sp in speeds.items():
            if sp > 0:
                mu, d = _direction_of_gate(cur, pref[v])
                dirs[v] = (mu, d)
                cands.append(_dist_to_vertex(g, cur.vertex_image[v], d) / sp)
        cands.append(budget / max_speed)
        dt = min(c for c in cands if c > 0) / 2
        if dt == 0:
            raise NoProgress("no positive step available")
        budget -= max_speed * dt
        motions = {}
        for v, sp in speeds.items():
            if sp > 0:
                mu, d = dirs[v]
                motions[v] = (mu, _motion_letters(g, cur.vertex_image[v], d, sp * dt))
        cur = apply_motion(cur, motions)
        assert lip(cur) == lam, "tension edges must keep the maximal stretch"
    raise NoProgress("opt exceeded its round cap")


# ---------------------------------------------------------------------------
# legal-structure utilities on the tension graph


def _legal_transitions(f: StraightMap, T: Subgraph, gs: GateStructure):
    """Directed germ-transition relation of legal paths inside T.

    From germ g (traversed) one may continue with germ h at terminus(g)
    when the turn (rev g, h) is legal; at a non-free vertex any h is
    reachable through a marker.
    """
    g0 = f.domain
    trans = {}
    germs = [(e, s) for e in sorted(T.edge_ids) for s in (1, -1)]
    for ge in germs:
        v = g0.terminus(ge)
        outs = []
        for h in g0.germs(v):
            if h[0] not in T.edge_ids:
                continue
            if not g0.is_free(v):
                outs.append(h)  # through a marker, always legal
            elif not gs.same_gate((ge[0], -ge[1]), h):
                outs.append(h)
        trans[ge] = sorted(set(outs))
    return trans


def edge_on_legal_loop(f: StraightMap, T: Subgraph, gs: GateStructure, e: str) -> bool:
    """Whether some legal loop inside T crosses the edge e."""
    trans = _legal_transitions(f, T, gs)
    for start in ((e, 1), (e, -1)):
        # directed cycle through `start`
        seen = set()
        frontier = [h for h in trans.get(start, [])]
        while frontier:
            cur = frontier.pop()
            if cur == start:
                return True
            if cur in seen:
                continue
            seen.add(cur)
            frontier.extend(trans.get(cur, []))
    return False


def _alpha_legal_reach(f: StraightMap, T: Subgraph, gs: GateStructure, alpha):
    """Vertices alpha-legally seen from the terminus of the oriented edge
    alpha, with one arriving germ each; plus whether an alpha-legal loop at
    the terminus exists."""
    g0 = f.domain
    x = g0.terminus(alpha)
    bar_alpha = (alpha[0], -alpha[1])
    trans = _legal_transitions(f, T, gs)
    starts = [h for h in g0.germs(x)
              if h[0] in T.edge_ids and not gs.same_gate(h, bar_alpha)]
    seen_germ = {}
    frontier = list(starts)
    loop_found = False
    visited = set()
    while frontier:
        cur = frontier.pop()
        if cur in visited:
            continue
        visited.add(cur)
        v = g0.terminus(cur)
        arriving = (cur[0], -cur[1])
        if v == x and not gs.same_gate(arriving, bar_alpha):
            loop_found = True
        if v != x and v not in seen_germ:
            seen_germ[v] = arriving
        frontier.extend(trans.get(cur, []))
    return seen_germ, loop_found


def reduce_tension_graph(f: StraightMap, eps: Scalar) -> StraightMap:
    """One tension-reduction move toward a minimal optimal map.

    Picks an oriented edge of the tension graph lying on no legal loop
    inside it, and moves the images of the vertices legally seen from its
    terminus so that the edge (at least) leaves the tension graph.  Returns
    f unchanged when the map is already minimal.
    """
    eps = Fraction(eps)
    assert is_optimal(f, EXACT), "tension reduction needs an optimal map"
    g0 = f.domain
    lam = lip(f)
    T = tension_graph(f, EXACT)
    gs = gates(f)
    uncovered = [e for e in sorted(T.edge_ids) if not edge_on_legal_loop(f, T, gs, e)]
    if not uncovered:
        return f
    e = uncovered[0]
    alpha = None
    for cand_alpha in ((e, 1), (e, -1)):
        seen, loop_found = _alpha_legal_reach(f, T, gs, cand_alpha)
        if not loop_found:
            alpha = cand_alpha
            break
    assert alpha is not None, "both orientations admit legal returns for an uncovered edge"
    x = g0.terminus(alpha)
    assert g0.is_free(x)
    for v in seen:
        assert g0.is_free(v), "legally seen vertices are free"
    # directions: f(x) retraces the image of alpha reversed; each seen v
    # retraces the image of its arriving germ reversed
    assert g0.origin(alpha) not in seen, "initial vertex must not be legally seen"
    move_dirs = {x: f.oriented_image((alpha[0], -alpha[1])).first_direction()}
    for v, arriving in seen.items():
        move_dirs[v] = f.oriented_image(arriving).first_direction()

    # equal unit speeds; guard events
    cands = [eps]
    for ed, (u, w, L) in g0.edges.items():
        if L == 0:
            continue
        movers = (1 if u in move_dirs else 0) + (1 if w in move_dirs else 0)
        if movers and ed not in T.edge_ids:
            cands.append((lam - stretch(f, ed)) * L / (2 * movers))
        if movers:
            cands.append(f.edge_image[ed].length() / (2 * movers))
    for v, (mu, d) in move_dirs.items():
        cands.append(_dist_to_vertex(g0, f.vertex_image[v], d))
    dist = min(c for c in cands if c > 0) / 2
    motions = {v: (mu, _motion_letters(g0, f.vertex_image[v], d, dist))
               for v, (mu, d) in move_dirs.items()}
    out = apply_motion(f, motions)
    assert lip(out) == lam, "tension reduction must preserve lip"
    if not is_optimal(out, EXACT):
        # the move can leave a valence-one tension vertex; perturb it away
        out = opt(out, eps)
    newT = tension_graph(out, EXACT)
    assert newT.edge_ids < T.edge_ids, "tension graph must strictly shrink"
    assert is_optimal(out, EXACT)
    return out


def minimize_tension_graph(f: StraightMap, eps: Scalar, cap: int = 64) -> StraightMap:
    """Iterate reduce_tension_graph until the map is minimal optimal."""
    cur = f
    for _ in range(cap):
        nxt = reduce_tension_graph(cur, eps)
        if nxt is cur:
            return cur
        cur = nxt
    raise NoProgress("tension-graph minimization exceeded its cap")


# ---------------------------------------------------------------------------
# simple folds


@dataclass
class FoldRecord:
    turn: tuple
    delta: Scalar
    source: StraightMap
    target: StraightMap
    stem_edge: str
    new_vertex: str
    identified: tuple  # the two folded germs


def _common_prefix_length(g: MarkedGraph, w1, w2) -> Scalar:
    """Geometric length of the common initial segment of two paths."""
    total = Fraction(0)
    from ttkit.maps import _as_frac, letter_length
    i = j = 0
    w1, w2 = list(w1), list(w2)
    while i < len(w1) and j < len(w2):
        a, b = w1[i], w2[j]
        if a == b:
            total += letter_length(g, a)
            i += 1
            j += 1
            continue
        if a[0] == "M" or b[0] == "M":
            break
        fa, fb = _as_frac(a), _as_frac(b)
        if fa[1] == fb[1] and fa[2] == fb[2] and fa[3] == fb[3]:
            total += (min(fa[4], fb[4]) - fa[3]) * g.edge_len(fa[1])
        break
    return total


def simple_fold(f: StraightMap, turn, delta=None) -> FoldRecord:
    """Fold an illegal turn at a free vertex by identifying initial segments.

    turn = (germ1, germ2) with both germs at the same free vertex and
    the same nondegenerate image direction.  delta=None picks a safe
    automatic amount (a quarter of the shorter straight run, capped by
    half the shorter edge).
    """
    g = f.domain
    germ1, germ2 = turn
    assert germ1 != germ2
    v = g.origin(germ1)
    assert g.origin(germ2) == v, "turn germs must share a vertex"
    if not g.is_free(v):
        raise IllegalFoldAtNonFree(str(v))
    gs = gates(f)
    assert gs.same_gate(germ1, germ2), "turn must be illegal (same gate)"
    I1 = f.oriented_image(germ1)
    I2 = f.oriented_image(germ2)
    c = _common_prefix_length(f.codomain, I1.letters, I2.letters)
    assert c > 0, "same gate implies a common initial image segment"
    lam1 = stretch(f, germ1[0])
    lam2 = stretch(f, germ2[0])
    L1 = g.edge_len(germ1[0])
    L2 = g.edge_len(germ2[0])
    same_edge = germ1[0] == germ2[0]
    if delta is None:
        caps = [c / (4 * lam1), c / (4 * lam2), L1 / 2, L2 / 2]
        if same_edge:
            caps.append(L1 / 4)
        delta = min(caps)
    else:
        delta = Fraction(delta)
        if delta == 0:
            return FoldRecord(turn, Fraction(0), f, f, "", "", turn)
        if delta * max(lam1, lam2) > c or delta >= L1 or delta >= L2 or \
                (same_edge and 2 * delta >= L1):
            raise DeltaTooLarge(str(delta))
    assert delta > 0

    # build the folded graph
    nv = "w"
    k = 0
    while nv in g.vertices:
        k += 1
        nv = f"w{k}"
    st = "s"
    k = 0
    while st in g.edges:
        k += 1
        st = f"s{k}"
    vertices = dict(g.vertices)
    vertices[nv] = None
    edges = dict(g.edges)
    if same_edge:
        # folding the two ends of a loop edge
        e = germ1[0]
        edges[e] = (nv, nv, L1 - 2 * delta)
    else:
        for germ, L in ((germ1, L1), (germ2, L2)):
            e = germ[0]
            u0, w0, _ = g.edges[e]
            if germ[1] > 0:
                edges[e] = (nv, w0, L - delta)
            else:
                edges[e] = (u0, nv, L - delta)
    edges[st] = (v, nv, delta)
    Z = MarkedGraph(vertices, edges, g.collapsed)

    # projection pi: X -> Z at the letter level, length-preserving
    proj_paths = {}
    if same_edge:
        e = germ1[0]
        proj_paths[(e, 1)] = FracPath(Z, [E(st, 1), E(e, 1), E(st, -1)], start=Point.at_vertex(v))
    else:
        # each projected path traverses the folded edge in its positive
        # orientation, passing over the stem at the folded end
        for germ in (germ1, germ2):
            e = germ[0]
            if germ[1] > 0:
                proj_paths[(e, 1)] = FracPath(Z, [E(st, 1), E(e, 1)], start=Point.at_vertex(v))
            else:
                proj_paths[(e, 1)] = FracPath(Z, [E(e, 1), E(st, -1)])

    def push_letter(l):
        if l[0] == "M":
            return [l]
        e = l[1]
        if (e, 1) not in proj_paths:
            return [l]
        P = proj_paths[(e, 1)]
        Lx = g.edge_len(e)
        if l[0] == "E":
            lo, hi, s = Fraction(0), Fraction(1), l[2]
        else:
            lo, hi, s = l[3], l[4], l[2]
        if s > 0:
            return list(P.subpath_by_length(lo * Lx, hi * Lx).letters)
        return list(P.subpath_by_length((1 - hi) * Lx, (1 - lo) * Lx).reverse().letters)

    def push_word(word):
        out = []
        for l in word:
            out.extend(push_letter(l))
        return frac_tighten(out)

    def push_point(p: Point) -> Point:
        if p.is_vertex():
            return Point.at_vertex(p.vertex)
        if (p.edge, 1) in proj_paths:
            P = proj_paths[(p.edge, 1)]
            return P.point_at_length(p.t * g.edge_len(p.edge))
        return Point("interior", edge=p.edge, t=p.t)

    # m_len <= c <= length(I1), so the fold image point is defined
    m_len = min(lam1, lam2) * delta
    stem_img_letters = push_word(list(I1.subpath_by_length(0, m_len).letters))

    vi = {u: push_point(f.vertex_image[u]) for u in g.vertices}
    vi[nv] = push_point(I1.point_at_length(m_len))
    ei = {}
    for e2, (u2, w2, _) in Z.edges.items():
        if e2 == st:
            ei[st] = FracPath(Z, stem_img_letters, start=vi[v])
            continue
        if (e2, 1) in proj_paths:
            continue  # folded edges handled below
        ei[e2] = FracPath(Z, push_word(list(f.edge_image[e2].letters)),
                          start=vi[g.edges[e2][0]])
    if same_edge:
        e = germ1[0]
        lamL = lam1 * L1
        mid = push_word(list(I1.subpath_by_length(m_len, lamL - m_len).letters))
        ei[e] = FracPath(Z, mid, start=vi[nv])
    else:
        for germ, I, lam, L in ((germ1, I1, lam1, L1), (germ2, I2, lam2, L2)):
            e = germ[0]
            rest = push_word(list(I.subpath_by_length(m_len, lam * L).letters))
            if germ[1] > 0:
                ei[e] = FracPath(Z, rest, start=vi[nv])
            else:
                ei[e] = FracPath(Z, frac_inv_word(rest))
    fz = StraightMap(Z, Z, vi, ei, f.marker_map)
    return FoldRecord(turn, delta, f, fz, st, nv, (germ1, germ2))
