"""Displacement function, in-simplex minimization, jump analysis,
regeneration, and the global train-track search.

The displacement of a metric graph under a self-map is the maximal
candidate-loop stretch ratio.  Minimizing it over a simplex of length
vectors reduces to a family of exact linear feasibility problems indexed
by the stretch bound, solved by bisection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from ttkit.errors import (AttachmentMismatch, BudgetExhausted,
                          DegenerateCandidate, NotInvariant,
                          NumericalPolicyViolation)
from ttkit.flow import minimize_tension_graph, opt, simple_fold, weakopt
from ttkit.graphs import MarkedGraph, Point, Subgraph, core
from ttkit.loops import E, Loop, enumerate_candidates
from ttkit.lp import feasible_point
from ttkit.maps import (INFINITY_FLAG, F, FracPath, StraightMap,
                        combinatorialize, frac_inv_word, frac_tighten, gates,
                        image_of_path, is_partial_train_track, iterate,
                        letter_length, lip, quotient_map, restriction,
                        tension_graph)
from ttkit.errors import EmptyLoop
from ttkit.policy import EXACT, NumericPolicy, Scalar

# ---------------------------------------------------------------------------
# occurrence vectors and the displacement


def _occurrence_vector(loop_or_letters, edge_order):
    occ = {e: 0 for e in edge_order}
    letters = loop_or_letters.letters if isinstance(loop_or_letters, Loop) else loop_or_letters
    for l in letters:
        if l[0] == "E":
            occ[l[1]] += 1
        elif l[0] == "F":
            raise AssertionError("occurrence vectors need combinatorial letters")
    return [occ[e] for e in edge_order]


def _image_occurrence(fc: StraightMap, gamma: Loop, edge_order):
    try:
        letters = image_of_path(fc, gamma)
    except EmptyLoop:
        return [0] * len(edge_order)
    return _occurrence_vector(list(letters), edge_order)


def lambda_(f: StraightMap, lengths: dict = None):
    """Displacement: max candidate stretch ratio, or InfinityFlag.

    With `lengths` given, evaluates at that length vector instead of the
    domain's own metric (the combinatorics of f are length-independent).
    """
    assert f.is_self_map()
    g = f.domain
    L = lengths if lengths is not None else {e: g.edge_len(e) for e in g.edges}
    fc = combinatorialize(f)
    order = sorted(g.edges)
    best = Fraction(0)
    for cand in enumerate_candidates(g):
        den = sum(Fraction(L[e]) * o for e, o in zip(order, _occurrence_vector(cand.loop, order)))
        num = sum(Fraction(L[e]) * o for e, o in zip(order, _image_occurrence(fc, cand.loop, order)))
        if den == 0:
            if num > 0:
                return INFINITY_FLAG
            continue
        best = max(best, num / den)
    return best


# ---------------------------------------------------------------------------
# simplices and in-simplex minimization


class SimplexSpec:
    """A simplex of length vectors on a fixed topological graph, together
    with the combinatorial data of a self-map: per-candidate occurrence
    vectors of the loop and of its image."""

    def __init__(self, graph: MarkedGraph, f: StraightMap, floor: Scalar = 0):
        assert f.is_self_map()
        self.graph = graph
        self.map = f
        self.floor = Fraction(floor)
        self.edge_order = sorted(graph.edges)
        assert 0 <= self.floor < Fraction(1, len(self.edge_order))
        self.candidates = enumerate_candidates(graph)
        fc = combinatorialize(f)
        self.rows = []
        for cand in self.candidates:
            occ_g = _occurrence_vector(cand.loop, self.edge_order)
            occ_i = _image_occurrence(fc, cand.loop, self.edge_order)
            self.rows.append((occ_g, occ_i))

    def eval_lambda(self, lengths):
        """Displacement at a length vector (dict or list in edge order)."""
        if isinstance(lengths, dict):
            lengths = [Fraction(lengths[e]) for e in self.edge_order]
        best = Fraction(0)
        for occ_g, occ_i in self.rows:
            den = sum(l * o for l, o in zip(lengths, occ_g))
            num = sum(l * o for l, o in zip(lengths, occ_i))
            if den == 0:
                if num > 0:
                    return INFINITY_FLAG
                continue
            best = max(best, num / den)
        return best

    def feasible(self, lam: Scalar, floor: Scalar = None):
        """A length vector with all stretch ratios <= lam, or None."""
        lam = Fraction(lam)
        n = len(self.edge_order)
        lb = [Fraction(self.floor if floor is None else floor)] * n
        A_ub = [[Fraction(i) - lam * Fraction(g) for g, i in zip(occ_g, occ_i)]
                for occ_g, occ_i in self.rows]
        b_ub = [Fraction(0)] * len(A_ub)
        return feasible_point(A_ub=A_ub, b_ub=b_ub,
                              A_eq=[[1] * n], b_eq=[1], lb=lb, n=n)


def min_in_simplex(spec: SimplexSpec, tol: Scalar,
                   policy: NumericPolicy = EXACT):
    """(lambda*, witness lengths, boundary flags) by bisection on lambda.

    lambda* is the least stretch bound (within tol) for which the linear
    system {l >= floor, sum l = 1, <l, occ(f#gamma)> <= lambda <l, occ(gamma)>}
    is feasible.  With floor 0 this is the closed-simplex infimum: the
    collapsed-loop constraints force the zero set to be invariant.  The
    witness is re-solved with the largest feasible uniform floor so that
    interior minima yield interior witnesses; flags mark components pinned
    near the floor.
    """
    if not policy.exact:
        raise NumericalPolicyViolation("in-simplex minimization needs the exact backend")
    tol = Fraction(tol)
    assert tol > 0
    n = len(spec.edge_order)
    uniform = [Fraction(1, n)] * n
    lam0 = spec.eval_lambda(uniform)
    assert lam0 is not INFINITY_FLAG
    lo, hi = Fraction(1), max(Fraction(1), lam0)
    if spec.feasible(lo) is not None:
        hi = lo
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if spec.feasible(mid) is not None:
            hi = mid
        else:
            lo = mid
    # interiorize the witness: largest uniform floor that stays feasible
    flo, fhi = spec.floor, Fraction(1, n)
    witness = spec.feasible(hi)
    assert witness is not None
    for _ in range(20):
        mid = (flo + fhi) / 2
        w = spec.feasible(hi, floor=mid)
        if w is not None:
            witness = w
            flo = mid
        else:
            fhi = mid
    flag_tol = tol * 1000
    flags = frozenset(e for e, l in zip(spec.edge_order, witness)
                      if l <= spec.floor + flag_tol)
    return hi, dict(zip(spec.edge_order, witness)), flags


# ---------------------------------------------------------------------------
# segments: quasi-convexity and derivative bounds


@dataclass
class SegmentProfile:
    endpoints: tuple
    candidate_data: list     # (candidate, <A,g>, <B,g>, <A,ig>, <B,ig>)
    samples: list            # (t, lambda at A_t)
    quasi_convex_ok: bool
    derivative_ok: bool
    degenerate: list = field(default_factory=list)


def segment_profile(A: dict, B: dict, spec: SimplexSpec, samples: int,
                    tol: Scalar = Fraction(1, 10 ** 6)) -> SegmentProfile:
    """Sampled displacement along the segment (1-t)A + tB.

    Checks quasi-convexity lambda(A_t) <= max(lambda(A), lambda(B)) exactly
    and the finite-difference bound |dF_gamma/dt| <= C * F_gamma(E) + tol
    with C = max(L_A(gamma)/L_B(gamma), L_B(gamma)/L_A(gamma)) and E the
    endpoint with the larger candidate ratio (F_gamma is monotone, so the
    one-sided estimate applies after orienting the segment toward E).
    """
    tol = Fraction(tol)
    order = spec.edge_order
    va = [Fraction(A[e]) for e in order]
    vb = [Fraction(B[e]) for e in order]
    cdata = []
    degenerate = []
    for cand, (occ_g, occ_i) in zip(spec.candidates, spec.rows):
        ag = sum(l * o for l, o in zip(va, occ_g))
        bg = sum(l * o for l, o in zip(vb, occ_g))
        ai = sum(l * o for l, o in zip(va, occ_i))
        bi = sum(l * o for l, o in zip(vb, occ_i))
        if ag == 0 and bg == 0:
            degenerate.append(cand)
            continue
        cdata.append((cand, ag, bg, ai, bi))
    lamA = max((Fraction(ai, ag) for _, ag, _, ai, _ in cdata if ag > 0),
               default=Fraction(0))
    lamB = max((Fraction(bi, bg) for _, _, bg, _, bi in cdata if bg > 0),
               default=Fraction(0))
    bound = max(lamA, lamB)
    grid = [Fraction(k, samples) for k in range(samples + 1)]
    out = []
    qc_ok = True
    der_ok = True
    prev_F = None
    for k, t in enumerate(grid):
        lam_t = Fraction(0)
        Fs = {}
        for j, (cand, ag, bg, ai, bi) in enumerate(cdata):
            den = ag + t * (bg - ag)
            num = ai + t * (bi - ai)
            if den == 0:
                continue
            Fv = num / den
            Fs[j] = Fv
            lam_t = max(lam_t, Fv)
        out.append((t, lam_t))
        if lam_t > bound:
            qc_ok = False
        if prev_F is not None:
            dt = grid[k] - grid[k - 1]
            for j, Fv in Fs.items():
                if j not in prev_F:
                    continue
                cand, ag, bg, ai, bi = cdata[j]
                if ag == 0 or bg == 0:
                    continue
                C = max(ag / bg, bg / ag)
                top = max(ai / ag, bi / bg)
                if abs(Fv - prev_F[j]) / dt > C * top + tol:
                    der_ok = False
        prev_F = Fs
    return SegmentProfile((A, B), cdata, out, qc_ok, der_ok, degenerate)


# ---------------------------------------------------------------------------
# jumps at faces


@dataclass
class JumpReport:
    lambda_face: Scalar
    lambda_closure: Scalar
    lambda_sub: Scalar
    verdict: str            # "Jumped" | "NotJumped"
    forbidden_ok: bool


def jump_analysis(X: MarkedGraph, f: StraightMap, A: Subgraph,
                  tol: Scalar) -> JumpReport:
    """Compare the displacement at the collapse face with the invariant
    sub-space and ambient-closure minima.

    NotJumped iff lambda(face) >= min displacement of the restriction to
    core(A) over its own simplex; the face value must never lie strictly
    inside the forbidden interval (lambda_sub, lambda_closure).
    """
    tol = Fraction(tol)
    q = quotient_map(f, A)
    if q is INFINITY_FLAG:
        raise NotInvariant("collapsed subgraph is not invariant")
    fq, rec = q
    lam_face = lambda_(fq)
    fr = restriction(f, core(A))
    lam_sub, _, _ = min_in_simplex(SimplexSpec(fr.domain, fr, 0), tol)
    lam_closure, _, _ = min_in_simplex(SimplexSpec(X, f, 0), tol)
    verdict = "NotJumped" if lam_face >= lam_sub - tol else "Jumped"
    inside = lam_sub + tol < lam_face < lam_closure - tol
    return JumpReport(lam_face, lam_closure, lam_sub, verdict, not inside)


@dataclass
class ConstancyReport:
    applicable: bool
    target: Scalar = None     # displacement of the sub-restriction at X lengths
    samples: list = field(default_factory=list)
    radius: Scalar = Fraction(0)


def constancy_before_jump(X: MarkedGraph, f: StraightMap, A: Subgraph,
                          t_grid) -> ConstancyReport:
    """Along the straight segment from the A-collapse face point to X, the
    displacement is constant for small t when the face value jumps: it
    equals the displacement of the restriction to core(A) at X's lengths."""
    q = quotient_map(f, A)
    if q is INFINITY_FLAG:
        raise NotInvariant("collapsed subgraph is not invariant")
    fq, _ = q
    lam_face = lambda_(fq)
    fr = restriction(f, core(A))
    target = lambda_(fr)
    if not (lam_face < target):
        return ConstancyReport(False)
    spec = SimplexSpec(X, f, 0)
    lx = {e: X.edge_len(e) for e in X.edges}
    linf = {e: (Fraction(0) if e in A.edge_ids else lx[e]) for e in X.edges}
    samples = []
    radius = Fraction(0)
    streak = True
    for t in sorted(Fraction(t) for t in t_grid):
        assert 0 < t <= 1
        lt = {e: (1 - t) * linf[e] + t * lx[e] for e in X.edges}
        lam_t = spec.eval_lambda(lt)
        samples.append((t, lam_t))
        if streak and lam_t == target:
            radius = t
        else:
            streak = False
    return ConstancyReport(True, target, samples, radius)


# ---------------------------------------------------------------------------
# regeneration at a collapsed vertex


@dataclass
class AttachmentData:
    vertex: str               # the collapsed non-free vertex of the face
    base: str                 # basepoint vertex of the insert
    germ_points: dict         # germ at the collapsed vertex -> insert vertex
    marker_words: dict        # marker index -> letters in the insert


def _geodesic(g: MarkedGraph, a: str, b: str):
    """Shortest edge path between vertices as letters (Dijkstra)."""
    import heapq
    dist = {a: Fraction(0)}
    back = {a: None}
    heap = [(Fraction(0), a)]
    while heap:
        d, v = heapq.heappop(heap)
        if v == b:
            break
        if d > dist[v]:
            continue
        for o in g.germs(v):
            w = g.terminus(o)
            nd = d + g.edge_len(o[0])
            if w not in dist or nd < dist[w]:
                dist[w] = nd
                back[w] = (v, o)
                heapq.heappush(heap, (nd, w))
    assert b in back, f"no path between {a} and {b}"
    letters = []
    v = b
    while back[v] is not None:
        u, o = back[v]
        letters.append(("E", o[0], o[1]))
        v = u
    letters.reverse()
    return letters


def _path_to_point(g: MarkedGraph, a: str, p: Point):
    """Letters from vertex a to an arbitrary point p."""
    if p.is_vertex():
        return _geodesic(g, a, p.vertex)
    u = g.edges[p.edge][0]
    word = _geodesic(g, a, u)
    if p.t > 0:
        word = word + [F(p.edge, 1, 0, p.t)]
    return frac_tighten(word)


def regenerate(face: MarkedGraph, insert: MarkedGraph, attach: AttachmentData,
               delta: Scalar, f_face: StraightMap, f_insert: StraightMap):
    """Blow the collapsed vertex of a face point back up at volume delta.

    The insert replaces the non-free vertex; face edges re-attach at the
    prescribed insert vertices; image paths crossing the vertex are routed
    through the insert basepoint with marker realizations expanded to their
    recorded loops.  Returns (graph, straight map); the achieved Lipschitz
    constant tends to max(lambda(face), lip(f_insert)) as delta -> 0.
    """
    delta = Fraction(delta)
    assert 0 < delta < 1
    vstar = attach.vertex
    if vstar not in face.vertices or face.is_free(vstar):
        raise AttachmentMismatch(f"{vstar} is not a non-free vertex of the face")
    for o in face.germs(vstar):
        if o not in attach.germ_points:
            raise AttachmentMismatch(f"no attachment for germ {o}")
        if attach.germ_points[o] not in insert.vertices:
            raise AttachmentMismatch(f"{attach.germ_points[o]} not an insert vertex")
    if attach.base not in insert.vertices:
        raise AttachmentMismatch(f"basepoint {attach.base} not in the insert")

    # scaled pieces: face part to volume 1 - delta, insert part to delta
    sf = (1 - delta) / face.volume()
    si = delta / insert.volume()
    vertices = {v: lab for v, lab in face.vertices.items() if v != vstar}
    for v, lab in insert.vertices.items():
        assert v not in vertices, "insert vertex ids must be fresh"
        vertices[v] = lab
    edges = {}
    for e, (u, w, L) in face.edges.items():
        u2 = attach.germ_points[(e, 1)] if u == vstar else u
        w2 = attach.germ_points[(e, -1)] if w == vstar else w
        edges[e] = (u2, w2, L * sf)
    for e, (u, w, L) in insert.edges.items():
        assert e not in edges, "insert edge ids must be fresh"
        edges[e] = (u, w, L * si)
    Z = MarkedGraph(vertices, edges, face.collapsed | insert.collapsed)

    base = attach.base

    def realize_marker(l):
        idx, sgn = l[2], l[3]
        if idx not in attach.marker_words:
            raise AttachmentMismatch(f"no realization for marker index {idx}")
        word = [tuple(x) for x in attach.marker_words[idx]]
        return word if sgn > 0 else frac_inv_word(word)

    def lift_point(p: Point) -> Point:
        if p.is_vertex():
            return Point.at_vertex(base if p.vertex == vstar else p.vertex)
        return Point("interior", edge=p.edge, t=p.t)

    def lift_word(word, start_at_vstar: bool):
        """Route every pass through the collapsed vertex via the basepoint."""
        out = []
        at_insert = start_at_vstar  # currently sitting at the basepoint
        pending = []                # realized marker letters collected at vstar
        for l in word:
            if l[0] == "M" and l[1] == vstar:
                pending.extend(realize_marker(l))
                at_insert = True
                continue
            if l[0] in ("E", "F"):
                e = l[1]
                sign = l[2]
                u, w, _ = face.edges[e]
                starts_at = u if sign > 0 else w
                ends_at = w if sign > 0 else u
                if l[0] == "F":
                    frac = (l[3], l[4])
                    full = frac == (0, 1)
                else:
                    full = True
                if at_insert and (full or (l[0] == "F" and l[3] == 0)) and starts_at == vstar:
                    # leaving the collapsed vertex: basepoint -> attachment
                    out.extend(pending)
                    pending = []
                    out.extend(_geodesic(Z, base, Z.edges[e][0] if sign > 0 else Z.edges[e][1]))
                    at_insert = False
                elif at_insert:
                    out.extend(pending)
                    pending = []
                    at_insert = False
                out.append(l)
                if (full or (l[0] == "F" and l[4] == 1)) and ends_at == vstar:
                    # arriving at the collapsed vertex: attachment -> basepoint
                    arrival = Z.edges[e][1] if sign > 0 else Z.edges[e][0]
                    out.extend(_geodesic(Z, arrival, base))
                    at_insert = True
            else:
                out.extend(pending)
                pending = []
                out.append(l)
        out.extend(pending)
        return out, at_insert

    vi = {}
    for v in face.vertices:
        if v == vstar:
            continue
        vi[v] = lift_point(f_face.vertex_image[v])
    for v in insert.vertices:
        p = f_insert.vertex_image[v]
        vi[v] = Point.at_vertex(p.vertex) if p.is_vertex() else Point("interior", edge=p.edge, t=p.t)

    def insert_image_vertex(v):
        p = f_insert.vertex_image[v]
        if not p.is_vertex():
            raise AttachmentMismatch(
                f"insert map must send attachment vertex {v} to a vertex")
        return p.vertex

    ei = {}
    for e in face.edges:
        u, w, _ = face.edges[e]
        fu = f_face.vertex_image[u]
        starts_at_vstar = fu.is_vertex() and fu.vertex == vstar
        word, ended = lift_word(list(f_face.edge_image[e].letters),
                                starts_at_vstar)
        fw = f_face.vertex_image[w]
        ends_at_vstar = fw.is_vertex() and fw.vertex == vstar
        if u == vstar:
            # re-attached origin: image must start at the insert map's
            # value there, then travel to where the face image begins
            o2 = attach.germ_points[(e, 1)]
            if starts_at_vstar:
                head = _geodesic(Z, insert_image_vertex(o2), base)
            else:
                head = _path_to_point(Z, insert_image_vertex(o2),
                                      lift_point(fu))
            word = head + word
            start_pt = Point.at_vertex(insert_image_vertex(o2))
        else:
            start_pt = vi[u]
        if w == vstar:
            t2 = attach.germ_points[(e, -1)]
            if ends_at_vstar:
                # lifted word already parks at the basepoint
                assert ended
                tail = _geodesic(Z, base, insert_image_vertex(t2))
            else:
                tail = frac_inv_word(_path_to_point(
                    Z, insert_image_vertex(t2), lift_point(fw)))
            word = word + tail
        ei[e] = FracPath(Z, frac_tighten(word), start=start_pt)
    for e in insert.edges:
        letters = list(f_insert.edge_image[e].letters)
        ei[e] = FracPath(Z, letters, start=vi[insert.edges[e][0]])

    mm = {k: v for k, v in f_face.marker_map.items() if k[0] != vstar}
    mm.update(f_insert.marker_map)
    fz = StraightMap(Z, Z, vi, ei, mm)
    return Z, fz


# ---------------------------------------------------------------------------
# exit search


@dataclass
class ExitCertificate:
    folds: list               # FoldRecord sequence
    lambda_start: Scalar
    lambda_exit: Scalar
    witness: dict             # lengths in the bigger simplex
    spec: SimplexSpec


def _with_metric(f: StraightMap, lengths: dict) -> StraightMap:
    """Same combinatorial self-map carried onto new edge lengths."""
    g2 = f.domain.with_lengths(lengths)
    vi = {v: (Point.at_vertex(p.vertex) if p.is_vertex()
              else Point("interior", edge=p.edge, t=p.t))
          for v, p in f.vertex_image.items()}
    ei = {e: FracPath(g2, list(path.letters), start=vi[f.domain.edges[e][0]],
                      pretightened=True)
          for e, path in f.edge_image.items()}
    return StraightMap(g2, g2, vi, ei, f.marker_map)


def _optimize(f: StraightMap, eps=Fraction(1, 1000)):
    """weakopt + opt + tension minimization: a minimal optimal representative."""
    g, _ = weakopt(f)
    g = opt(g, eps)
    return minimize_tension_graph(g, eps)


def _foldable_turns(f: StraightMap, policy: NumericPolicy = EXACT):
    """Illegal turns of tension-graph germs at free vertices."""
    T = tension_graph(f, policy)
    gs = gates(f)
    turns = []
    for v in sorted(f.domain.vertices):
        if not f.domain.is_free(v):
            continue
        for gate in gs.partition[v]:
            tg = sorted(o for o in gate if o[0] in T.edge_ids)
            if len(tg) >= 2 and not f.oriented_image(tg[0]).is_degenerate():
                turns.append(((tg[0], tg[1]), v, f.domain.valence(v)))
    return turns


def exit_search(X: MarkedGraph, f: StraightMap, budget: int = 64,
                tol: Scalar = Fraction(1, 10 ** 9),
                policy: NumericPolicy = EXACT):
    """Fold out of the simplex when the local minimum is not a train track.

    Returns None when f is a partial train track (no exit exists), else an
    ExitCertificate whose target simplex contains a point of strictly
    smaller displacement.
    """
    tol = Fraction(tol)
    cur = _optimize(f)
    lam0 = lambda_(cur)
    folds = []
    for _ in range(budget):
        if is_partial_train_track(cur, policy) is not None:
            return None
        turns = _foldable_turns(cur, policy)
        if not turns:
            return None
        # prefer a non-trivalent foldable vertex: its fold opens a simplex
        # with the current one as a proper face
        turns.sort(key=lambda it: (-it[2], it[1]))
        turn, v, valence = turns[0]
        rec = simple_fold(cur, turn)
        folds.append(rec)
        nxt = rec.target
        spec2 = SimplexSpec(nxt.domain, nxt, 0)
        lam_exit, witness, flags = min_in_simplex(spec2, tol)
        if lam_exit < lam0 - tol:
            return ExitCertificate(folds, lam0, lam_exit, witness, spec2)
        cur = _optimize(nxt)
    raise BudgetExhausted("exit search exceeded its fold budget")


# ---------------------------------------------------------------------------
# global search


@dataclass
class SearchResult:
    classification: str       # InteriorTrainTrack | TrainTrackAtInfinity | BudgetExhausted
    lam: Scalar
    graph: MarkedGraph = None
    map: StraightMap = None
    collapse_stack: list = field(default_factory=list)
    certificate: tuple = None
    jump_reports: list = field(default_factory=list)
    trajectory: list = field(default_factory=list)


def global_min_search(X0: MarkedGraph, f0: StraightMap, budget: int = 16,
                      tol: Scalar = Fraction(1, 10 ** 9),
                      policy: NumericPolicy = None) -> SearchResult:
    """Descend through simplices and faces to a (partial) train track.

    Each round minimizes in the current simplex; an interior witness is
    optimized and tested for the train-track property, a boundary witness
    triggers jump analysis at the collapse face and a descent into the
    quotient or the restriction, whichever attains the smaller bound.
    """
    from ttkit.policy import float_policy

    tol = Fraction(tol)
    if policy is None:
        policy = float_policy(Fraction(1, 10 ** 6))
    cur = f0
    stack = []
    jumps = []
    traj = []
    for _ in range(budget):
        g = cur.domain
        spec = SimplexSpec(g, cur, 0)
        lam_star, witness, flags = min_in_simplex(spec, tol)
        traj.append(lam_star)
        if not flags:
            fw = _with_metric(cur, witness)
            fw = _optimize(fw)
            cert = is_partial_train_track(fw, policy)
            if cert is not None:
                cls = "TrainTrackAtInfinity" if stack else "InteriorTrainTrack"
                return SearchResult(cls, lam_star, fw.domain, fw, stack, cert,
                                    jumps, traj)
            try:
                exit_cert = exit_search(fw.domain, fw, tol=tol, policy=policy)
            except BudgetExhausted:
                return SearchResult("BudgetExhausted", lam_star, fw.domain, fw,
                                    stack, None, jumps, traj)
            if exit_cert is None:
                # not a train track by the strict test yet no exit: give up
                return SearchResult("BudgetExhausted", lam_star, fw.domain, fw,
                                    stack, None, jumps, traj)
            cur = _with_metric(exit_cert.spec.map, exit_cert.witness)
            continue
        # boundary: collapse the flagged part
        fw = _with_metric(cur, {e: max(v, tol) for e, v in witness.items()})
        A = core(fw.domain.subgraph(frozenset(flags)))
        if not A.edge_ids:
            # flagged edges carry no loop: treat as interior after re-floor
            spec = SimplexSpec(g, cur, min(Fraction(1, 10 ** 6),
                                           Fraction(1, 2 * len(g.edges))))
            lam_star, witness, flags = min_in_simplex(spec, tol)
            cur = _with_metric(cur, witness)
            continue
        report = jump_analysis(fw.domain, fw, A, tol)
        jumps.append(report)
        if report.verdict == "NotJumped":
            q = quotient_map(fw, A)
            assert q is not INFINITY_FLAG
            fq, rec = q
            stack.append(rec)
            cur = fq
        else:
            cur = restriction(fw, A)
    return SearchResult("BudgetExhausted", traj[-1] if traj else None,
                        cur.domain, cur, stack, None, jumps, traj)


def power_check(result: SearchResult, k_max: int = 4,
                tol: Scalar = Fraction(1, 10 ** 6)) -> dict:
    """lambda(X, f^k) = lambda(X, f)^k at a train-track point, within
    relative tol."""
    assert result.map is not None
    tol = Fraction(tol)
    lam1 = lambda_(result.map)
    report = {"lambda": lam1, "powers": {}, "ok": True}
    for k in range(2, k_max + 1):
        lam_k = lambda_(iterate(result.map, k))
        expected = lam1 ** k
        ok = abs(lam_k - expected) <= tol * expected
        report["powers"][k] = (lam_k, expected, ok)
        report["ok"] = report["ok"] and ok
    return report


def spectrum_sample(specs, tol: Scalar = Fraction(1, 10 ** 9)) -> list:
    """Sorted, tol-deduplicated in-simplex minima; exploratory only."""
    tol = Fraction(tol)
    vals = sorted(min_in_simplex(s, tol)[0] for s in specs)
    out = []
    for v in vals:
        if not out or v - out[-1] > 1000 * tol:
            out.append(v)
    return out
