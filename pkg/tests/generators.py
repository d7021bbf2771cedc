"""Random instance generators shared by the property and acceptance tests."""

import random
from fractions import Fraction

from ttkit.flow import _motion_letters, apply_motion
from ttkit.graphs import MarkedGraph, Point
from ttkit.loops import E, M, tighten
from ttkit.maps import FracPath, StraightMap


def random_graph(rng: random.Random, max_rank: int = 3) -> MarkedGraph:
    """Connected marked graph, at most 8 edges, graph rank <= max_rank.

    Free valence-1 leaves are made non-free so the graph is a legitimate
    deformation-space point without pruning.
    """
    rank = rng.randint(1, max_rank)
    nv = rng.randint(1, min(3, rank + 1))
    names = [f"v{i}" for i in range(nv)]
    vertices = {v: None for v in names}
    edges = {}
    counter = 0

    def add_edge(u, w):
        nonlocal counter
        eid = f"e{counter}"
        counter += 1
        edges[eid] = (u, w, Fraction(rng.randint(1, 6), rng.randint(1, 3)))

    for i in range(1, nv):
        add_edge(names[rng.randrange(i)], names[i])
    # spend the extra edges on tree leaves first so no free valence-1
    # vertices remain, then wherever
    extras = list(range(rank))
    for k in extras:
        leaves = [v for v in names
                  if sum((u == v) + (w == v) for u, w, _ in edges.values()) == 1]
        a = leaves[0] if leaves else rng.choice(names)
        add_edge(a, rng.choice(names))
    if rng.random() < 0.3:
        # marker insertion multiplies the loop count by roughly the number
        # of germs per visit, so keep labels off high-valence vertices to
        # hold the brute-force oracle tractable
        low = [v for v in names
               if sum((u == v) + (w == v) for u, w, _ in edges.values()) <= 4]
        if low:
            vertices[rng.choice(low)] = "G0"
    return MarkedGraph(vertices, edges)


def _random_walk(rng, g, start, steps):
    word = []
    cur = start
    for _ in range(steps):
        if not g.is_free(cur) and rng.random() < 0.25:
            word.append(M(cur, 1, rng.choice([1, -1])))
            continue
        o = rng.choice(g.germs(cur))
        word.append(E(o[0], o[1]))
        cur = g.terminus(o)
    return word, cur


def _bfs_path(g, a, b):
    if a == b:
        return []
    back = {a: None}
    queue = [a]
    while queue:
        v = queue.pop(0)
        for o in g.germs(v):
            w = g.terminus(o)
            if w not in back:
                back[w] = (v, o)
                queue.append(w)
    word = []
    v = b
    while back[v] is not None:
        u, o = back[v]
        word.append(E(o[0], o[1]))
        v = u
    word.reverse()
    return word


def random_map(rng: random.Random, g: MarkedGraph) -> StraightMap:
    """Random straight self-map: vertex images are vertices, edge images
    are tight random walks connected to the required endpoints."""
    nonfree = sorted(v for v in g.vertices if not g.is_free(v))
    vi = {}
    for v in sorted(g.vertices):
        if g.is_free(v):
            vi[v] = Point.at_vertex(rng.choice(sorted(g.vertices)))
        else:
            vi[v] = Point.at_vertex(rng.choice(nonfree))
    ei = {}
    for e, (u, w, _) in g.edges.items():
        walk, cur = _random_walk(rng, g, vi[u].vertex, rng.randint(0, 4))
        word = tighten(walk + _bfs_path(g, cur, vi[w].vertex))
        ei[e] = FracPath(g, word, start=vi[u])
    return StraightMap(g, g, vi, ei)


def random_perturbation(rng: random.Random, f: StraightMap,
                        scale=Fraction(1, 20)) -> StraightMap:
    """Move one or two vertex images a small distance; stays a valid
    straight map with the same homotopy class."""
    g = f.domain
    cur = f
    for _ in range(rng.randint(1, 2)):
        v = rng.choice(sorted(g.vertices))
        p = cur.vertex_image[v]
        if p.is_vertex():
            germs = g.germs(p.vertex)
            if not germs:
                continue
            o = rng.choice(germs)
            room = g.edge_len(o[0])
        else:
            o = (p.edge, rng.choice([1, -1]))
            room = (1 - p.param_along(o)) * g.edge_len(o[0])
        if room == 0:
            continue
        dist = min(scale, room / 2) * Fraction(rng.randint(1, 3), 3)
        m = _motion_letters(g, p, ("dir", o[0], o[1]), dist)
        cur = apply_motion(cur, {v: ((), m)})
    return cur
