"""Independent ground truth for chordality, cliques and junction trees.

These routines work on the projected graph alone and share no code with the
samplers, so they can be used to audit them.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .core import DecomposableGraph, LatentTree
from .errors import DomainError

BRUTE_FORCE_LIMIT = 12


@dataclass(frozen=True)
class JunctionTree:
    tree: LatentTree               # vertices index into ``cliques``
    cliques: tuple[frozenset[int], ...]
    separators: tuple[frozenset[int], ...]   # nonempty edge intersections, sorted

    def separator_counts(self) -> Counter:
        return Counter(self.separators)


def maximum_cardinality_search(g: DecomposableGraph) -> list[int]:
    """Visit order of maximum cardinality search (ties to the smallest id)."""
    weight = {v: 0 for v in g.vertices}
    order = []
    unvisited = set(g.vertices)
    while unvisited:
        v = max(unvisited, key=lambda u: (weight[u], -u))
        order.append(v)
        unvisited.remove(v)
        for w in g.adj[v]:
            if w in unvisited:
                weight[w] += 1
    return order


def is_perfect_elimination(g: DecomposableGraph, ordering: list[int]) -> bool:
    """Each vertex's neighbours later in ``ordering`` must be pairwise adjacent."""
    pos = {v: n for n, v in enumerate(ordering)}
    for v in ordering:
        later = [w for w in g.adj[v] if pos[w] > pos[v]]
        for a in range(len(later)):
            for b in range(a + 1, len(later)):
                if later[b] not in g.adj[later[a]]:
                    return False
    return True


def is_chordal_mcs(g: DecomposableGraph) -> tuple[bool, list[int] | None]:
    """Chordality test; returns a perfect elimination ordering when chordal."""
    peo = maximum_cardinality_search(g)[::-1]
    if is_perfect_elimination(g, peo):
        return True, peo
    return False, None


def chordless_cycle(g: DecomposableGraph) -> list[int] | None:
    """Some chordless cycle of length >= 4, found by exhaustive path search."""
    verts = sorted(g.vertices)
    for s in verts:
        # paths s -> ... whose inner vertices exceed s, every new vertex adjacent
        # to the path only through its predecessor (and possibly s when closing)
        stack = [(s, [s])]
        while stack:
            u, path = stack.pop()
            for w in sorted(g.adj[u]):
                if w <= s or w in path:
                    continue
                inner_hits = [p for p in path[1:-1] if p in g.adj[w]]
                if inner_hits:
                    continue
                if len(path) >= 2 and s in g.adj[w]:
                    if len(path) >= 3:
                        return path + [w]
                    continue
                stack.append((w, path + [w]))
    return None


def chordal_bruteforce(g: DecomposableGraph) -> bool:
    if len(g.vertices) > BRUTE_FORCE_LIMIT:
        raise DomainError(f"brute-force chordality limited to {BRUTE_FORCE_LIMIT} vertices")
    return chordless_cycle(g) is None


def maximal_cliques(g: DecomposableGraph) -> set[frozenset[int]]:
    """Bron-Kerbosch with pivoting."""
    out: set[frozenset[int]] = set()

    def expand(r: set[int], p: set[int], x: set[int]):
        if not p and not x:
            if r:
                out.add(frozenset(r))
            return
        pivot = max(p | x, key=lambda u: len(g.adj[u] & p))
        for v in sorted(p - g.adj[pivot]):
            nb = g.adj[v]
            expand(r | {v}, p & nb, x & nb)
            p = p - {v}
            x = x | {v}

    expand(set(), set(g.vertices), set())
    return out


def build_junction_tree(g: DecomposableGraph, rng: np.random.Generator | None = None) -> JunctionTree:
    """Maximum-weight spanning tree of the clique intersection graph (Kruskal).

    Ties are broken by clique order, or at random when ``rng`` is given.
    Components of a disconnected graph are joined by empty-intersection
    edges; empty separators are omitted from the returned multiset.
    """
    ok, _ = is_chordal_mcs(g)
    if not ok:
        raise DomainError("graph is not chordal")
    cliques = tuple(sorted(maximal_cliques(g), key=lambda c: (sorted(c), len(c))))
    m = len(cliques)
    cand = []
    for a in range(m):
        for b in range(a + 1, m):
            cand.append((len(cliques[a] & cliques[b]), a, b))
    if rng is not None:
        keys = rng.random(len(cand))
        cand = [c for _, c in sorted(zip(keys, cand), key=lambda p: (-p[1][0], p[0]))]
    else:
        cand.sort(key=lambda c: (-c[0], c[1], c[2]))
    parent = list(range(m))

    def find(u):
        while parent[u] != u:
            parent[u] = parent[parent[u]]
            u = parent[u]
        return u

    edges = []
    for _, a, b in cand:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
            edges.append((a, b))
    tree = LatentTree(range(m), edges)
    seps = tuple(sorted((cliques[a] & cliques[b] for a, b in edges if cliques[a] & cliques[b]),
                        key=lambda s: (len(s), sorted(s))))
    return JunctionTree(tree, cliques, seps)


def verify_rip(sequence) -> bool:
    """Running intersection: each C_j & (C_1 u ... u C_{j-1}) lies inside some earlier C_i."""
    seq = [frozenset(c) for c in sequence]
    history: set = set()
    for j, c in enumerate(seq):
        if j > 0:
            sep = c & history
            if not any(sep <= seq[i] for i in range(j)):
                return False
        history |= c
    return True


def perfect_sequence(jt: JunctionTree, root: int = 0) -> list[frozenset[int]]:
    """Clique sequence in DFS preorder of the junction tree."""
    if not jt.cliques:
        return []
    order = []
    seen = {root}
    stack = [root]
    while stack:
        u = stack.pop()
        order.append(u)
        for w in sorted(jt.tree.adj[u], reverse=True):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return [jt.cliques[u] for u in order]
