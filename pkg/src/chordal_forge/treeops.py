"""Junction-tree combinatorics on (bipartite state, latent tree) pairs."""
from __future__ import annotations

from dataclasses import dataclass

from .core import BipartiteState, LatentTree
from .errors import DomainError

RELAXED = "relaxed"
STRICT = "strict"


@dataclass(frozen=True)
class InducedSubtree:
    node: int
    vertices: frozenset[int]
    edges: tuple[tuple[int, int], ...]

    def is_connected(self) -> bool:
        return len(self.vertices) == 0 or len(self.edges) == len(self.vertices) - 1


@dataclass(frozen=True)
class MoveSets:
    boundary: frozenset[int]
    neighbour: frozenset[int]
    strictness: str

    @property
    def permitted(self) -> frozenset[int]:
        return self.boundary | self.neighbour


def _check_match(z: BipartiteState, t: LatentTree) -> None:
    if z.clique_ids != t.vertices:
        raise DomainError("tree vertices and bipartite clique ids differ")


def induced_subtree(z: BipartiteState, t: LatentTree, i: int) -> InducedSubtree:
    col = z.col(i)
    edges = tuple(sorted((a, b) for a in col for b in t.adj.get(a, ()) if b in col and a < b))
    return InducedSubtree(i, col, edges)


def _contained_elsewhere(z: BipartiteState, k: int, members: set[int] | frozenset[int]) -> bool:
    return any(members <= r for s, r in z.rows.items() if s != k)


def move_sets_relaxed(z: BipartiteState, t: LatentTree, i: int) -> MoveSets:
    col = z.col(i)
    boundary = set()
    neighbour = set()
    for k in col:
        nb = t.neighbors(k)
        if sum(1 for s in nb if s in col) <= 1:
            boundary.add(k)
        neighbour.update(s for s in nb if s not in col)
    return MoveSets(frozenset(boundary), frozenset(neighbour), RELAXED)


def move_sets_strict(z: BipartiteState, t: LatentTree, i: int) -> MoveSets:
    rel = move_sets_relaxed(z, t, i)
    boundary = {k for k in rel.boundary if not _contained_elsewhere(z, k, z.rows[k] - {i})}
    neighbour = {k for k in rel.neighbour if not _contained_elsewhere(z, k, z.rows[k] | {i})}
    return MoveSets(frozenset(boundary), frozenset(neighbour), STRICT)


def move_sets(z: BipartiteState, t: LatentTree, i: int, strictness: str = RELAXED) -> MoveSets:
    if strictness == RELAXED:
        return move_sets_relaxed(z, t, i)
    if strictness == STRICT:
        return move_sets_strict(z, t, i)
    raise DomainError(f"unknown strictness {strictness!r}")


def verify_junction_property(z: BipartiteState, t: LatentTree):
    """Return ``(True, None)`` or ``(False, (node, component_a, component_b))``."""
    _check_match(z, t)
    for i in sorted(z.cols):
        col = z.cols[i]
        if len(col) <= 1:
            continue
        start = min(col)
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for w in t.adj[u]:
                if w in col and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != len(col):
            rest = set(col) - seen
            # the component holding the smallest remaining clique
            s2 = min(rest)
            other = {s2}
            stack = [s2]
            while stack:
                u = stack.pop()
                for w in t.adj[u]:
                    if w in rest and w not in other:
                        other.add(w)
                        stack.append(w)
            return False, (i, frozenset(seen), frozenset(other))
    return True, None


def maximal_row_ids(z: BipartiteState) -> list[int]:
    """One representative (smallest id) per distinct inclusion-maximal nonempty row."""
    rows = {k: frozenset(r) for k, r in z.rows.items() if r}
    out = []
    for k in sorted(rows):
        rk = rows[k]
        dominated = False
        for s, rs in rows.items():
            if s == k:
                continue
            if rk < rs or (rk == rs and s < k):
                dominated = True
                break
        if not dominated:
            out.append(k)
    return out


def derive_observed_jtree(z: BipartiteState, t: LatentTree) -> LatentTree:
    """Contract every non-maximal, empty or duplicate clique into a neighbour.

    Each absorbed clique hands its other tree edges to the clique that
    absorbs it.  Absorption targets a neighbour whose row contains the
    absorbed row; a kept (maximal) neighbour is preferred, then the smallest
    id.  The result is a tree over the representatives of the maximal rows.
    """
    ok, _ = verify_junction_property(z, t)
    if not ok:
        raise DomainError("junction property does not hold")
    keep = set(maximal_row_ids(z))
    if not keep:
        return LatentTree([])
    rows = {k: frozenset(r) for k, r in z.rows.items()}
    adj = {v: set(nb) for v, nb in t.adj.items()}
    pending = set(adj) - keep
    while pending:
        progressed = False
        for s in sorted(pending):
            cands = [m for m in adj[s] if rows[s] <= rows[m]]
            if not cands:
                continue
            target = min(cands, key=lambda m: (m not in keep, m))
            for x in adj[s]:
                adj[x].discard(s)
                if x != target:
                    adj[x].add(target)
                    adj[target].add(x)
            del adj[s]
            pending.discard(s)
            progressed = True
            break
        if not progressed:
            raise DomainError("could not contract non-maximal cliques; junction property broken?")
    edges = {(min(a, b), max(a, b)) for a in adj for b in adj[a]}
    return LatentTree(keep, edges)


def rewire_candidates(z: BipartiteState, t: LatentTree, edge: tuple[int, int]) -> frozenset[int]:
    """Cliques on the ``s`` side of edge (k, s) that contain the separator row(k) & row(s)."""
    k, s = edge
    if not t.has_edge(k, s):
        raise DomainError(f"({k},{s}) is not a tree edge")
    sep = z.rows[k] & z.rows[s]
    side = t.side_of(k, s)
    return frozenset(m for m in side if sep <= z.rows[m])
