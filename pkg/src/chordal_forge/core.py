"""Basic entities: point sets, latent trees, bipartite states and projected graphs.

Ids are dense non-negative integers.  Clique ids and node ids live in separate
spaces; a bipartite state keeps a row index (clique -> members) and a column
index (node -> cliques containing it), and empty rows are kept.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TruncationWindow:
    """Bounds of the sampling window: clique locations/weights and node locations/weights."""

    r_prime: float
    c_prime: float
    r: float
    c: float

    def __post_init__(self):
        for name in ("r_prime", "c_prime", "r", "c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"window bound {name} must be positive and finite, got {v}")


@dataclass
class PointSet:
    """Locations and weights of clique points and node points, indexed by id.

    ``clique_eff`` / ``node_eff`` hold the weights on the scale the kernel is
    evaluated on.  For most kernels they are the raw weights; kernels that
    reparameterise their weights store the transformed values here.
    """

    clique_loc: np.ndarray
    clique_weight: np.ndarray
    node_loc: np.ndarray
    node_weight: np.ndarray
    clique_eff: np.ndarray | None = None
    node_eff: np.ndarray | None = None
    window: TruncationWindow | None = None

    def __post_init__(self):
        self.clique_loc = np.asarray(self.clique_loc, dtype=float)
        self.clique_weight = np.asarray(self.clique_weight, dtype=float)
        self.node_loc = np.asarray(self.node_loc, dtype=float)
        self.node_weight = np.asarray(self.node_weight, dtype=float)
        if self.clique_loc.shape != self.clique_weight.shape:
            raise DomainError("clique locations and weights differ in length")
        if self.node_loc.shape != self.node_weight.shape:
            raise DomainError("node locations and weights differ in length")
        for arr in (self.clique_loc, self.clique_weight, self.node_loc, self.node_weight):
            if arr.size and (not np.all(np.isfinite(arr)) or arr.min() < 0):
                raise DomainError("point coordinates must be finite and nonnegative")
        if self.clique_eff is None:
            self.clique_eff = self.clique_weight.copy()
        if self.node_eff is None:
            self.node_eff = self.node_weight.copy()

    @property
    def n_cliques(self) -> int:
        return int(self.clique_loc.size)

    @property
    def n_nodes(self) -> int:
        return int(self.node_loc.size)

    def within(self, window: TruncationWindow) -> bool:
        return bool(
            np.all(self.clique_loc <= window.r_prime)
            and np.all(self.clique_weight <= window.c_prime)
            and np.all(self.node_loc <= window.r)
            and np.all(self.node_weight <= window.c)
        )

    def take_cliques(self, n: int) -> "PointSet":
        """Keep the first ``n`` clique points (lowest locations)."""
        return PointSet(
            self.clique_loc[:n], self.clique_weight[:n], self.node_loc, self.node_weight,
            self.clique_eff[:n], self.node_eff, self.window,
        )

    def with_nodes(self, loc, weight, eff) -> "PointSet":
        """Append node points; new ids follow the existing ones."""
        return PointSet(
            self.clique_loc, self.clique_weight,
            np.concatenate([self.node_loc, np.asarray(loc, float)]),
            np.concatenate([self.node_weight, np.asarray(weight, float)]),
            self.clique_eff,
            np.concatenate([self.node_eff, np.asarray(eff, float)]),
            self.window,
        )


class LatentTree:
    """Undirected tree over clique ids.  An empty tree (no vertices) is allowed."""

    __slots__ = ("vertices", "adj")

    def __init__(self, vertices: Iterable[int], edges: Iterable[tuple[int, int]] = ()):
        verts = frozenset(int(v) for v in vertices)
        adj: dict[int, set[int]] = {v: set() for v in verts}
        n_edges = 0
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise DomainError(f"self-loop at {a}")
            if a not in adj or b not in adj:
                raise DomainError(f"edge ({a},{b}) touches unknown vertex")
            if b in adj[a]:
                raise DomainError(f"parallel edge ({a},{b})")
            adj[a].add(b)
            adj[b].add(a)
            n_edges += 1
        if verts and n_edges != len(verts) - 1:
            raise DomainError(f"tree on {len(verts)} vertices needs {len(verts) - 1} edges, got {n_edges}")
        self.vertices = verts
        self.adj = {v: frozenset(s) for v, s in adj.items()}
        if verts and len(self._reach(next(iter(verts)))) != len(verts):
            raise DomainError("tree is not connected")

    def _reach(self, root: int) -> set[int]:
        seen = {root}
        stack = [root]
        while stack:
            u = stack.pop()
            for w in self.adj[u]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return seen

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return v in self.adj

    def __eq__(self, other) -> bool:
        return isinstance(other, LatentTree) and self.adj == other.adj

    def __repr__(self) -> str:
        return f"LatentTree(n={len(self.vertices)}, edges={self.edges()})"

    def _check(self, v: int):
        if v not in self.adj:
            raise DomainError(f"unknown clique id {v}")

    def neighbors(self, v: int) -> frozenset[int]:
        self._check(v)
        return self.adj[v]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a in self.adj for b in self.adj[a] if a < b)

    def has_edge(self, a: int, b: int) -> bool:
        return a in self.adj and b in self.adj[a]

    def distances(self, root: int) -> dict[int, int]:
        self._check(root)
        dist = {root: 0}
        q = deque([root])
        while q:
            u = q.popleft()
            for w in self.adj[u]:
                if w not in dist:
                    dist[w] = dist[u] + 1
                    q.append(w)
        return dist

    def bfs_parents(self, root: int) -> tuple[list[int], dict[int, int]]:
        """BFS order from ``root`` and the parent map (root maps to -1)."""
        self._check(root)
        parent = {root: -1}
        order = [root]
        q = deque([root])
        while q:
            u = q.popleft()
            for w in sorted(self.adj[u]):
                if w not in parent:
                    parent[w] = u
                    order.append(w)
                    q.append(w)
        return order, parent

    def side_of(self, k: int, s: int) -> set[int]:
        """Vertices on the ``s`` side once edge (k, s) is removed."""
        if not self.has_edge(k, s):
            raise DomainError(f"({k},{s}) is not a tree edge")
        seen = {s}
        stack = [s]
        while stack:
            u = stack.pop()
            for w in self.adj[u]:
                if w not in seen and not (u == s and w == k):
                    seen.add(w)
                    stack.append(w)
        return seen

    def rewired(self, k: int, s: int, m: int) -> "LatentTree":
        """Replace edge (k, s) by (k, m)."""
        if not self.has_edge(k, s):
            raise DomainError(f"({k},{s}) is not a tree edge")
        if m == s:
            return self
        edges = [e for e in self.edges() if e != (min(k, s), max(k, s))]
        edges.append((k, m))
        return LatentTree(self.vertices, edges)

    def leaves(self) -> list[int]:
        return sorted(v for v, nb in self.adj.items() if len(nb) <= 1)


class BipartiteState:
    """Membership relation between clique ids (rows) and node ids (columns).

    Readers treat instances as values.  Samplers mutate their own copy through
    :meth:`connect` / :meth:`disconnect`, which keep both indices in sync.
    """

    __slots__ = ("rows", "cols")

    def __init__(self, clique_ids: Iterable[int] = (), node_ids: Iterable[int] = (),
                 edges: Iterable[tuple[int, int]] = ()):
        self.rows: dict[int, set[int]] = {int(k): set() for k in clique_ids}
        self.cols: dict[int, set[int]] = {int(i): set() for i in node_ids}
        for k, i in edges:
            self.connect(int(k), int(i))

    @classmethod
    def from_rows(cls, rows: dict[int, Iterable[int]], node_ids: Iterable[int] | None = None) -> "BipartiteState":
        members = set().union(*[set(r) for r in rows.values()]) if rows else set()
        nodes = members if node_ids is None else set(node_ids) | members
        return cls(rows.keys(), nodes, [(k, i) for k, r in rows.items() for i in r])

    @property
    def clique_ids(self) -> frozenset[int]:
        return frozenset(self.rows)

    @property
    def node_ids(self) -> frozenset[int]:
        return frozenset(self.cols)

    def connect(self, k: int, i: int) -> None:
        if k not in self.rows:
            raise DomainError(f"unknown clique id {k}")
        if i not in self.cols:
            raise DomainError(f"unknown node id {i}")
        self.rows[k].add(i)
        self.cols[i].add(k)

    def disconnect(self, k: int, i: int) -> None:
        if k not in self.rows:
            raise DomainError(f"unknown clique id {k}")
        if i not in self.cols:
            raise DomainError(f"unknown node id {i}")
        self.rows[k].discard(i)
        self.cols[i].discard(k)

    def add_nodes(self, ids: Iterable[int]) -> None:
        for i in ids:
            if i in self.cols:
                raise DomainError(f"node id {i} already present")
            self.cols[int(i)] = set()

    def has(self, k: int, i: int) -> bool:
        return i in self.rows.get(k, ())

    def row(self, k: int) -> frozenset[int]:
        if k not in self.rows:
            raise DomainError(f"unknown clique id {k}")
        return frozenset(self.rows[k])

    def col(self, i: int) -> frozenset[int]:
        if i not in self.cols:
            raise DomainError(f"unknown node id {i}")
        return frozenset(self.cols[i])

    def edges(self) -> list[tuple[int, int]]:
        return sorted((k, i) for k, r in self.rows.items() for i in r)

    def n_edges(self) -> int:
        return sum(len(r) for r in self.rows.values())

    def copy(self) -> "BipartiteState":
        new = BipartiteState.__new__(BipartiteState)
        new.rows = {k: set(r) for k, r in self.rows.items()}
        new.cols = {i: set(c) for i, c in self.cols.items()}
        return new

    def restrict_cliques(self, keep: Iterable[int]) -> "BipartiteState":
        keep = set(keep)
        return BipartiteState(keep, self.cols.keys(), [(k, i) for k, i in self.edges() if k in keep])

    def matrix(self) -> np.ndarray:
        """Dense biadjacency over sorted clique ids x sorted node ids."""
        ks = sorted(self.rows)
        ns = sorted(self.cols)
        pos = {i: j for j, i in enumerate(ns)}
        out = np.zeros((len(ks), len(ns)), dtype=np.int8)
        for a, k in enumerate(ks):
            for i in self.rows[k]:
                out[a, pos[i]] = 1
        return out

    def check_index(self) -> None:
        """Raise if the row and column indices are not transposes of each other."""
        from_rows = {(k, i) for k, r in self.rows.items() for i in r}
        from_cols = {(k, i) for i, c in self.cols.items() for k in c}
        if from_rows != from_cols:
            raise AssertionError("row/column indices out of sync")
        if any(i not in self.cols for _, i in from_rows) or any(k not in self.rows for k, _ in from_cols):
            raise AssertionError("index refers to an unknown id")

    def __eq__(self, other) -> bool:
        return isinstance(other, BipartiteState) and self.rows == other.rows and self.cols == other.cols

    def __repr__(self) -> str:
        return f"BipartiteState(cliques={len(self.rows)}, nodes={len(self.cols)}, edges={self.n_edges()})"


class DecomposableGraph:
    """Simple undirected graph on node ids (the projection of a bipartite state)."""

    __slots__ = ("vertices", "adj")

    def __init__(self, vertices: Iterable[int], edges: Iterable[tuple[int, int]] = ()):
        self.vertices = frozenset(int(v) for v in vertices)
        adj: dict[int, set[int]] = {v: set() for v in self.vertices}
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise DomainError(f"self-loop at {a}")
            if a not in adj or b not in adj:
                raise DomainError(f"edge ({a},{b}) touches unknown vertex")
            adj[a].add(b)
            adj[b].add(a)
        self.adj = {v: frozenset(s) for v, s in adj.items()}

    def neighbors(self, v: int) -> frozenset[int]:
        if v not in self.adj:
            raise DomainError(f"unknown vertex {v}")
        return self.adj[v]

    def edges(self) -> list[tuple[int, int]]:
        return sorted((a, b) for a in self.adj for b in self.adj[a] if a < b)

    def n_edges(self) -> int:
        return sum(len(s) for s in self.adj.values()) // 2

    def __len__(self) -> int:
        return len(self.vertices)

    def __eq__(self, other) -> bool:
        return isinstance(other, DecomposableGraph) and self.adj == other.adj

    def __repr__(self) -> str:
        return f"DecomposableGraph(n={len(self.vertices)}, m={self.n_edges()})"


def neighbors_of(g, v: int, side: str | None = None) -> frozenset[int]:
    """Adjacent vertices of ``v``.

    For a :class:`BipartiteState` pass ``side="clique"`` (members of row ``v``)
    or ``side="node"`` (cliques containing node ``v``).
    """
    if isinstance(g, BipartiteState):
        if side == "clique":
            return g.row(v)
        if side == "node":
            return g.col(v)
        raise DomainError("side must be 'clique' or 'node' for a bipartite state")
    return g.neighbors(v)


def degree_of(g, v: int, side: str | None = None) -> int:
    return len(neighbors_of(g, v, side))


def vertex_partition(z: BipartiteState) -> tuple[frozenset[int], frozenset[int]]:
    """Active node ids and active clique ids (those with at least one edge)."""
    nodes = frozenset(i for i, c in z.cols.items() if c)
    cliques = frozenset(k for k, r in z.rows.items() if r)
    return nodes, cliques


def iter_rows(z: BipartiteState) -> Iterator[tuple[int, frozenset[int]]]:
    for k in sorted(z.rows):
        yield k, frozenset(z.rows[k])
