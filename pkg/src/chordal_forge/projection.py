"""Projection of a bipartite state onto its node graph, and maximality repair."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import count
from typing import Iterable, Iterator

from .core import BipartiteState, DecomposableGraph, LatentTree
from .errors import DomainError


@dataclass
class ProjectionReport:
    graph: DecomposableGraph
    a0_before: frozenset[int]
    a0_set: frozenset[int]
    added_nodes: list[tuple[int, int]] = field(default_factory=list)  # (fresh node id, clique id)
    state: BipartiteState | None = None


def project(z: BipartiteState) -> DecomposableGraph:
    """Nodes sharing a row become adjacent; only active nodes are kept."""
    verts = [i for i, c in z.cols.items() if c]
    edges = set()
    for r in z.rows.values():
        members = sorted(r)
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                edges.add((members[a], members[b]))
    return DecomposableGraph(verts, edges)


def a0_violations(z: BipartiteState) -> frozenset[int]:
    """Active cliques whose row is contained in some other clique's row (equal rows included)."""
    rows = [(k, frozenset(r)) for k, r in z.rows.items()]
    bad = set()
    for k, rk in rows:
        if not rk:
            continue
        for s, rs in rows:
            if s != k and len(rs) >= len(rk) and rk <= rs:
                bad.add(k)
                break
    return frozenset(bad)


def _fresh_ids(z: BipartiteState, fresh_ids: Iterable[int] | None) -> Iterator[int]:
    if fresh_ids is None:
        return count(max(z.cols, default=-1) + 1)
    return iter(fresh_ids)


def augment_identity(z: BipartiteState, fresh_ids: Iterable[int] | None = None) -> tuple[BipartiteState, list[tuple[int, int]]]:
    """Give every nonempty row its own fresh node."""
    out = z.copy()
    ids = _fresh_ids(z, fresh_ids)
    added = []
    for k in sorted(z.rows):
        if not z.rows[k]:
            continue
        i = next(ids)
        if i in out.cols:
            raise DomainError(f"fresh id {i} collides with an existing node")
        out.add_nodes([i])
        out.connect(k, i)
        added.append((i, k))
    return out, added


def edge_greedy_complete(z: BipartiteState, t: LatentTree | None = None,
                         fresh_ids: Iterable[int] | None = None) -> ProjectionReport:
    """Attach fresh single-membership nodes to violating cliques until no row is contained in another.

    The smallest violating clique id is served first and the violation set is
    rescanned after each addition, so a clique that stops violating (for
    example the twin of a duplicated row) gets nothing.
    """
    out = z.copy()
    ids = _fresh_ids(z, fresh_ids)
    before = a0_violations(out)
    added = []
    viol = before
    while viol:
        k = min(viol)
        i = next(ids)
        if i in out.cols:
            raise DomainError(f"fresh id {i} collides with an existing node")
        out.add_nodes([i])
        out.connect(k, i)
        added.append((i, k))
        viol = a0_violations(out)
    return ProjectionReport(project(out), before, viol, added, out)


def report_without_repair(z: BipartiteState) -> ProjectionReport:
    a0 = a0_violations(z)
    return ProjectionReport(project(z), a0, a0, [], z.copy())


def report_identity(z: BipartiteState, fresh_ids: Iterable[int] | None = None) -> ProjectionReport:
    before = a0_violations(z)
    out, added = augment_identity(z, fresh_ids)
    return ProjectionReport(project(out), before, a0_violations(out), added, out)
