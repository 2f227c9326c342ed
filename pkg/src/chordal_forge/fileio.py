"""Plain-text serialisation of points, trees, bipartite states and graphs.

One record per line, whitespace separated, sorted by id::

    C <cliqueId> <location> <weight>
    N <nodeId> <location> <weight>
    E <cliqueId> <cliqueId>
    B <cliqueId> <nodeId>
    G <nodeId> <nodeId>

Floats are written with 17 significant digits so they round-trip exactly.
Lines starting with ``#`` are comments; the points file uses one to record
the sampling window.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import BipartiteState, DecomposableGraph, LatentTree, PointSet, TruncationWindow
from .errors import DomainError


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def _records(text: str, tag: str, arity: int) -> list[list[str]]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] not in tag:
            raise DomainError(f"line {lineno}: unexpected record type {parts[0]!r}")
        if len(parts) != arity + 1:
            raise DomainError(f"line {lineno}: expected {arity} fields after {parts[0]}")
        out.append(parts)
    return out


def _int(s: str) -> int:
    try:
        v = int(s)
    except ValueError as exc:
        raise DomainError(f"bad integer {s!r}") from exc
    if v < 0:
        raise DomainError(f"negative id {v}")
    return v


def _float(s: str) -> float:
    try:
        return float(s)
    except ValueError as exc:
        raise DomainError(f"bad number {s!r}") from exc


def dumps_points(points: PointSet) -> str:
    lines = []
    if points.window is not None:
        w = points.window
        lines.append(f"# window {fmt_float(w.r_prime)} {fmt_float(w.c_prime)} {fmt_float(w.r)} {fmt_float(w.c)}")
    for k in range(points.n_cliques):
        lines.append(f"C {k} {fmt_float(points.clique_loc[k])} {fmt_float(points.clique_weight[k])}")
    for i in range(points.n_nodes):
        lines.append(f"N {i} {fmt_float(points.node_loc[i])} {fmt_float(points.node_weight[i])}")
    return "\n".join(lines) + "\n" if lines else ""


def loads_points(text: str, kernel=None) -> PointSet:
    window = None
    for line in text.splitlines():
        if line.startswith("# window"):
            vals = [_float(x) for x in line.split()[2:]]
            if len(vals) != 4:
                raise DomainError("malformed window comment")
            window = TruncationWindow(*vals)
    cliques, nodes = {}, {}
    for tag, sid, loc, wt in _records(text, ("C", "N"), 3):
        target = cliques if tag == "C" else nodes
        k = _int(sid)
        if k in target:
            raise DomainError(f"duplicate {tag} id {k}")
        target[k] = (_float(loc), _float(wt))
    for name, d in (("clique", cliques), ("node", nodes)):
        if sorted(d) != list(range(len(d))):
            raise DomainError(f"{name} ids must be dense from 0")
    cl = np.array([cliques[k] for k in range(len(cliques))], float).reshape(-1, 2)
    nd = np.array([nodes[i] for i in range(len(nodes))], float).reshape(-1, 2)
    pts = PointSet(cl[:, 0], cl[:, 1], nd[:, 0], nd[:, 1], window=window)
    if kernel is not None:
        pts = kernel.attach_effective_weights(pts)
    return pts


def dumps_tree(t: LatentTree) -> str:
    return "".join(f"E {a} {b}\n" for a, b in t.edges())


def loads_tree(text: str, vertices=None) -> LatentTree:
    edges = [(_int(a), _int(b)) for _, a, b in _records(text, ("E",), 2)]
    verts = set(vertices or ())
    for a, b in edges:
        verts.update((a, b))
    return LatentTree(verts, [(min(a, b), max(a, b)) for a, b in edges])


def dumps_bipartite(z: BipartiteState) -> str:
    return "".join(f"B {k} {i}\n" for k, i in z.edges())


def loads_bipartite(text: str, clique_ids=None, node_ids=None) -> BipartiteState:
    edges = [(_int(k), _int(i)) for _, k, i in _records(text, ("B",), 2)]
    ks = set(clique_ids or ()) | {k for k, _ in edges}
    ns = set(node_ids or ()) | {i for _, i in edges}
    return BipartiteState(ks, ns, edges)


def dumps_graph(g: DecomposableGraph) -> str:
    return "".join(f"G {a} {b}\n" for a, b in g.edges())


def loads_graph(text: str) -> DecomposableGraph:
    edges = [(_int(a), _int(b)) for _, a, b in _records(text, ("G",), 2)]
    verts = {v for e in edges for v in e}
    return DecomposableGraph(verts, edges)


def read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc}") from exc
