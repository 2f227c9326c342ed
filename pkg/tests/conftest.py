import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from chordal_forge.core import BipartiteState, DecomposableGraph, LatentTree, PointSet
from chordal_forge.kernels import Kernel
from chordal_forge.samplers import ChainState, SamplerConfig, TreeSpec, markov_run
from chordal_forge.core import TruncationWindow

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# six-node example with four cliques: nodes A..F -> 0..5
A, B, C, D, E, F = range(6)
SIX_NODE_CLIQUES = [{A, B, C}, {B, C, E}, {B, E, F}, {C, D, E}]


def six_node_graph() -> DecomposableGraph:
    edges = set()
    for cl in SIX_NODE_CLIQUES:
        m = sorted(cl)
        edges.update((m[a], m[b]) for a in range(len(m)) for b in range(a + 1, len(m)))
    return DecomposableGraph(range(6), edges)


def six_node_state():
    """Rows ABC, BCE, BEF, CDE on the tree BCE - {ABC, BEF, CDE}."""
    z = BipartiteState.from_rows({k: c for k, c in enumerate(SIX_NODE_CLIQUES)})
    t = LatentTree(range(4), [(0, 1), (1, 2), (1, 3)])
    return z, t


def random_points(rng, n_cliques, n_nodes, c=2.0):
    return PointSet(np.sort(rng.uniform(0, 1, n_cliques)), rng.uniform(0, c, n_cliques),
                    np.sort(rng.uniform(0, 1, n_nodes)), rng.uniform(0, c, n_nodes))


def random_tree(rng, n):
    return LatentTree(range(n), [(int(rng.integers(0, j)), j) for j in range(1, n)])


def random_state(rng, n_cliques, n_nodes, steps=300, p=0.5, strictness="relaxed", tree=None):
    """A junction-tree-consistent state reached by the Markov chain (fixed tree)."""
    t = random_tree(rng, n_cliques) if tree is None else tree
    pts = random_points(rng, n_cliques, n_nodes)
    cfg = SamplerConfig(TruncationWindow(1, 2, 1, 2), Kernel.constant(p), TreeSpec("recursive", n=n_cliques),
                        strictness=strictness, steps=steps, tree_update="none")
    z0 = BipartiteState(range(n_cliques), range(n_nodes))
    st = markov_run(ChainState(z0, t, 0, pts), cfg, rng)
    return st.z, st.t, pts


def inject_nonmaximal(z, t, rng):
    """Copy a random nonempty subset of a neighbour's row into an empty row."""
    z = z.copy()
    empties = [k for k in sorted(z.rows) if not z.rows[k]]
    rng.shuffle(empties)
    for e in empties:
        full = [s for s in sorted(t.adj[e]) if z.rows[s]]
        if not full:
            continue
        s = full[int(rng.integers(len(full)))]
        members = sorted(z.rows[s])
        take = rng.random(len(members)) < 0.6
        if not take.any():
            take[int(rng.integers(len(members)))] = True
        for i, keep in zip(members, take):
            if keep:
                z.connect(e, i)
        return z, True
    return z, False


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------------------
# acceptance report: one line per criterion, printed at the end of the run

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_RESULTS[number] = (ok, detail)
    print(f"[acceptance {number}] {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} - {detail}")
