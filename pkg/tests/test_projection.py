import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chordal_forge.core import BipartiteState
from chordal_forge.errors import DomainError
from chordal_forge.oracle import chordal_bruteforce, is_chordal_mcs, maximal_cliques
from chordal_forge.projection import (
    a0_violations, augment_identity, edge_greedy_complete, project, report_identity,
)
from chordal_forge.treeops import verify_junction_property

from conftest import six_node_graph, six_node_state, inject_nonmaximal, random_state


def test_six_node_projection():
    z, _ = six_node_state()
    g = project(z)
    assert g.n_edges() == 9
    assert g.edges() == six_node_graph().edges()
    assert a0_violations(z) == frozenset()


def test_empty_state_projects_to_empty_graph():
    g = project(BipartiteState(range(3), range(4)))
    assert g.vertices == frozenset() and g.n_edges() == 0


def test_duplicate_rows_are_mutual_violations():
    z = BipartiteState.from_rows({0: {0, 1}, 1: {0, 1}, 2: {1, 2}})
    assert a0_violations(z) == {0, 1}
    rep = edge_greedy_complete(z)
    # clique 0 gets a fresh node, after which clique 1 is strictly inside it and needs one too
    assert rep.a0_before == {0, 1}
    assert rep.added_nodes == [(3, 0), (4, 1)]
    assert rep.a0_set == frozenset()


def test_subset_row_greedy_adds_once():
    z = BipartiteState.from_rows({0: {0, 1, 2}, 1: {1, 2}})
    rep = edge_greedy_complete(z)
    assert rep.added_nodes == [(3, 1)]
    assert rep.graph.n_edges() == 3 + 2


def test_identity_augmentation():
    z, _ = six_node_state()
    out, added = augment_identity(z)
    assert added == [(6, 0), (7, 1), (8, 2), (9, 3)]
    assert a0_violations(out) == frozenset()
    assert all(len(out.cols[i]) == 1 for i, _ in added)
    with pytest.raises(DomainError):
        augment_identity(z, fresh_ids=[5])


def test_custom_fresh_ids():
    z = BipartiteState.from_rows({0: {0}, 1: {0}})
    rep = edge_greedy_complete(z, fresh_ids=[100, 101])
    assert [i for i, _ in rep.added_nodes] == [100, 101]


@settings(max_examples=60)
@given(st.integers(0, 10 ** 6))
def test_repair_keeps_structure_and_is_monotone(seed):
    rng = np.random.default_rng(seed)
    z, t, _ = random_state(rng, int(rng.integers(1, 12)), int(rng.integers(1, 8)), steps=200)
    z, _ = inject_nonmaximal(z, t, rng)
    g0 = project(z)
    for rep in (edge_greedy_complete(z, t), report_identity(z)):
        assert rep.a0_set == frozenset()
        assert set(g0.edges()) <= set(rep.graph.edges())
        assert verify_junction_property(rep.state, t)[0]
        assert is_chordal_mcs(rep.graph)[0]
        rows = {frozenset(r) for r in rep.state.rows.values() if r}
        assert rows == maximal_cliques(rep.graph)
        assert len(rows) == sum(1 for r in rep.state.rows.values() if r)


@settings(max_examples=60)
@given(st.integers(0, 10 ** 6))
def test_projection_of_chain_states_is_chordal(seed):
    rng = np.random.default_rng(seed)
    z, t, _ = random_state(rng, int(rng.integers(1, 10)), int(rng.integers(1, 10)), steps=300)
    g = project(z)
    assert is_chordal_mcs(g)[0]
    if len(g.vertices) <= 12:
        assert chordal_bruteforce(g)
    # every row is a clique of the projected graph
    for r in z.rows.values():
        for a in r:
            assert r - {a} <= g.adj[a]
