import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chordal_forge.core import LatentTree
from chordal_forge.errors import DivergenceError, DomainError
from chordal_forge.kernels import Kernel
from chordal_forge.analytics import (
    GammaProfile, bipartite_degree_rate, dregular_levels, dregular_node_count, dregular_tree,
    expected_cd_dregular_any, expected_cd_dregular_level, expected_cd_path, expected_cd_path_series,
    expected_cliquedegree_series, gamma_profile, mc_cliquedegree, mc_cliquedegree_uniform,
    palm_degree_sample, path_tree, table2_gamma_level,
)


def _level_vertex(t, level):
    dist = t.distances(0)
    return min(v for v, d in dist.items() if d == level)


def dregular_any_worked(L, z):
    if L == 2:
        return z / 5 * (12 * z**4 + 12 * z**3 + 12 * z**2 + 9 * z + 5)
    return z / 11 * (48 * z**6 + 48 * z**5 + 48 * z**4 + 36 * z**3 + 30 * z**2 + 21 * z + 11)


def path_any_worked(L, z):
    if L == 2:
        return z / 5 * (2 * z**3 + 6 * z**2 + 10 * z + 7)
    return z / 7 * (2 * z**5 + 4 * z**4 + 8 * z**3 + 12 * z**2 + 14 * z + 9)


def test_gamma_profiles():
    assert gamma_profile(dregular_tree(3, 2), 0).counts == (1, 3, 6)
    assert gamma_profile(LatentTree([0]), 0).counts == (1,)
    assert gamma_profile(path_tree(2), 2).counts == (1, 2, 2)
    with pytest.raises(DomainError):
        gamma_profile(path_tree(1), 9)


def test_node_counts():
    assert dregular_node_count(3, 2) == 10
    assert dregular_node_count(5, 0) == 1
    assert dregular_node_count(4, 3) == 53
    for d in (3, 4, 5):
        for L in range(5):
            assert dregular_node_count(d, L) == len(dregular_tree(d, L)) == sum(dregular_levels(d, L))


def test_series_examples():
    prof = GammaProfile(0, (1, 3, 6))
    assert expected_cliquedegree_series(prof, 0.0) == 0.0
    assert expected_cliquedegree_series(prof, 1.0) == 10.0
    assert expected_cliquedegree_series(prof, 0.5) == 2.0
    with pytest.raises(DomainError):
        expected_cliquedegree_series(prof, -0.1)
    with pytest.warns(UserWarning):
        expected_cliquedegree_series(prof, 1.5)


def test_table2_rows():
    assert table2_gamma_level(3, 3, 0).counts == (1, 3, 6, 12)
    assert table2_gamma_level(4, 2, 0).counts == (1, 4, 12)
    for d, L in ((3, 2), (4, 3)):
        assert table2_gamma_level(d, L, L).counts[1] == 1


@pytest.mark.parametrize("d", [3, 4])
@pytest.mark.parametrize("L", [0, 1, 2, 3, 4])
def test_table2_matches_bfs(d, L):
    t = dregular_tree(d, L)
    n = len(t)
    for level in range(L + 1):
        prof = table2_gamma_level(d, L, level)
        assert prof.counts == gamma_profile(t, _level_vertex(t, level)).counts
        assert sum(prof.counts) == n


def test_level_closed_form_examples():
    assert expected_cd_dregular_level(3, 2, 0, 1.0) == pytest.approx(10, abs=1e-12)
    assert expected_cd_dregular_level(3, 2, 1, 0.0) == 0.0
    z = 0.37
    assert expected_cd_dregular_level(3, 2, 0, z) == pytest.approx(z + z * z * 3 * (2**2 * z**2 - 1) / (2 * z - 1))


@settings(max_examples=200)
@given(st.sampled_from([3, 4, 5]), st.integers(0, 5), st.data(), st.floats(0, 1))
def test_level_closed_form_equals_series(d, L, data, zeta):
    level = data.draw(st.integers(0, L))
    series = expected_cliquedegree_series(table2_gamma_level(d, L, level), zeta)
    assert abs(expected_cd_dregular_level(d, L, level, zeta) - series) <= 1e-9 * max(1.0, series)


def test_singular_points_are_finite_and_continuous():
    for d in (3, 4):
        for L in (1, 2, 3):
            for zeta in (1 / (d - 1), 1 / math.sqrt(d - 1)):
                for eps in (0.0, 1e-7, -1e-7, 5e-4, -5e-4, 2e-3):
                    z = zeta + eps
                    ref = sum(w * expected_cliquedegree_series(table2_gamma_level(d, L, l), z)
                              for l, w in enumerate(dregular_levels(d, L))) / dregular_node_count(d, L)
                    assert expected_cd_dregular_any(d, L, z) == pytest.approx(ref, rel=1e-9, abs=1e-12)
                    for l in range(L + 1):
                        s = expected_cliquedegree_series(table2_gamma_level(d, L, l), z)
                        assert expected_cd_dregular_level(d, L, l, z) == pytest.approx(s, rel=1e-9)


def test_worked_polynomials():
    for z in np.linspace(0.01, 0.99, 99):
        assert abs(expected_cd_dregular_any(3, 2, z) - dregular_any_worked(2, z)) < 1e-9
        assert abs(expected_cd_dregular_any(3, 3, z) - dregular_any_worked(3, z)) < 1e-9
        assert abs(expected_cd_path(2, None, z) - path_any_worked(2, z)) < 1e-9
        assert abs(expected_cd_path(3, None, z) - path_any_worked(3, z)) < 1e-9


@pytest.mark.parametrize("d,L", [(3, 1), (3, 2), (3, 4), (4, 2), (4, 4)])
def test_level_average_identity(d, L):
    w = dregular_levels(d, L)
    n = dregular_node_count(d, L)
    for z in np.linspace(0.05, 0.95, 19):
        avg = sum(w[l] / n * expected_cd_dregular_level(d, L, l, z) for l in range(L + 1))
        assert abs(avg - expected_cd_dregular_any(d, L, z)) < 1e-9


def test_zeta_one_degeneracy():
    for d in (3, 4):
        for L in range(5):
            n = dregular_node_count(d, L)
            assert expected_cd_dregular_any(d, L, 1.0) == pytest.approx(n, abs=1e-9)
            for l in range(L + 1):
                assert expected_cd_dregular_level(d, L, l, 1.0) == pytest.approx(n, abs=1e-9)
    for L in range(6):
        assert expected_cd_path(L, None, 1.0) == pytest.approx(2 * L + 1, abs=1e-9)
        for l in range(L + 1):
            assert expected_cd_path(L, l, 1.0) == pytest.approx(2 * L + 1, abs=1e-9)
    assert expected_cd_path(2, None, 1.0) == 5.0


def test_path_centre_start_matches_series():
    for L in range(6):
        for z in np.linspace(0, 0.99, 12):
            assert expected_cd_path(L, 0, z) == pytest.approx(expected_cd_path_series(L, 0, z), abs=1e-12)


def test_path_series_is_exact_bfs():
    t = path_tree(3)
    for lvl in range(4):
        prof = gamma_profile(t, 3 + lvl)
        assert expected_cd_path_series(3, lvl, 0.4) == expected_cliquedegree_series(prof, 0.4)


def test_monte_carlo_degenerate_cases(rng):
    t = dregular_tree(3, 2)
    assert mc_cliquedegree(t, 1.0, 0, 100, rng) == (10.0, 0.0)
    assert mc_cliquedegree(t, 0.0, 4, 100, rng) == (0.0, 0.0)
    with pytest.raises(DomainError):
        mc_cliquedegree(t, 0.5, 0, 0, rng)


def test_monte_carlo_root_start(rng):
    t = dregular_tree(3, 2)
    mean, se = mc_cliquedegree(t, 0.5, 0, 100_000, rng)
    assert abs(mean - expected_cd_dregular_level(3, 2, 0, 0.5)) < 3 * se
    mean, se = mc_cliquedegree_uniform(t, 0.5, 100_000, rng)
    assert abs(mean - expected_cd_dregular_any(3, 2, 0.5)) < 4 * se


def test_degree_rate():
    k = Kernel.exp_tail(1.0)
    assert bipartite_degree_rate(k, 2.0, 0.0) == pytest.approx(2.0)
    assert bipartite_degree_rate(k, 0.0, 0.3) == 0.0
    with pytest.raises(DivergenceError):
        bipartite_degree_rate(Kernel.constant(0.5), 1.0, 0.0)


def test_palm_degree_is_poisson(rng):
    k = Kernel.exp_tail(1.0)
    rate = bipartite_degree_rate(k, 2.0, 0.5)
    deg = palm_degree_sample(k, 2.0, 0.5, 10_000, rng)
    assert abs(deg.mean() - rate) < 4 * math.sqrt(rate / 10_000)
    assert abs(deg.var() - rate) < 0.1
