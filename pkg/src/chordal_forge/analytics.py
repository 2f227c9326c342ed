"""Expected clique-degree of a node: series over BFS layer sizes, closed forms for
d-regular and path trees, a Monte-Carlo estimator, and the node degree law.

Throughout, ``zeta`` is the per-clique connection rate r' * W1(vartheta) of a
node; the expected number of cliques a node joins, started from a clique, is
sum_k Gamma_k zeta^(k+1) with Gamma_k the number of cliques at tree distance k.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import LatentTree
from .errors import DomainError
from .kernels import Kernel
from .samplers import dregular_edges

SINGULAR_TOL = 1e-3  # below this distance from a pole, use the pole-free form


@dataclass(frozen=True)
class GammaProfile:
    root: int
    counts: tuple[int, ...]

    @property
    def n_vertices(self) -> int:
        return sum(self.counts)


def gamma_profile(t: LatentTree, root: int) -> GammaProfile:
    dist = t.distances(root)        # raises DomainError for an unknown root
    counts = [0] * (max(dist.values()) + 1)
    for d in dist.values():
        counts[d] += 1
    return GammaProfile(root, tuple(counts))


def dregular_node_count(d: int, L: int) -> int:
    if d < 3 or L < 0:
        raise DomainError("need d >= 3 and L >= 0")
    return (d * (d - 1) ** L - 2) // (d - 2)


def dregular_tree(d: int, L: int) -> LatentTree:
    n, edges = dregular_edges(d, L)
    return LatentTree(range(n), edges)


def path_tree(L: int) -> LatentTree:
    n = 2 * L + 1
    return LatentTree(range(n), [(j, j + 1) for j in range(n - 1)])


def dregular_levels(d: int, L: int) -> list[int]:
    """Number of vertices on each level 0..L of the d-regular tree."""
    return [1] + [d * (d - 1) ** (l - 1) for l in range(1, L + 1)]


def _flag_zeta(zeta: float) -> None:
    if zeta < 0:
        raise DomainError("zeta must be nonnegative")
    if zeta > 1:
        warnings.warn(f"zeta={zeta} exceeds 1; treated as a formal polynomial argument", stacklevel=3)


def expected_cliquedegree_series(profile: GammaProfile, zeta: float) -> float:
    _flag_zeta(zeta)
    return float(sum(c * zeta ** (k + 1) for k, c in enumerate(profile.counts)))


def _geom(x: float, n: int) -> float:
    """1 + x + ... + x^(n-1), summed directly near x = 1."""
    if n <= 0:
        return 0.0
    if abs(x - 1.0) < SINGULAR_TOL:
        return float(sum(x ** j for j in range(n)))
    return (x ** n - 1.0) / (x - 1.0)


def table2_gamma_level(d: int, L: int, level: int) -> GammaProfile:
    """Layer sizes seen from a vertex on ``level`` of the d-regular tree.

    Away from the root (k <= L - level) the layers grow as d (d-1)^(k-1).
    Past the root the walk climbs j = 1..level steps and then descends, adding
    (d-1)^(L-j) vertices at distance L + level - 2j + 1 (j >= 1) and at
    distance L + level - 2j (j < level).
    """
    if d < 3 or not 0 <= level <= L:
        raise DomainError("need d >= 3 and 0 <= level <= L")
    dd = d - 1
    counts = [0] * (L + level + 1)
    counts[0] = 1
    for k in range(1, L - level + 1):
        counts[k] += d * dd ** (k - 1)
    for j in range(0, level + 1):
        if j >= 1:
            counts[L + level - 2 * j + 1] += dd ** (L - j)
        if j < level:
            counts[L + level - 2 * j] += dd ** (L - j)
    while len(counts) > 1 and counts[-1] == 0:
        counts.pop()
    prof = GammaProfile(level, tuple(counts))
    assert prof.n_vertices == dregular_node_count(d, L)
    return prof


def expected_cd_dregular_level(d: int, L: int, level: int, zeta: float) -> float:
    """Closed-form expected clique degree when starting on ``level``.

    zeta + zeta^2 d G(x, L-l) + zeta^2 x^(L-l) (x + 1) G(y, l) with x = (d-1) zeta,
    y = (d-1) zeta^2 and G(q, n) = 1 + q + ... + q^(n-1).
    """
    if d < 3 or not 0 <= level <= L:
        raise DomainError("need d >= 3 and 0 <= level <= L")
    _flag_zeta(zeta)
    z = float(zeta)
    dd = d - 1
    x = dd * z
    return (z + z * z * d * _geom(x, L - level)
            + z * z * x ** (L - level) * (x + 1.0) * _geom(dd * z * z, level))


def expected_cd_dregular_any(d: int, L: int, zeta: float) -> float:
    """Closed-form expected clique degree from a uniformly chosen start clique.

    Close to the removable singularities (d-1) zeta = 1 and (d-1) zeta^2 = 1
    the level-weighted average of :func:`expected_cd_dregular_level` is used.
    """
    if d < 3 or L < 0:
        raise DomainError("need d >= 3 and L >= 0")
    _flag_zeta(zeta)
    z = float(zeta)
    dd = d - 1
    x = dd * z
    y = dd * z * z
    if abs(x - 1.0) < SINGULAR_TOL or abs(y - 1.0) < SINGULAR_TOL:
        return _level_average_dregular(d, L, z)
    xL = x ** L
    bracket = (z
               + d * z * z * (xL - 1.0) / (x - 1.0)
               - z * d * (z + 1.0) / (x - 1.0) * (dd ** L - 1) / (dd - 1)
               + z * z * d * dd ** L * (z ** L - 1.0) / (y - 1.0) * (z + 1.0) / (x - 1.0)
               + z ** 3 * d * xL * (x + 1.0) / (y - 1.0) * (xL - 1.0) / (x - 1.0))
    return (d - 2) / (d * dd ** L - 2) * bracket


def _level_average_dregular(d: int, L: int, zeta: float) -> float:
    w = dregular_levels(d, L)
    return sum(w[l] * expected_cd_dregular_level(d, L, l, zeta) for l in range(L + 1)) / sum(w)


def expected_cd_path(L: int, level: int | None, zeta: float) -> float:
    """Closed-form expected clique degree on the path tree with 2L + 1 cliques.

    ``level`` is the distance of the start clique from the centre; ``None``
    averages over a uniformly chosen start.  These closed forms reproduce the
    standard worked polynomials, e.g. zeta/5 (2 zeta^3 + 6 zeta^2 + 10 zeta + 7)
    for L = 2.  For starts away from the centre they are not the exact BFS
    series of the path (see :func:`expected_cd_path_series`): the last term
    carries one power of zeta fewer.  Both agree at the centre and at zeta = 1.
    """
    if L < 0:
        raise DomainError("need L >= 0")
    _flag_zeta(zeta)
    z = float(zeta)
    if level is None:
        if abs(z - 1.0) < SINGULAR_TOL:
            return sum(_path_level(L, abs(v - L), z) for v in range(2 * L + 1)) / (2 * L + 1)
        return z / (2 * L + 1) * (
            1.0 - 2 * L * (z + 1.0) / (z - 1.0)
            + 2.0 * (z ** (L + 1) + z * z + z - 1.0) * (z ** L - 1.0) / (z - 1.0) ** 2
        )
    if not 0 <= level <= L:
        raise DomainError("need 0 <= level <= L")
    return _path_level(L, level, z)


def _path_level(L: int, level: int, z: float) -> float:
    return z + 2.0 * z * z * _geom(z, L - level) + z ** (L - level + 1) * _geom(z, 2 * level)


def expected_cd_path_series(L: int, level: int | None, zeta: float) -> float:
    """Exact BFS-series expectation on the path tree (start ``level`` from the centre, or uniform)."""
    t = path_tree(L)
    if level is None:
        return sum(expected_cliquedegree_series(gamma_profile(t, v), zeta) for v in t.vertices) / len(t)
    return expected_cliquedegree_series(gamma_profile(t, L + level), zeta)


def mc_cliquedegree(t: LatentTree, zeta: float, start: int, reps: int, rng: np.random.Generator,
                    batch: int = 20000) -> tuple[float, float]:
    """Monte-Carlo clique degree: Bernoulli(zeta) marks per clique, counting cliques
    whose whole tree path from ``start`` (inclusive) is marked."""
    if reps < 1:
        raise DomainError("reps must be positive")
    if not 0 <= zeta <= 1:
        raise DomainError("Monte-Carlo needs zeta in [0, 1]")
    order, parent = t.bfs_parents(start)
    idx = {v: j for j, v in enumerate(order)}
    par = [idx[parent[v]] if parent[v] >= 0 else -1 for v in order]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < reps:
        b = min(batch, reps - done)
        marks = rng.random((len(order), b)) < zeta
        reach = np.empty_like(marks)
        reach[0] = marks[0]
        for j in range(1, len(order)):
            reach[j] = marks[j] & reach[par[j]]
        deg = reach.sum(axis=0, dtype=np.int64).astype(float)
        total += deg.sum()
        total_sq += (deg * deg).sum()
        done += b
    mean = total / reps
    var = max(total_sq / reps - mean * mean, 0.0) * reps / max(reps - 1, 1)
    return mean, math.sqrt(var / reps)


def mc_cliquedegree_uniform(t: LatentTree, zeta: float, reps: int, rng: np.random.Generator) -> tuple[float, float]:
    """Monte-Carlo clique degree from a uniformly chosen start clique."""
    if reps < 1:
        raise DomainError("reps must be positive")
    verts = sorted(t.vertices)
    per = rng.multinomial(reps, np.full(len(verts), 1.0 / len(verts)))
    total = total_sq = 0.0
    for v, n in zip(verts, per):
        if n == 0:
            continue
        mean, se = mc_cliquedegree(t, zeta, v, int(n), rng)
        var = se * se * n
        total += mean * n
        total_sq += (var * (n - 1) + mean * mean * n) if n > 1 else mean * mean
    mean = total / reps
    var = max(total_sq / reps - mean * mean, 0.0) * reps / max(reps - 1, 1)
    return mean, math.sqrt(var / reps)


def zeta_from_kernel(kernel: Kernel, r_prime: float, vartheta: float, upper: float = math.inf) -> float:
    return bipartite_degree_rate(kernel, r_prime, vartheta, upper)


def bipartite_degree_rate(kernel: Kernel, r_prime: float, vartheta: float, upper: float = math.inf) -> float:
    """Poisson rate r' * W1(vartheta) of the number of cliques joined by a node."""
    if r_prime < 0:
        raise DomainError("r' must be nonnegative")
    if r_prime == 0:
        return 0.0
    return r_prime * kernel.marginal(vartheta, upper)


def palm_degree_sample(kernel: Kernel, r_prime: float, vartheta: float, reps: int,
                       rng: np.random.Generator, weight_cap: float | None = None) -> np.ndarray:
    """Degrees of an inserted node of weight ``vartheta`` in independent draws of the
    unconditioned clique process on [0, r'] x [0, weight_cap].

    The default cap keeps the neglected kernel mass below 1e-12.
    """
    if weight_cap is None:
        weight_cap = _mass_cap(kernel, vartheta)
    counts = rng.poisson(r_prime * weight_cap, reps)
    w = rng.uniform(0.0, weight_cap, counts.sum())
    u = rng.random(counts.sum())
    hit = (u < kernel.evaluate(w, np.full_like(w, vartheta))).astype(np.int64)
    owner = np.repeat(np.arange(reps), counts)
    return np.bincount(owner, weights=hit, minlength=reps).astype(np.int64)


def _mass_cap(kernel: Kernel, vartheta: float) -> float:
    full = kernel.marginal(vartheta, math.inf)
    cap = 1.0
    while kernel.marginal(vartheta, cap) < full * (1 - 1e-12) and cap < 1e6:
        cap *= 2.0
    return cap
