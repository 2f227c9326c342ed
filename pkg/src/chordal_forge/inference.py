"""Likelihood structure and posterior inference for tree-dependent bipartite graphs."""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np
from scipy.special import gammaln

from .core import BipartiteState, LatentTree, PointSet
from .errors import DomainError
from .kernels import Kernel
from .treeops import RELAXED, derive_observed_jtree, maximal_row_ids, move_sets, verify_junction_property


# ---------------------------------------------------------------------------
# factorisation

@dataclass
class Factorization:
    numerator: list[frozenset[int]]
    denominator: list[frozenset[int]]
    cancelled: list[frozenset[int]] = field(default_factory=list)

    def numerator_set(self) -> set[frozenset[int]]:
        return set(self.numerator)

    def denominator_counts(self) -> Counter:
        return Counter(self.denominator)

    def evaluate(self, log_potential: Callable[[frozenset[int]], float]) -> float:
        """sum of log p(clique) - sum of log p(separator)."""
        return sum(log_potential(c) for c in self.numerator) - sum(log_potential(s) for s in self.denominator)


def _sorted_sets(sets: Iterable[frozenset[int]]) -> list[frozenset[int]]:
    return sorted(sets, key=lambda s: (len(s), sorted(s)))


def factorize(z: BipartiteState, t: LatentTree) -> Factorization:
    """Symbolic likelihood factors: clique rows over tree-edge intersections.

    Empty sets are dropped.  Each non-maximal (or duplicated) row s is then
    cancelled against the intersection on the tree edge joining it to an
    adjacent row that contains it; this intersection equals s.  The other
    edges of s are handed to the containing clique, which leaves their
    intersections unchanged because every path through s carries only
    members of s.  What remains are the maximal cliques over the separators.
    """
    ok, _ = verify_junction_property(z, t)
    if not ok:
        raise DomainError("junction property does not hold")
    rows = {k: frozenset(r) for k, r in z.rows.items()}
    adj = {v: set(nb) for v, nb in t.adj.items()}
    keep = set(maximal_row_ids(z))
    cancelled = []
    pending = set(adj) - keep
    while pending:
        for s in sorted(pending):
            cands = [m for m in adj[s] if rows[s] <= rows[m]]
            if cands:
                break
            if not adj[s] and not rows[s]:
                break   # last empty row of an all-empty state
        else:
            raise DomainError("reduction stalled")
        if not cands:
            del adj[s]
            pending.discard(s)
            continue
        m = min(cands, key=lambda c: (c not in keep, c))
        # numerator row s cancels the separator rows[s] & rows[m] == rows[s]
        if rows[s]:
            cancelled.append(rows[s])
        for x in adj[s]:
            adj[x].discard(s)
            if x != m:
                adj[x].add(m)
                adj[m].add(x)
        del adj[s]
        pending.discard(s)
    numerator = _sorted_sets(rows[k] for k in keep)
    edges = {(min(a, b), max(a, b)) for a in adj for b in adj[a]}
    denominator = _sorted_sets(rows[a] & rows[b] for a, b in edges if rows[a] & rows[b])
    return Factorization(numerator, denominator, cancelled)


def unreduced_factors(z: BipartiteState, t: LatentTree) -> tuple[list[frozenset[int]], list[frozenset[int]]]:
    """Rows and tree-edge intersections before any cancellation (empty sets dropped)."""
    num = _sorted_sets(frozenset(r) for r in z.rows.values() if r)
    den = _sorted_sets(frozenset(z.rows[a] & z.rows[b]) for a, b in t.edges() if z.rows[a] & z.rows[b])
    return num, den


# ---------------------------------------------------------------------------
# joint densities

@dataclass(frozen=True)
class NeiIndicator:
    clique_ids: tuple[int, ...]
    node_ids: tuple[int, ...]
    matrix: np.ndarray   # int8, clique x node

    def __getitem__(self, key: tuple[int, int]) -> int:
        k, i = key
        return int(self.matrix[self.clique_ids.index(k), self.node_ids.index(i)])


def delta_nei(z: BipartiteState, t: LatentTree, strictness: str = RELAXED) -> NeiIndicator:
    ks = tuple(sorted(z.rows))
    ns = tuple(sorted(z.cols))
    kpos = {k: a for a, k in enumerate(ks)}
    mat = np.zeros((len(ks), len(ns)), dtype=np.int8)
    for b, i in enumerate(ns):
        for k in move_sets(z, t, i, strictness).neighbour:
            mat[kpos[k], b] = 1
    return NeiIndicator(ks, ns, mat)


def _weight_matrix(kernel: Kernel, points: PointSet, z: BipartiteState) -> np.ndarray:
    if points.n_cliques != len(z.rows) or points.n_nodes != len(z.cols):
        raise DomainError("point set does not match the bipartite state")
    return kernel.matrix(points)


def _xlogy(mask: np.ndarray, p: np.ndarray) -> float:
    """sum over mask of log p, with -inf when some masked p is zero."""
    sel = p[mask.astype(bool)]
    if np.any(sel <= 0):
        return -math.inf
    return float(np.log(sel).sum())


def log_joint(z: BipartiteState, t: LatentTree, kernel: Kernel, points: PointSet,
              strictness: str = RELAXED, exclude_nodes: Iterable[int] = ()) -> float:
    """sum z log W + (1 - z) delta log(1 - W) over clique/node pairs."""
    W = _weight_matrix(kernel, points, z)
    Z = z.matrix().astype(bool)
    D = delta_nei(z, t, strictness).matrix.astype(bool)
    keep = np.ones(Z.shape[1], dtype=bool)
    for i in exclude_nodes:
        keep[sorted(z.cols).index(i)] = False
    Z, D, W = Z[:, keep], D[:, keep], W[:, keep]
    return _xlogy(Z, W) + _xlogy(D & ~Z, 1.0 - W)


def jtree_logratio(z: BipartiteState, t1: LatentTree, t2: LatentTree, kernel: Kernel, points: PointSet,
                   strictness: str = RELAXED) -> float:
    """Log-likelihood ratio of two junction trees for the same bipartite state."""
    for t in (t1, t2):
        ok, _ = verify_junction_property(z, t)
        if not ok:
            raise DomainError("tree is not a junction tree of the state")
    W = _weight_matrix(kernel, points, z)
    Z = z.matrix().astype(bool)
    d1 = delta_nei(z, t1, strictness).matrix.astype(int)
    d2 = delta_nei(z, t2, strictness).matrix.astype(int)
    diff = (d1 - d2) * (~Z)
    if not diff.any():
        return 0.0
    with np.errstate(divide="ignore"):
        logq = np.log1p(-W)
    pos = diff > 0
    neg = diff < 0
    a = logq[pos].sum() if pos.any() else 0.0
    b = logq[neg].sum() if neg.any() else 0.0
    if math.isinf(a) and math.isinf(b):
        return math.nan
    return float(a - b)


# ---------------------------------------------------------------------------
# observed structure

def observed_structure(z: BipartiteState, t: LatentTree) -> tuple[BipartiteState, LatentTree, dict[int, int]]:
    """Keep one clique per maximal row, relabelled 0..m-1, with the derived tree.

    Returns the reduced state, its tree and the map new id -> original id.
    """
    tobs = derive_observed_jtree(z, t)
    old = sorted(tobs.vertices)
    relabel = {k: j for j, k in enumerate(old)}
    zs = BipartiteState(range(len(old)), z.cols.keys(),
                        [(relabel[k], i) for k, i in z.edges() if k in relabel])
    ts = LatentTree(range(len(old)), [(relabel[a], relabel[b]) for a, b in tobs.edges()])
    return zs, ts, {j: k for k, j in relabel.items()}


# ---------------------------------------------------------------------------
# single-marginal Beta model

@dataclass(frozen=True)
class BetaPosterior:
    node_ids: tuple[int, ...]
    shape1: np.ndarray
    shape2: np.ndarray
    alpha: float

    def log_marginal(self) -> float:
        """log of alpha^N prod Gamma(alpha + m) Gamma(m_delta + 1) / Gamma(alpha + m + m_delta + 1)."""
        m = self.shape1 - self.alpha
        md = self.shape2 - 1.0
        return float(len(self.node_ids) * math.log(self.alpha)
                     + np.sum(gammaln(self.alpha + m) + gammaln(md + 1) - gammaln(self.alpha + m + md + 1)))

    def mean(self) -> np.ndarray:
        return self.shape1 / (self.shape1 + self.shape2)

    def var(self) -> np.ndarray:
        a, b = self.shape1, self.shape2
        return a * b / ((a + b) ** 2 * (a + b + 1))


def beta_posterior(z: BipartiteState, t_obs: LatentTree, alpha: float,
                   strictness: str = RELAXED, exclude_nodes: Iterable[int] = ()) -> BetaPosterior:
    """Conjugate update for W(x, y) = f(y) with a Beta(alpha, 1) prior on each f_i."""
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    ok, _ = verify_junction_property(z, t_obs)
    if not ok:
        raise DomainError("tree is not a junction tree of the state")
    skip = set(exclude_nodes)
    ns = tuple(i for i in sorted(z.cols) if i not in skip)
    D = delta_nei(z, t_obs, strictness)
    cols = {i: b for b, i in enumerate(D.node_ids)}
    m = np.array([len(z.cols[i]) for i in ns], dtype=float)
    md = np.array([int(D.matrix[:, cols[i]].sum()) for i in ns], dtype=float)
    return BetaPosterior(ns, alpha + m, 1.0 + md, float(alpha))


# ---------------------------------------------------------------------------
# Cox model with latent S

@dataclass(frozen=True)
class GammaPrior:
    shape: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0):
            raise DomainError("Gamma prior parameters must be positive")


def augmented_log_density(z: int, s: float, w: float) -> float:
    """log density of (z, s) given the rate w = clique weight * node weight.

    z = 1: s on (0, 1) with density w exp(-w s); z = 0: s = 1 with mass exp(-w).
    Integrating s out for z = 1 gives 1 - exp(-w).
    """
    if z:
        return math.log(w) - w * s
    return -w


def truncated_exponential(rate: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw from Exp(rate) restricted to (0, 1)."""
    rate = np.asarray(rate, dtype=float)
    small = rate < 1e-12
    out = np.where(small, u, -np.log1p(u * np.expm1(-np.where(small, 1.0, rate))) / np.where(small, 1.0, rate))
    return out


class CoxGibbs:
    """Gibbs sampler for W(x, y) = 1 - exp(-x y) with Gamma priors.

    Tracked pairs are those with z = 1 or delta = 1.  Each tracked pair has a
    latent s in (0, 1]: s = 1 when z = 0, and s ~ Exp(x y) truncated to (0, 1)
    when z = 1.  Given s, the clique weight x_k is Gamma with shape
    prior_shape + m_k and rate prior_rate + sum_i y_i s_ki over its tracked
    pairs; node weights are updated symmetrically.
    """

    def __init__(self, z: BipartiteState, t_obs: LatentTree, clique_prior: GammaPrior = GammaPrior(),
                 node_prior: GammaPrior = GammaPrior(), strictness: str = RELAXED,
                 exclude_nodes: Iterable[int] = (), rng: np.random.Generator | None = None):
        if z.n_edges() == 0:
            raise DomainError("the bipartite state has no edges")
        ok, _ = verify_junction_property(z, t_obs)
        if not ok:
            raise DomainError("tree is not a junction tree of the state")
        skip = set(exclude_nodes)
        self.clique_ids = tuple(sorted(z.rows))
        self.node_ids = tuple(i for i in sorted(z.cols) if i not in skip)
        full = z.matrix()
        keep = [b for b, i in enumerate(sorted(z.cols)) if i not in skip]
        self.Z = full[:, keep].astype(bool)
        D = delta_nei(z, t_obs, strictness).matrix[:, keep].astype(bool)
        self.tracked = self.Z | D
        self.clique_prior = clique_prior
        self.node_prior = node_prior
        self.rng = rng if rng is not None else np.random.default_rng()
        self.x = np.full(len(self.clique_ids), clique_prior.shape / clique_prior.rate)
        self.y = np.full(len(self.node_ids), node_prior.shape / node_prior.rate)
        self.s = np.ones(self.Z.shape)
        self.m_k = self.Z.sum(axis=1)
        self.n_i = self.Z.sum(axis=0)

    def clique_conditional(self) -> tuple[np.ndarray, np.ndarray]:
        """(shape, rate) of each clique weight given node weights and s."""
        rate = self.clique_prior.rate + (self.tracked * self.s) @ self.y
        return self.clique_prior.shape + self.m_k, rate

    def node_conditional(self) -> tuple[np.ndarray, np.ndarray]:
        rate = self.node_prior.rate + (self.tracked * self.s).T @ self.x
        return self.node_prior.shape + self.n_i, rate

    def update_s(self) -> None:
        rate = np.outer(self.x, self.y)
        u = self.rng.random(self.Z.shape)
        draw = truncated_exponential(rate, u)
        self.s = np.where(self.Z, draw, 1.0)

    def update_cliques(self) -> None:
        shape, rate = self.clique_conditional()
        self.x = self.rng.gamma(shape, 1.0 / rate)

    def update_nodes(self) -> None:
        shape, rate = self.node_conditional()
        self.y = self.rng.gamma(shape, 1.0 / rate)

    def sweep(self) -> None:
        self.update_s()
        self.update_cliques()
        self.update_nodes()

    def run(self, iters: int, burnin: int = 0) -> tuple[np.ndarray, np.ndarray]:
        if iters <= 0:
            raise DomainError("iters must be positive")
        if not 0 <= burnin < iters:
            raise DomainError("burnin must be in [0, iters)")
        xs = np.empty((iters - burnin, len(self.x)))
        ys = np.empty((iters - burnin, len(self.y)))
        for it in range(iters):
            self.sweep()
            if it >= burnin:
                xs[it - burnin] = self.x
                ys[it - burnin] = self.y
        return xs, ys


def cox_gibbs(z: BipartiteState, t_obs: LatentTree, clique_prior: GammaPrior = GammaPrior(),
              node_prior: GammaPrior = GammaPrior(), iters: int = 1000, burnin: int = 100,
              rng: np.random.Generator | None = None, strictness: str = RELAXED,
              exclude_nodes: Iterable[int] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Post-burn-in draws of clique weights and node weights (rows are iterations)."""
    if iters <= 0:
        raise DomainError("iters must be positive")
    g = CoxGibbs(z, t_obs, clique_prior, node_prior, strictness, exclude_nodes, rng)
    return g.run(iters, burnin)


def summarize_draws(draws: np.ndarray) -> np.ndarray:
    """Per-column mean, sd, 5% and 95% quantiles."""
    return np.column_stack([
        draws.mean(axis=0),
        draws.std(axis=0, ddof=1) if draws.shape[0] > 1 else np.zeros(draws.shape[1]),
        np.quantile(draws, 0.05, axis=0),
        np.quantile(draws, 0.95, axis=0),
    ])
