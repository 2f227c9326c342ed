"""Generative procedures: points, trees, the sequential sampler, the Markov chain
with tree-edge updates, the joint sampler and the mixing-time bound."""
from __future__ import annotations

import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .core import BipartiteState, LatentTree, PointSet, TruncationWindow
from .errors import DivergenceError, DomainError
from .kernels import Kernel
from .projection import ProjectionReport, edge_greedy_complete, report_identity, report_without_repair
from .treeops import RELAXED, STRICT, move_sets, rewire_candidates

log = logging.getLogger(__name__)

TREE_UPDATE_MODES = ("none", "uniform", "weighted")


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class TreeSpec:
    kind: str                  # dregular | path | recursive | file
    d: int = 0
    L: int = 0
    n: int = 0
    path: str = ""

    def to_spec(self) -> str:
        if self.kind == "dregular":
            return f"dregular:d={self.d},L={self.L}"
        if self.kind == "path":
            return f"path:L={self.L}"
        if self.kind == "recursive":
            return f"recursive:n={self.n}"
        return f"file:{self.path}"


def parse_tree_spec(spec: str) -> TreeSpec:
    """``dregular:d=3,L=2``, ``path:L=2``, ``recursive:n=15`` or ``file:<path>``."""
    spec = spec.strip()
    if spec.startswith("file:"):
        return TreeSpec("file", path=spec[5:])
    m = re.fullmatch(r"(dregular|path|recursive):(.*)", spec)
    if not m:
        raise DomainError(f"bad tree spec {spec!r}")
    kind = m[1]
    args = {}
    for part in m[2].split(","):
        if "=" not in part:
            raise DomainError(f"expected key=value in tree spec, got {part!r}")
        key, val = part.split("=", 1)
        try:
            args[key.strip()] = int(val)
        except ValueError as exc:
            raise DomainError(f"tree parameter {key} must be an integer") from exc
    wanted = {"dregular": {"d", "L"}, "path": {"L"}, "recursive": {"n"}}[kind]
    if set(args) != wanted:
        raise DomainError(f"tree kind {kind!r} takes parameters {sorted(wanted)}")
    ts = TreeSpec(kind, **args)
    if kind == "dregular" and (ts.d < 3 or ts.L < 0):
        raise DomainError("dregular trees need d >= 3 and L >= 0")
    if kind == "path" and ts.L < 0:
        raise DomainError("path trees need L >= 0")
    if kind == "recursive" and ts.n < 1:
        raise DomainError("recursive trees need n >= 1")
    return ts


@dataclass(frozen=True)
class SamplerConfig:
    window: TruncationWindow
    kernel: Kernel
    tree: TreeSpec
    strictness: str = RELAXED
    seed: int = 0
    steps: int = 1000
    tree_update: str = "uniform"
    tree_update_period: int = 100
    repair: str = "edge_greedy"     # edge_greedy | identity | none
    clique_count: str = "tree"      # tree | poisson
    engine: str = "serial"          # serial | columns
    threads: int = 1

    def __post_init__(self):
        if self.strictness not in (RELAXED, STRICT):
            raise DomainError(f"unknown strictness {self.strictness!r}")
        if self.steps < 0:
            raise DomainError("steps must be nonnegative")
        if self.tree_update not in TREE_UPDATE_MODES:
            raise DomainError(f"tree update must be one of {TREE_UPDATE_MODES}")
        if self.tree_update_period < 1:
            raise DomainError("tree update period must be positive")
        if self.repair not in ("edge_greedy", "identity", "none"):
            raise DomainError(f"unknown repair {self.repair!r}")
        if self.clique_count not in ("tree", "poisson"):
            raise DomainError(f"unknown clique count mode {self.clique_count!r}")
        if self.engine not in ("serial", "columns"):
            raise DomainError(f"unknown engine {self.engine!r}")
        if self.engine == "columns" and self.strictness == STRICT:
            raise DomainError("the column engine requires relaxed move sets")


@dataclass
class ChainState:
    z: BipartiteState
    t: LatentTree
    step_count: int = 0
    points: PointSet | None = None


# ---------------------------------------------------------------------------
# points and trees

def sample_points(window: TruncationWindow, rng: np.random.Generator,
                  n_cliques: int | None = None, kernel: Kernel | None = None) -> PointSet:
    """Poisson counts, uniform locations and weights; ids ascend with location."""
    n_v = int(rng.poisson(window.c * window.r))
    node_loc = np.sort(rng.uniform(0.0, window.r, n_v))
    node_w = rng.uniform(0.0, window.c, n_v)
    n_c = int(rng.poisson(window.c_prime * window.r_prime)) if n_cliques is None else int(n_cliques)
    clique_loc = np.sort(rng.uniform(0.0, window.r_prime, n_c))
    clique_w = rng.uniform(0.0, window.c_prime, n_c)
    pts = PointSet(clique_loc, clique_w, node_loc, node_w, window=window)
    return kernel.attach_effective_weights(pts) if kernel is not None else pts


def dregular_edges(d: int, L: int) -> tuple[int, list[tuple[int, int]]]:
    """Root 0 with d children, every other internal vertex d-1 children, L levels; BFS ids."""
    if d < 3:
        raise DomainError("d must be at least 3")
    edges = []
    frontier = [0]
    nxt = 1
    for level in range(L):
        new = []
        for u in frontier:
            for _ in range(d if level == 0 else d - 1):
                edges.append((u, nxt))
                new.append(nxt)
                nxt += 1
        frontier = new
    return nxt, edges


def ambient_tree(spec: TreeSpec, rng: np.random.Generator) -> LatentTree:
    if spec.kind == "dregular":
        n, edges = dregular_edges(spec.d, spec.L)
        return LatentTree(range(n), edges)
    if spec.kind == "path":
        n = 2 * spec.L + 1
        return LatentTree(range(n), [(j, j + 1) for j in range(n - 1)])
    if spec.kind == "recursive":
        parents = [int(rng.integers(0, j)) for j in range(1, spec.n)]
        return LatentTree(range(spec.n), [(p, j + 1) for j, p in enumerate(parents)])
    from .fileio import loads_tree, read_text
    t = loads_tree(read_text(spec.path))
    if sorted(t.vertices) != list(range(len(t.vertices))):
        raise DomainError("explicit tree ids must be dense from 0")
    return t


def tree_size(spec: TreeSpec) -> int | None:
    if spec.kind == "dregular":
        return dregular_edges(spec.d, spec.L)[0]
    if spec.kind == "path":
        return 2 * spec.L + 1
    if spec.kind == "recursive":
        return spec.n
    return None


def random_walk_subtree(t: LatentTree, n: int, rng: np.random.Generator) -> list[int]:
    """Grow a connected vertex set: start uniformly, then repeatedly add a uniform
    tree neighbour of the current set.  Returned in order of addition."""
    if n <= 0:
        return []
    verts = sorted(t.vertices)
    chosen = [verts[int(rng.integers(len(verts)))]]
    inside = set(chosen)
    while len(chosen) < n:
        frontier = sorted({w for u in chosen for w in t.adj[u] if w not in inside})
        w = frontier[int(rng.integers(len(frontier)))]
        chosen.append(w)
        inside.add(w)
    return chosen


def build_tree(spec: TreeSpec, n_cliques: int, rng: np.random.Generator) -> LatentTree:
    """Tree over clique ids 0..m-1 with m = min(n_cliques, ambient size).

    When fewer cliques than ambient vertices are available, clique j is
    placed on the j-th vertex of a random-walk grown connected subtree.
    """
    amb = ambient_tree(spec, rng)
    if n_cliques >= len(amb):
        return amb
    chosen = random_walk_subtree(amb, n_cliques, rng)
    label = {v: j for j, v in enumerate(chosen)}
    edges = [(label[a], label[b]) for a, b in amb.edges() if a in label and b in label]
    return LatentTree(range(n_cliques), edges)


# ---------------------------------------------------------------------------
# sequential sampler

def node_activity_probability(kernel: Kernel, c_prime: float, vartheta: float) -> float:
    full = kernel.marginal(vartheta, math.inf)   # raises DivergenceError when infinite
    if full <= 0:
        raise DomainError("full marginal is zero; activity probability undefined")
    part = kernel.marginal(vartheta, kernel.weight_bound(c_prime, "clique"))
    return min(1.0, part / full)


def sequential_sample(points: PointSet, t: LatentTree, kernel: Kernel, window: TruncationWindow,
                      strictness: str, rng: np.random.Generator, stats: dict | None = None) -> BipartiteState:
    """One pass per node: activity draw, first clique proportional to W, then
    neighbour growth with acceptance min(1, W / clique-window marginal)."""
    z = BipartiteState(range(points.n_cliques), range(points.n_nodes))
    clamps = 0
    if points.n_cliques == 0:
        if stats is not None:
            stats["clamped"] = 0
        return z
    W = kernel.matrix(points)
    cbound = kernel.weight_bound(window.c_prime, "clique")
    for i in range(points.n_nodes):
        y = float(points.node_eff[i])
        try:
            p_act = node_activity_probability(kernel, window.c_prime, y)
        except DivergenceError:
            p_act = 1.0
        except DomainError:
            p_act = 0.0
        if rng.random() >= p_act:
            continue
        w = W[:, i]
        tot = w.sum()
        if tot <= 0:
            continue
        k0 = int(rng.choice(points.n_cliques, p=w / tot))
        z.connect(k0, i)
        norm = kernel.marginal(y, cbound)
        attempted = {k0}
        while True:
            cand = sorted(move_sets(z, t, i, strictness).neighbour - attempted)
            if not cand:
                break
            k = cand[int(rng.integers(len(cand)))]
            attempted.add(k)
            ratio = W[k, i] / norm if norm > 0 else 1.0
            if ratio > 1.0:
                clamps += 1
                ratio = 1.0
            if rng.random() < ratio:
                z.connect(k, i)
    if clamps:
        log.warning("sequential sampler clamped %d acceptance ratios to 1", clamps)
    if stats is not None:
        stats["clamped"] = clamps
    return z


# ---------------------------------------------------------------------------
# Markov chain

def _run_block(rows, cols, tadj, W, ks, is_, us, strict: bool) -> None:
    """Apply a block of single-entry updates in place (tree fixed)."""
    row_items = list(rows.items())
    for k, i, u in zip(ks, is_, us):
        col = cols[i]
        inside = k in col
        if col:
            nb = tadj[k]
            if inside:
                c = 0
                for s in nb:
                    if s in col:
                        c += 1
                if c > 1:
                    continue
            else:
                for s in nb:
                    if s in col:
                        break
                else:
                    continue
            if strict:
                rk = rows[k]
                test = rk - {i} if inside else rk | {i}
                blocked = False
                for s, rs in row_items:
                    if s != k and test <= rs:
                        blocked = True
                        break
                if blocked:
                    continue
        new = u < W[k][i]
        if new != inside:
            if new:
                col.add(k)
                rows[k].add(i)
            else:
                col.discard(k)
                rows[k].discard(i)


def _column_chain(col: set, tadj, W, i: int, seed: int, n: int, n_cliques: int) -> set:
    """Relaxed-move chain restricted to one column (used by the column engine)."""
    r = np.random.default_rng(seed)
    ks = r.integers(0, n_cliques, n).tolist()
    us = r.random(n).tolist()
    col = set(col)
    for k, u in zip(ks, us):
        inside = k in col
        if col:
            nb = tadj[k]
            hits = sum(1 for s in nb if s in col)
            if inside and hits > 1:
                continue
            if not inside and hits == 0:
                continue
        if (u < W[k][i]) != inside:
            if inside:
                col.discard(k)
            else:
                col.add(k)
    return col


def _tree_update(z: BipartiteState, t: LatentTree, mode: str, rng: np.random.Generator) -> LatentTree:
    edges = t.edges()
    if not edges:
        return t
    a, b = edges[int(rng.integers(len(edges)))]
    k, s = (a, b) if rng.random() < 0.5 else (b, a)
    cands = sorted(rewire_candidates(z, t, (k, s)))
    if mode == "uniform":
        m = cands[int(rng.integers(len(cands)))]
    else:
        deg = np.array([len(z.rows[c]) for c in cands], dtype=float)
        if deg.sum() == 0:
            m = s
        else:
            m = cands[int(rng.choice(len(cands), p=deg / deg.sum()))]
    return t.rewired(k, s, m)


def tree_edge_update(state: ChainState, mode: str, rng: np.random.Generator) -> ChainState:
    """Sever a uniform tree edge (k, s) on the s side and reconnect k to a rewire candidate."""
    if mode not in ("uniform", "weighted"):
        raise DomainError(f"unknown tree update mode {mode!r}")
    return replace(state, t=_tree_update(state.z, state.t, mode, rng))


def rewire_probabilities(z: BipartiteState, t: LatentTree, edge: tuple[int, int], mode: str) -> dict[int, float]:
    """Probability of each reconnection target once ``edge`` = (k, s) is chosen."""
    cands = sorted(rewire_candidates(z, t, edge))
    if mode == "uniform":
        return {m: 1.0 / len(cands) for m in cands}
    deg = {m: len(z.rows[m]) for m in cands}
    tot = sum(deg.values())
    if tot == 0:
        return {m: float(m == edge[1]) for m in cands}
    return {m: deg[m] / tot for m in cands}


def markov_run(initial: ChainState, config: SamplerConfig, rng: np.random.Generator,
               callback=None, callback_every: int | None = None) -> ChainState:
    """Run ``config.steps`` single-entry updates, with tree-edge updates every
    ``config.tree_update_period`` steps when enabled.

    Random numbers are drawn per block of ``tree_update_period`` steps, so the
    result does not depend on whether a callback is installed.  The callback
    receives a live :class:`ChainState`; it must not mutate it.
    """
    if initial.points is None:
        raise DomainError("chain state needs points to evaluate the kernel")
    pts = initial.points
    z = initial.z.copy()
    t = initial.t
    if z.clique_ids != t.vertices:
        raise DomainError("tree vertices and bipartite clique ids differ")
    n_c, n_v = pts.n_cliques, pts.n_nodes
    if set(range(n_c)) != z.clique_ids or set(range(n_v)) != z.node_ids:
        raise DomainError("point ids and bipartite ids differ")
    W = config.kernel.matrix(pts).tolist() if n_c and n_v else []
    strict = config.strictness == STRICT
    period = config.tree_update_period
    updating = config.tree_update != "none"
    step = initial.step_count
    end = step + config.steps
    block = period if updating else 4096
    every = callback_every if callback is not None and callback_every else None
    while step < end:
        n = min(block - step % block, end - step)
        reported = False
        if n_c and n_v and config.engine == "columns":
            _columns_block(z, t, W, n, n_c, n_v, rng, config.threads)
        elif n_c and n_v:
            ks = rng.integers(0, n_c, n).tolist()
            is_ = rng.integers(0, n_v, n).tolist()
            us = rng.random(n).tolist()
            if every is None:
                _run_block(z.rows, z.cols, t.adj, W, ks, is_, us, strict)
            else:
                lo = 0
                while lo < n:
                    hi = min(n, lo + every - (step + lo) % every)
                    _run_block(z.rows, z.cols, t.adj, W, ks[lo:hi], is_[lo:hi], us[lo:hi], strict)
                    if (step + hi) % every == 0:
                        callback(ChainState(z, t, step + hi, pts))
                    lo = hi
                reported = True
        step += n
        if not reported and every is not None and step % every == 0:
            # the column engine and empty states report at block ends only
            callback(ChainState(z, t, step, pts))
        if updating and step % period == 0:
            t = _tree_update(z, t, config.tree_update, rng)
    return ChainState(z, t, step, pts)


def _columns_block(z: BipartiteState, t: LatentTree, W, n: int, n_c: int, n_v: int,
                   rng: np.random.Generator, threads: int) -> None:
    """Split ``n`` uniform steps among columns and run each column independently.

    Column step counts are multinomial and every column gets its own seed, so
    the result is the same for any number of worker threads.
    """
    counts = rng.multinomial(n, np.full(n_v, 1.0 / n_v))
    seeds = rng.integers(0, 2**63 - 1, n_v)
    jobs = [(i, int(counts[i]), int(seeds[i])) for i in range(n_v) if counts[i]]

    def work(job):
        i, cnt, sd = job
        return i, _column_chain(z.cols[i], t.adj, W, i, sd, cnt, n_c)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, jobs))
    else:
        results = [work(j) for j in jobs]
    for i, col in results:
        for k in z.cols[i] - col:
            z.rows[k].discard(i)
        for k in col - z.cols[i]:
            z.rows[k].add(i)
        z.cols[i] = col


def one_step_distribution(z: BipartiteState, t: LatentTree, W: np.ndarray, strictness: str = RELAXED,
                          form: str = "two_case") -> dict[tuple, float]:
    """Exact law of the next bipartite state after one uniform (k, i) update (tree fixed).

    ``form="four_case"`` evaluates the update entry-wise from the four cases
    (absent and not a neighbour, present and not boundary, present and
    boundary, absent and neighbour); ``"two_case"`` uses the collapsed rule.
    Empty columns admit every clique in both forms.  States are keyed by
    their sorted edge tuples.
    """
    ks, ns = sorted(z.rows), sorted(z.cols)
    pick = 1.0 / (len(ks) * len(ns))
    out: dict[tuple, float] = {}
    for i in ns:
        ms = move_sets(z, t, i, strictness)
        empty = not z.cols[i]
        for k in ks:
            w = float(W[k, i])
            zki = z.has(k, i)
            if form == "four_case":
                if empty:
                    p1 = w
                elif not zki and k not in ms.neighbour:
                    p1 = 0.0
                elif zki and k not in ms.boundary:
                    p1 = 1.0
                else:
                    p1 = w
            else:
                permitted = empty or k in ms.boundary or k in ms.neighbour
                p1 = w if permitted else float(zki)
            for val, p in ((True, p1), (False, 1.0 - p1)):
                if p == 0.0:
                    continue
                z2 = z.copy()
                if val:
                    z2.connect(k, i)
                else:
                    z2.disconnect(k, i)
                key = tuple(z2.edges())
                out[key] = out.get(key, 0.0) + pick * p
    return out


# ---------------------------------------------------------------------------
# joint sampler

def _fresh_points(n: int, window: TruncationWindow, kernel: Kernel, rng: np.random.Generator):
    loc = window.r + np.sort(rng.uniform(0.0, 1.0, n))
    w = rng.uniform(0.0, window.c, n)
    return loc, w, kernel.effective_weights(w, window.c, "node")


def joint_sample(config: SamplerConfig, callback=None, callback_every: int | None = None
                 ) -> tuple[ChainState, ProjectionReport]:
    """Points, tree, Markov chain with interleaved tree updates, then repair.

    Fully determined by ``config.seed``.  Nodes added by the repair step are
    placed just beyond the node window ``r`` and listed in the report.
    """
    rng = np.random.default_rng(config.seed)
    size = tree_size(config.tree)
    if config.clique_count == "tree":
        if size is None:
            size = len(ambient_tree(config.tree, rng))
        pts = sample_points(config.window, rng, n_cliques=size, kernel=config.kernel)
    else:
        pts = sample_points(config.window, rng, kernel=config.kernel)
    t = build_tree(config.tree, pts.n_cliques, rng)
    if len(t) < pts.n_cliques:
        pts = pts.take_cliques(len(t))
    z0 = BipartiteState(range(pts.n_cliques), range(pts.n_nodes))
    state = markov_run(ChainState(z0, t, 0, pts), config, rng, callback, callback_every)
    if config.repair == "none":
        report = report_without_repair(state.z)
    elif config.repair == "identity":
        report = report_identity(state.z)
    else:
        report = edge_greedy_complete(state.z, state.t)
    if report.added_nodes:
        loc, w, eff = _fresh_points(len(report.added_nodes), config.window, config.kernel, rng)
        pts = pts.with_nodes(loc, w, eff)
    return ChainState(report.state, state.t, state.step_count, pts), report


# ---------------------------------------------------------------------------
# mixing

def tree_center(t: LatentTree) -> int:
    """Vertex of minimum eccentricity (smallest id on ties)."""
    return min(sorted(t.vertices), key=lambda v: max(t.distances(v).values()))


def tree_diameter(t: LatentTree) -> int:
    if len(t) <= 1:
        return 0
    far = max(t.distances(min(t.vertices)).items(), key=lambda p: (p[1], -p[0]))[0]
    return max(t.distances(far).values())


def gamma_counts(t: LatentTree, root: int) -> list[int]:
    dist = t.distances(root)
    counts = [0] * (max(dist.values()) + 1)
    for d in dist.values():
        counts[d] += 1
    return counts


def mixing_lower_bound(t: LatentTree, kernel: Kernel, root_mode: str = "worst") -> float:
    """Lower bound on the expected mixing time of the bipartite chain.

    ``worst``: 8 N_c / mass * diameter / 2.  ``center``: 8 N_c / mass * sum_{k>=1} 1/Gamma_k
    with Gamma_k the layer sizes around the tree centre.
    """
    mass = kernel.total_mass()   # DivergenceError propagates
    if mass <= 0:
        raise DomainError("kernel has zero mass")
    if len(t) <= 1:
        return 0.0
    scale = 8 * len(t) / mass
    if root_mode == "worst":
        return scale * tree_diameter(t) / 2
    if root_mode == "center":
        counts = gamma_counts(t, tree_center(t))
        return scale * float(sum(Fraction(1, c) for c in counts[1:]))
    raise DomainError(f"unknown root mode {root_mode!r}")


def commute_time(t: LatentTree, root: int, holding: Fraction | float = 1) -> Fraction | float:
    """Commute time between ``root`` and the farthest BFS layer for a walk that
    moves with probability ``holding`` each step: 2 |E| sum_{k>=1} 1/Gamma_k / holding."""
    counts = gamma_counts(t, root)
    resistance = sum(Fraction(1, c) for c in counts[1:])
    val = 2 * (len(t) - 1) * resistance
    if isinstance(holding, Fraction) or isinstance(holding, int):
        return val / Fraction(holding)
    return float(val) / holding
