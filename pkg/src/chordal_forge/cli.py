"""Command line entry points: generate, verify, analyze, infer, replay.

Exit codes: 0 success, 1 property violation, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .analytics import (
    expected_cd_dregular_any, expected_cd_dregular_level, expected_cd_path,
    expected_cliquedegree_series, gamma_profile, mc_cliquedegree, mc_cliquedegree_uniform,
)
from .core import BipartiteState, TruncationWindow
from .errors import DivergenceError, DomainError
from .fileio import (
    dumps_bipartite, dumps_graph, dumps_points, dumps_tree, fmt_float, loads_bipartite,
    loads_graph, loads_points, loads_tree, read_text,
)
from .inference import GammaPrior, beta_posterior, cox_gibbs, observed_structure, summarize_draws
from .kernels import parse_kernel
from .oracle import build_junction_tree, is_chordal_mcs, perfect_sequence
from .projection import a0_violations, project
from .samplers import (
    SamplerConfig, ambient_tree, joint_sample, mixing_lower_bound, parse_tree_spec, tree_center,
)
from .treeops import RELAXED, STRICT, verify_junction_property

THREADS_ENV = "CHORDAL_FORGE_THREADS"
MANIFEST = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(out: Path, name: str, text: str, written: dict) -> None:
    p = out / name
    p.write_text(text, encoding="utf-8")
    written[name] = _sha256(p)


def _write_manifest(out: Path, command: str, args: argparse.Namespace, inputs: dict, outputs: dict) -> None:
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out")}
    manifest = {
        "command": command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "inputs": inputs,
        "outputs": outputs,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _digest_inputs(paths: dict) -> dict:
    out = {}
    for name, p in paths.items():
        if p:
            try:
                out[name] = _sha256(Path(p))
            except OSError as exc:
                raise DomainError(f"cannot read {p}: {exc}") from exc
    return out


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"{THREADS_ENV} must be an integer") from exc
    return 1


# ---------------------------------------------------------------------------
# generate

def cmd_generate(args) -> int:
    kernel = parse_kernel(args.kernel)
    tree = parse_tree_spec(args.tree)
    window = TruncationWindow(args.rprime, args.cprime, args.r, args.c)
    config = SamplerConfig(
        window=window, kernel=kernel, tree=tree,
        strictness=STRICT if args.strict else RELAXED,
        seed=args.seed, steps=args.steps,
        tree_update=args.tree_update, tree_update_period=args.tree_update_period,
        repair=args.repair, clique_count=args.clique_count,
        engine=args.engine, threads=_threads(args),
    )
    state, report = joint_sample(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written: dict = {}
    _write(out, "points.txt", dumps_points(state.points), written)
    _write(out, "tree.txt", dumps_tree(state.t), written)
    _write(out, "bipartite.txt", dumps_bipartite(state.z), written)
    _write(out, "graph.txt", dumps_graph(report.graph), written)
    _write(out, "fresh.txt", "".join(f"F {i} {k}\n" for i, k in report.added_nodes), written)
    _write(out, "adjacency.tsv", _adjacency_tsv(report.graph, state.z), written)
    _write(out, "biadjacency.tsv", _matrix_tsv(state.z.matrix()), written)
    inputs = _digest_inputs({"tree": tree.path}) if tree.kind == "file" else {}
    _write_manifest(out, "generate", args, inputs, written)
    print(f"cliques={len(state.z.rows)} nodes={len(state.z.cols)} edges={report.graph.n_edges()} "
          f"added={len(report.added_nodes)}")
    return 0


def _matrix_tsv(m: np.ndarray) -> str:
    return "".join("\t".join(str(int(v)) for v in row) + "\n" for row in m)


def _adjacency_tsv(g, z: BipartiteState) -> str:
    ids = sorted(z.cols)
    pos = {i: a for a, i in enumerate(ids)}
    m = np.zeros((len(ids), len(ids)), dtype=np.int8)
    for a, b in g.edges():
        m[pos[a], pos[b]] = m[pos[b], pos[a]] = 1
    return _matrix_tsv(m)


# ---------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    g = loads_graph(read_text(args.graph))
    lines = []
    violation = False
    chordal, _ = is_chordal_mcs(g)
    lines.append(f"chordal: {'yes' if chordal else 'no'}")
    if chordal:
        jt = build_junction_tree(g)
        lines.append("cliques: " + " ".join("{" + ",".join(map(str, sorted(c))) + "}" for c in
                                            sorted(jt.cliques, key=lambda c: sorted(c))))
        lines.append("separators: " + " ".join("{" + ",".join(map(str, sorted(s))) + "}" for s in jt.separators))
        lines.append("pos: " + " ".join("{" + ",".join(map(str, sorted(c))) + "}" for c in perfect_sequence(jt)))
    else:
        violation = True
    if args.bipartite:
        z = _load_bipartite(args)
        if args.tree:
            t = loads_tree(read_text(args.tree), vertices=z.clique_ids)
            z = BipartiteState(t.vertices | z.clique_ids, z.cols.keys(), z.edges())
            ok, witness = verify_junction_property(z, t)
            lines.append(f"junction_property: {'yes' if ok else 'no'}")
            if not ok:
                violation = True
                lines.append(f"junction_witness: node {witness[0]}")
        a0 = a0_violations(z)
        lines.append("a0: " + (" ".join(map(str, sorted(a0))) if a0 else "none"))
        # graph files list edges only, so isolated nodes are not compared
        if project(z).edges() != g.edges():
            lines.append("projection_matches_graph: no")
            violation = True
        else:
            lines.append("projection_matches_graph: yes")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written: dict = {}
        _write(out, "verify.txt", text, written)
        inputs = _digest_inputs({"graph": args.graph, "bipartite": args.bipartite, "tree": args.tree,
                                 "points": args.points})
        _write_manifest(out, "verify", args, inputs, written)
    return 1 if violation else 0


# ---------------------------------------------------------------------------
# analyze

def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "NA"
    return fmt_float(x)


def cmd_analyze(args) -> int:
    spec = parse_tree_spec(args.tree)
    rng = np.random.default_rng(args.seed)
    t = ambient_tree(spec, rng)
    if args.zeta:
        zetas = list(args.zeta)
    else:
        zetas = [j / (args.zeta_grid + 1) for j in range(1, args.zeta_grid + 1)]
    for z in zetas:
        if z < 0:
            raise DomainError("zeta must be nonnegative")
    # start vertex per level: centre for generic trees, levels by distance from it
    if spec.kind == "dregular":
        root = 0
    elif spec.kind == "path":
        root = spec.L
    else:
        root = tree_center(t)
    dist = t.distances(root)
    n_levels = max(dist.values()) + 1
    first_at = {}
    for v in sorted(t.vertices):
        first_at.setdefault(dist[v], v)

    rows = ["zeta\tlevel\tclosed_form\tseries\tmc_mean\tmc_stderr"]
    for z in zetas:
        for lvl in range(n_levels):
            v = first_at[lvl]
            closed = None
            if spec.kind == "dregular":
                closed = expected_cd_dregular_level(spec.d, spec.L, lvl, z)
            elif spec.kind == "path":
                closed = expected_cd_path(spec.L, lvl, z)
            series = expected_cliquedegree_series(gamma_profile(t, v), z)
            mc = mc_cliquedegree(t, z, v, args.reps, rng) if z <= 1 else (None, None)
            rows.append("\t".join([_fmt(z), str(lvl), _fmt(closed), _fmt(series), _fmt(mc[0]), _fmt(mc[1])]))
        closed = None
        if spec.kind == "dregular":
            closed = expected_cd_dregular_any(spec.d, spec.L, z)
        elif spec.kind == "path":
            closed = expected_cd_path(spec.L, None, z)
        series = sum(expected_cliquedegree_series(gamma_profile(t, v), z) for v in t.vertices) / len(t)
        mc = mc_cliquedegree_uniform(t, z, args.reps, rng) if z <= 1 else (None, None)
        rows.append("\t".join([_fmt(z), "any", _fmt(closed), _fmt(series), _fmt(mc[0]), _fmt(mc[1])]))
    kernel = parse_kernel(args.kernel)
    try:
        worst = mixing_lower_bound(t, kernel, "worst")
        center = mixing_lower_bound(t, kernel, "center")
        rows.append(f"# mixing_lower_bound\tworst={_fmt(worst)}\tcenter={_fmt(center)}")
    except DivergenceError:
        rows.append("# mixing_lower_bound\tdivergent kernel mass")
    text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written: dict = {}
        _write(out, "analysis.tsv", text, written)
        inputs = _digest_inputs({"tree": spec.path}) if spec.kind == "file" else {}
        _write_manifest(out, "analyze", args, inputs, written)
    return 0


# ---------------------------------------------------------------------------
# infer

def _load_structure(args):
    """Observed bipartite state, its junction tree, the original clique ids and node ids."""
    if args.graph:
        g = loads_graph(read_text(args.graph))
        ok, _ = is_chordal_mcs(g)
        if not ok:
            raise DomainError("input graph is not chordal")
        jt = build_junction_tree(g)
        z = BipartiteState(range(len(jt.cliques)), g.vertices,
                           [(k, i) for k, c in enumerate(jt.cliques) for i in c])
        return z, jt.tree, list(range(len(jt.cliques)))
    if not (args.bipartite and args.tree):
        raise UsageError("infer needs --graph or both --bipartite and --tree")
    z = _load_bipartite(args)
    t = loads_tree(read_text(args.tree), vertices=z.clique_ids)
    z = BipartiteState(t.vertices | z.clique_ids, z.cols.keys(), z.edges())
    zs, ts, back = observed_structure(z, t)
    return zs, ts, [back[j] for j in range(len(back))]


def _load_bipartite(args) -> BipartiteState:
    """Bipartite edges, with empty rows and isolated nodes restored from ``--points``."""
    text = read_text(args.bipartite)
    if not getattr(args, "points", None):
        return loads_bipartite(text)
    pts = loads_points(read_text(args.points))
    z = loads_bipartite(text, range(pts.n_cliques), range(pts.n_nodes))
    if len(z.rows) != pts.n_cliques or len(z.cols) != pts.n_nodes:
        raise DomainError("bipartite ids fall outside the points file")
    return z


def _fresh_ids(path) -> set[int]:
    if not path:
        return set()
    out = set()
    for line in read_text(path).splitlines():
        parts = line.split()
        if parts and parts[0] == "F":
            if len(parts) != 3:
                raise DomainError("malformed fresh-node record")
            out.add(int(parts[1]))
    return out


def cmd_infer(args) -> int:
    if args.model == "cox" and args.iters <= 0:
        raise DomainError("cox inference needs a positive number of iterations")
    z, t, clique_names = _load_structure(args)
    exclude = _fresh_ids(args.fresh) & set(z.cols) if not args.include_fresh else set()
    rows = ["id\tkind\tmean\tsd\tq05\tq95"]
    if args.model == "beta":
        post = beta_posterior(z, t, args.alpha, exclude_nodes=exclude)
        sd = np.sqrt(post.var())
        q05 = stats.beta.ppf(0.05, post.shape1, post.shape2)
        q95 = stats.beta.ppf(0.95, post.shape1, post.shape2)
        for j, i in enumerate(post.node_ids):
            rows.append("\t".join([str(i), "node", _fmt(post.mean()[j]), _fmt(sd[j]), _fmt(q05[j]), _fmt(q95[j])]))
        rows.append(f"# log_marginal\t{_fmt(post.log_marginal())}")
    else:
        prior = GammaPrior(args.prior_shape, args.prior_rate)
        rng = np.random.default_rng(args.seed)
        xs, ys = cox_gibbs(z, t, prior, prior, args.iters, args.burnin, rng, exclude_nodes=exclude)
        for j, row in enumerate(summarize_draws(xs)):
            rows.append("\t".join([str(clique_names[j]), "clique"] + [_fmt(v) for v in row]))
        node_ids = [i for i in sorted(z.cols) if i not in exclude]
        for j, row in enumerate(summarize_draws(ys)):
            rows.append("\t".join([str(node_ids[j]), "node"] + [_fmt(v) for v in row]))
    text = "\n".join(rows) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written: dict = {}
        _write(out, "posterior.tsv", text, written)
        inputs = _digest_inputs({"graph": args.graph, "bipartite": args.bipartite, "tree": args.tree,
                                 "fresh": args.fresh, "points": args.points})
        _write_manifest(out, "infer", args, inputs, written)
    return 0


# ---------------------------------------------------------------------------
# replay

def cmd_replay(args) -> int:
    try:
        manifest = json.loads(read_text(args.manifest))
    except json.JSONDecodeError as exc:
        raise DomainError(f"bad manifest: {exc}") from exc
    command = manifest.get("command")
    if command not in COMMANDS:
        raise DomainError(f"manifest names unknown command {command!r}")
    ns = argparse.Namespace(**manifest["config"])
    ns.out = args.out
    Path(args.out).mkdir(parents=True, exist_ok=True)
    code = COMMANDS[command](ns)
    if code != 0:
        return code
    fresh = json.loads((Path(args.out) / MANIFEST).read_text(encoding="utf-8"))
    same = fresh["outputs"] == manifest["outputs"] and fresh["inputs"] == manifest["inputs"]
    print(f"replay: {'identical' if same else 'DIFFERENT'}")
    return 0 if same else 1


COMMANDS = {"generate": cmd_generate, "verify": cmd_verify, "analyze": cmd_analyze, "infer": cmd_infer}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chordal-forge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="sample a decomposable graph")
    g.add_argument("--kernel", default="exp:lambda=1")
    g.add_argument("--tree", default="dregular:d=3,L=2")
    g.add_argument("--r", type=float, default=10.0)
    g.add_argument("--c", type=float, default=2.0)
    g.add_argument("--rprime", type=float, default=10.0)
    g.add_argument("--cprime", type=float, default=2.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--steps", type=int, default=10000)
    g.add_argument("--strict", action="store_true")
    g.add_argument("--tree-update", choices=["uniform", "weighted", "none"], default="uniform")
    g.add_argument("--tree-update-period", type=int, default=100)
    g.add_argument("--repair", choices=["edge_greedy", "identity", "none"], default="edge_greedy")
    g.add_argument("--clique-count", choices=["tree", "poisson"], default="tree")
    g.add_argument("--engine", choices=["serial", "columns"], default="serial")
    g.add_argument("--threads", type=int, default=None)
    g.add_argument("--out", default=".")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="check chordality and junction-tree structure")
    v.add_argument("--graph", required=True)
    v.add_argument("--bipartite")
    v.add_argument("--tree")
    v.add_argument("--points")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("analyze", help="expected clique degree tables")
    a.add_argument("--tree", required=True)
    a.add_argument("--zeta", type=float, action="append")
    a.add_argument("--zeta-grid", type=int, default=9)
    a.add_argument("--reps", type=int, default=10000)
    a.add_argument("--kernel", default="exp:lambda=1")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    i = sub.add_parser("infer", help="posterior summaries of kernel weights")
    i.add_argument("--model", choices=["beta", "cox"], default="beta")
    i.add_argument("--graph")
    i.add_argument("--bipartite")
    i.add_argument("--tree")
    i.add_argument("--points")
    i.add_argument("--fresh")
    i.add_argument("--include-fresh", action="store_true")
    i.add_argument("--alpha", type=float, default=1.0)
    i.add_argument("--prior-shape", type=float, default=1.0)
    i.add_argument("--prior-rate", type=float, default=1.0)
    i.add_argument("--iters", type=int, default=1000)
    i.add_argument("--burnin", type=int, default=100)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--out")
    i.set_defaults(func=cmd_infer)

    r = sub.add_parser("replay", help="rerun a manifest and compare output digests")
    r.add_argument("manifest")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())
