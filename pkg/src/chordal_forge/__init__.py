"""Random decomposable graphs from tree-dependent bipartite representations."""

__version__ = "0.1.0"

from .errors import DivergenceError, DomainError
from .core import (
    BipartiteState, DecomposableGraph, LatentTree, PointSet, TruncationWindow,
    degree_of, neighbors_of, vertex_partition,
)
from .kernels import FinitenessReport, Kernel, parse_kernel
from .treeops import (
    InducedSubtree, MoveSets, derive_observed_jtree, induced_subtree, move_sets,
    move_sets_relaxed, move_sets_strict, rewire_candidates, verify_junction_property,
)
from .projection import (
    ProjectionReport, a0_violations, augment_identity, edge_greedy_complete, project,
)
from .samplers import (
    ChainState, SamplerConfig, TreeSpec, build_tree, joint_sample, markov_run,
    mixing_lower_bound, node_activity_probability, parse_tree_spec, sample_points,
    sequential_sample, tree_edge_update,
)
from .analytics import (
    GammaProfile, bipartite_degree_rate, dregular_node_count, expected_cd_dregular_any,
    expected_cd_dregular_level, expected_cd_path, expected_cliquedegree_series, gamma_profile,
    mc_cliquedegree, table2_gamma_level,
)
from .oracle import (
    build_junction_tree, chordal_bruteforce, is_chordal_mcs, maximal_cliques, verify_rip,
)
from .inference import (
    BetaPosterior, CoxGibbs, Factorization, GammaPrior, beta_posterior, cox_gibbs, delta_nei,
    factorize, jtree_logratio, log_joint,
)

__all__ = [
    "DivergenceError",
    "DomainError",
    "BipartiteState",
    "DecomposableGraph",
    "LatentTree",
    "PointSet",
    "TruncationWindow",
    "degree_of",
    "neighbors_of",
    "vertex_partition",
    "FinitenessReport",
    "Kernel",
    "parse_kernel",
    "InducedSubtree",
    "MoveSets",
    "derive_observed_jtree",
    "induced_subtree",
    "move_sets",
    "move_sets_relaxed",
    "move_sets_strict",
    "rewire_candidates",
    "verify_junction_property",
    "ProjectionReport",
    "a0_violations",
    "augment_identity",
    "edge_greedy_complete",
    "project",
    "ChainState",
    "SamplerConfig",
    "TreeSpec",
    "build_tree",
    "joint_sample",
    "markov_run",
    "mixing_lower_bound",
    "node_activity_probability",
    "parse_tree_spec",
    "sample_points",
    "sequential_sample",
    "tree_edge_update",
    "GammaProfile",
    "bipartite_degree_rate",
    "dregular_node_count",
    "expected_cd_dregular_any",
    "expected_cd_dregular_level",
    "expected_cd_path",
    "expected_cliquedegree_series",
    "gamma_profile",
    "mc_cliquedegree",
    "table2_gamma_level",
    "build_junction_tree",
    "chordal_bruteforce",
    "is_chordal_mcs",
    "maximal_cliques",
    "verify_rip",
    "BetaPosterior",
    "CoxGibbs",
    "Factorization",
    "GammaPrior",
    "beta_posterior",
    "cox_gibbs",
    "delta_nei",
    "factorize",
    "jtree_logratio",
    "log_joint",
]
