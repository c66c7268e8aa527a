"""Tensor clustering via a heterogeneous Tucker model.

Orthonormal factors compress every mode but the last; the last mode
carries a row-stochastic membership matrix optimized by a Riemannian
trust-region method on the multinomial manifold (Fisher information
metric). Hard assignments come from k-means on the membership rows.
"""

from .cluster import (
    ClusterConfig,
    ClusteringResult,
    FactorSet,
    fit,
    hooi,
    init_hosvd_i,
    init_hosvd_ii,
    init_random,
    kmeans,
    recover_core,
    reconstruct_centroids,
    uf,
    update_factor_n,
)
from .data import Dataset, load_dense, load_idx, save_dense, subsample_per_class, synth_clusters
from .evaluation import accuracy, kuhn_munkres, nmi
from .multinomial import MultinomialManifold
from .objective import MembershipObjective, build_b
from .tensors import (
    fold,
    frob_norm,
    inner,
    kron,
    matricize,
    mode_n_product,
    multi_mode_project,
    stack_last_mode,
)
from .trustregion import SolveStats, TrustRegionConfig, solve, truncated_cg

__version__ = "0.1.0"

__all__ = [
    "ClusterConfig",
    "ClusteringResult",
    "Dataset",
    "FactorSet",
    "MembershipObjective",
    "MultinomialManifold",
    "SolveStats",
    "TrustRegionConfig",
    "accuracy",
    "build_b",
    "fit",
    "fold",
    "frob_norm",
    "hooi",
    "init_hosvd_i",
    "init_hosvd_ii",
    "init_random",
    "inner",
    "kmeans",
    "kron",
    "kuhn_munkres",
    "load_dense",
    "load_idx",
    "matricize",
    "mode_n_product",
    "multi_mode_project",
    "nmi",
    "recover_core",
    "reconstruct_centroids",
    "save_dense",
    "solve",
    "stack_last_mode",
    "subsample_per_class",
    "synth_clusters",
    "truncated_cg",
    "uf",
    "update_factor_n",
]
