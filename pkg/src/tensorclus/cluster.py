"""Alternating tensor clustering under the heterogeneous Tucker model.

Samples are the last-mode slices of a data tensor X. The model fits
orthonormal factor matrices on every mode but the last and a
row-stochastic membership matrix on the last mode:

    X ~ core x_0 U_0 ... x_{N-2} U_{N-2} x_{N-1} membership

Each outer iteration updates the membership by a Riemannian trust-region
run on the multinomial manifold, then refreshes every orthonormal factor
in closed form (leading singular subspace of the partially projected
unfolding). The model error

    f = 1/2 * ||X - reconstruction at the optimal core||^2
      = 1/2 * ||X||^2 - h(U)

never increases across iterations. Final hard labels come from k-means
on the membership rows.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from . import trustregion
from .exceptions import ConfigError, RankDeficiencyError
from .multinomial import MultinomialManifold
from .objective import MembershipObjective, build_b, membership_qr
from .tensors import frob_norm, matricize, mode_n_product, multi_mode_project

__all__ = [
    "ClusterConfig",
    "FactorSet",
    "ClusteringResult",
    "uf",
    "update_factor_n",
    "recover_core",
    "hooi",
    "init_random",
    "init_hosvd_i",
    "init_hosvd_ii",
    "kmeans",
    "reconstruct_centroids",
    "fit",
]

INIT_STRATEGIES = ("random", "hosvd_i", "hosvd_ii")


@dataclass
class ClusterConfig:
    """Settings for :func:`fit`.

    ``core_dims`` gives the per-mode core extents for the first N-1
    modes; ``None`` defaults each to ``min(I_n, 12)``. The first
    trust-region call gets a long budget (the initial membership is far
    from informative); later calls polish with a few iterations from the
    current membership.

    Each outer iteration updates the membership before the factor
    sweeps; starting with the factor updates instead is a reasonable
    variant but is not implemented.
    """

    n_clusters: int
    core_dims: tuple | None = None
    max_outer: int = 250
    factor_sweeps_per_outer: int = 2
    rtr_first_call_outer: int = 1000
    rtr_subsequent_outer: int = 5
    rtr_max_inner: int = 30
    rtr_grad_tol: float = 1e-6
    init_strategy: str = "hosvd_i"
    seed: int = 0
    early_stop_rel_tol: float = 1e-8

    def resolved_core_dims(self, shape) -> tuple:
        if self.core_dims is None:
            return tuple(min(int(s), 12) for s in shape[:-1])
        return tuple(int(j) for j in self.core_dims)

    def validate_for(self, shape):
        shape = tuple(int(s) for s in shape)
        if len(shape) < 2:
            raise ConfigError("data tensor must have order >= 2")
        M = shape[-1]
        K = self.n_clusters
        if K < 1:
            raise ConfigError("n_clusters must be at least 1")
        if K > M:
            raise ConfigError(
                f"n_clusters={K} exceeds the number of samples M={M}"
            )
        dims = self.resolved_core_dims(shape)
        if len(dims) != len(shape) - 1:
            raise ConfigError(
                f"core_dims needs {len(shape) - 1} entries, got {len(dims)}"
            )
        for n, (j, i) in enumerate(zip(dims, shape[:-1])):
            if not 1 <= j <= i:
                raise ConfigError(
                    f"core dimension {j} at mode {n} must lie in [1, {i}]"
                )
        if self.init_strategy not in INIT_STRATEGIES:
            raise ConfigError(
                f"init_strategy must be one of {INIT_STRATEGIES}, "
                f"got {self.init_strategy!r}"
            )
        if self.max_outer < 1 or self.factor_sweeps_per_outer < 0:
            raise ConfigError("iteration counts out of range")
        if self.rtr_first_call_outer < 1 or self.rtr_subsequent_outer < 1:
            raise ConfigError("trust-region budgets must be at least 1")


@dataclass
class FactorSet:
    """Model state: orthonormal factors, membership, core and error history."""

    factors: list
    membership: np.ndarray
    core: np.ndarray | None = None
    error_trace: list = field(default_factory=list)

    def validate(self, atol: float = 1e-10):
        for n, U in enumerate(self.factors):
            gram_err = np.linalg.norm(U.T @ U - np.eye(U.shape[1]))
            if gram_err > atol:
                raise ValueError(
                    f"factor {n} lost orthonormality (residual {gram_err:.2e})"
                )
        W = self.membership
        if np.any(W <= 0.0) or np.max(np.abs(W.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("membership is not a valid interior point")
        if self.core is not None:
            expected = tuple(U.shape[1] for U in self.factors) + (W.shape[1],)
            if self.core.shape != expected:
                raise ValueError(
                    f"core shape {self.core.shape} does not match {expected}"
                )


@dataclass
class ClusteringResult:
    labels: np.ndarray
    factors: FactorSet
    centroids: list
    diagnostics: list


def uf(A) -> np.ndarray:
    """Orthonormal polar factor ``P @ Q.T`` of the thin SVD ``A = P S Q.T``."""
    A = np.asarray(A, dtype=np.float64)
    P, s, Qt = np.linalg.svd(A, full_matrices=False)
    if s[-1] <= max(A.shape) * np.finfo(np.float64).eps * s[0]:
        raise RankDeficiencyError("polar factor requires full column rank")
    return P @ Qt


def _leading_left_singular_vectors(M, k) -> np.ndarray:
    P, _, _ = np.linalg.svd(M, full_matrices=False)
    return P[:, :k]


def _project_all_but(X, fs: FactorSet, skip: int | None, with_membership: bool):
    """Project X by U_n^T on every kept mode; optionally by V_N on the last.

    ``V_N = W (W^T W)^{-1} W^T = Q Q^T`` is applied as two thin mode
    products through the QR factor of the membership, so the M x M
    projector is never formed and the error does not square the
    membership's condition number.
    """
    N = X.ndim
    out = X
    for n in range(N - 1):
        if n == skip:
            continue
        out = mode_n_product(out, fs.factors[n].T, n)
    if with_membership:
        Q, _ = membership_qr(fs.membership)
        out = mode_n_product(out, Q.T, N - 1)
        out = mode_n_product(out, Q, N - 1)
    return out


def update_factor_n(X, fs: FactorSet, n: int) -> np.ndarray:
    """Closed-form refresh of factor ``n``: the leading left singular
    subspace of the unfolding of X projected by all other factors."""
    X = np.asarray(X, dtype=np.float64)
    Bn = matricize(_project_all_but(X, fs, skip=n, with_membership=True), n)
    return _leading_left_singular_vectors(Bn, fs.factors[n].shape[1])


def recover_core(X, fs: FactorSet) -> np.ndarray:
    """Least-squares core at the current factors.

    Orthonormal factors enter transposed; the membership enters through
    ``(W^T W)^{-1} W^T = R^{-1} Q^T``.
    """
    X = np.asarray(X, dtype=np.float64)
    out = _project_all_but(X, fs, skip=None, with_membership=False)
    Q, R = membership_qr(fs.membership)
    return mode_n_product(out, solve_triangular(R, Q.T), X.ndim - 1)


def reconstruct_centroids(fs: FactorSet) -> list:
    """Back-project the core's last-mode slices to the data space."""
    if fs.core is None:
        raise ValueError("factor set has no core; run recover_core first")
    full = multi_mode_project(
        fs.core, [(n, U) for n, U in enumerate(fs.factors)]
    )
    return [full[..., k] for k in range(full.shape[-1])]


def hooi(X, dims, max_sweeps: int = 50, rel_tol: float = 1e-8) -> list:
    """Higher-order orthogonal iteration for the all-orthonormal Tucker fit.

    Alternates leading-subspace updates per mode until the relative fit
    change drops below ``rel_tol`` or ``max_sweeps`` is reached. The fit
    (core norm) never decreases.
    """
    X = np.asarray(X, dtype=np.float64)
    dims = tuple(int(j) for j in dims)
    if len(dims) != X.ndim:
        raise ConfigError(f"need {X.ndim} core dimensions, got {len(dims)}")
    factors = [
        _leading_left_singular_vectors(matricize(X, n), dims[n])
        for n in range(X.ndim)
    ]
    prev_fit = None
    for _ in range(max_sweeps):
        for n in range(X.ndim):
            Y = X
            for m in range(X.ndim):
                if m != n:
                    Y = mode_n_product(Y, factors[m].T, m)
            factors[n] = _leading_left_singular_vectors(matricize(Y, n), dims[n])
        core = multi_mode_project(X, [(n, U.T) for n, U in enumerate(factors)])
        fit = frob_norm(core)
        if prev_fit is not None and abs(fit - prev_fit) <= rel_tol * max(prev_fit, 1e-30):
            break
        prev_fit = fit
    return factors


def _random_orthonormal(rng, n_rows, n_cols) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n_rows, n_cols)))
    # fix signs so the draw is a deterministic function of the Gaussian
    return Q * np.sign(np.diag(R))


def _interior_uniform_membership(rng, M, K) -> np.ndarray:
    W = np.full((M, K), 1.0 / K)
    W *= 1.0 + 0.01 * rng.random((M, K))
    return W / W.sum(axis=1, keepdims=True)


def init_random(shape, cfg: ClusterConfig) -> FactorSet:
    """Seeded random orthonormal factors; near-uniform interior membership."""
    shape = tuple(int(s) for s in shape)
    cfg.validate_for(shape)
    dims = cfg.resolved_core_dims(shape)
    rng = np.random.default_rng(cfg.seed)
    factors = [
        _random_orthonormal(rng, shape[n], dims[n]) for n in range(len(shape) - 1)
    ]
    membership = _interior_uniform_membership(rng, shape[-1], cfg.n_clusters)
    return FactorSet(factors=factors, membership=membership)


def init_hosvd_i(X, cfg: ClusterConfig) -> FactorSet:
    """Factors from the plain orthonormal Tucker fit of X; random membership.

    The factors start from the best subspaces for reconstruction, which
    need not reflect clusters, so the first membership optimization gets
    the long trust-region budget in :func:`fit`.
    """
    X = np.asarray(X, dtype=np.float64)
    cfg.validate_for(X.shape)
    dims = cfg.resolved_core_dims(X.shape)
    factors = hooi(X, dims + (min(cfg.n_clusters, X.shape[-1]),))[:-1]
    rng = np.random.default_rng(cfg.seed)
    manifold = MultinomialManifold(X.shape[-1], cfg.n_clusters)
    membership = manifold.random_point(seed=rng.integers(2**63))
    return FactorSet(factors=factors, membership=membership)


def init_hosvd_ii(X, cfg: ClusterConfig) -> FactorSet:
    """Shared-factor fit over the sample slices, leaving the last mode free.

    Alternates leading-subspace updates on the first N-1 modes of the
    stacked tensor with no projection on the sample mode (every slice
    keeps its own core), which minimizes the summed per-slice residual.
    """
    X = np.asarray(X, dtype=np.float64)
    cfg.validate_for(X.shape)
    dims = cfg.resolved_core_dims(X.shape)
    N = X.ndim
    factors = [
        _leading_left_singular_vectors(matricize(X, n), dims[n])
        for n in range(N - 1)
    ]
    prev_fit = None
    for _ in range(50):
        for n in range(N - 1):
            Y = X
            for m in range(N - 1):
                if m != n:
                    Y = mode_n_product(Y, factors[m].T, m)
            factors[n] = _leading_left_singular_vectors(matricize(Y, n), dims[n])
        core = multi_mode_project(X, [(n, U.T) for n, U in enumerate(factors)])
        fit_val = frob_norm(core)
        if prev_fit is not None and abs(fit_val - prev_fit) <= 1e-8 * max(prev_fit, 1e-30):
            break
        prev_fit = fit_val
    rng = np.random.default_rng(cfg.seed)
    membership = _interior_uniform_membership(rng, X.shape[-1], cfg.n_clusters)
    return FactorSet(factors=factors, membership=membership)


_INITIALIZERS = {
    "random": lambda X, cfg: init_random(X.shape, cfg),
    "hosvd_i": init_hosvd_i,
    "hosvd_ii": init_hosvd_ii,
}


def _canonical_relabel(labels, keys, tol=1e-8) -> np.ndarray:
    """Renumber clusters by tolerance-aware lexicographic order of ``keys``.

    ``keys[k]`` is a representative vector for cluster ``k``. Coordinates
    closer than ``tol`` are treated as tied so that floating-point noise
    cannot flip the ordering; exact ties fall back to the original index.
    """
    keys = [np.asarray(k, dtype=np.float64).ravel() for k in keys]
    finite_max = max(
        (float(np.max(np.abs(k[np.isfinite(k)]))) for k in keys
         if np.isfinite(k).any()),
        default=0.0,
    )
    scale_tol = tol * (1.0 + finite_max)

    def compare(i, j):
        for x, y in zip(keys[i], keys[j]):
            if abs(x - y) > scale_tol:
                return -1 if x < y else 1
        return 0

    order = sorted(range(len(keys)), key=functools.cmp_to_key(compare))
    relabel = np.empty(len(keys), dtype=np.int64)
    relabel[order] = np.arange(len(keys))
    return relabel[labels]


def _kmeans_pp_centers(rows, K, rng) -> np.ndarray:
    M = rows.shape[0]
    centers = np.empty((K, rows.shape[1]))
    centers[0] = rows[rng.integers(M)]
    d2 = np.sum((rows - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng.integers(M))
        else:
            idx = int(np.searchsorted(np.cumsum(d2 / total), rng.random()))
            idx = min(idx, M - 1)
        centers[k] = rows[idx]
        d2 = np.minimum(d2, np.sum((rows - centers[k]) ** 2, axis=1))
    return centers


def kmeans(rows, n_clusters: int, seed=0, n_restarts: int = 20,
           max_iter: int = 300) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding, best of ``n_restarts``.

    Deterministic for a fixed seed. Empty clusters are re-seeded from the
    point farthest from its assigned center. Ties in assignment go to the
    lowest cluster index; output ids are canonicalized by lexicographic
    order of the final centers so equal partitions get equal labelings.
    """
    rows = np.asarray(rows, dtype=np.float64)
    M = rows.shape[0]
    if n_clusters < 1 or n_clusters > M:
        raise ConfigError(f"need 1 <= n_clusters <= {M}, got {n_clusters}")
    rng = np.random.default_rng(seed)
    best_labels = None
    best_centers = None
    best_wcss = np.inf

    for _ in range(n_restarts):
        centers = _kmeans_pp_centers(rows, n_clusters, rng)
        labels = None
        for _ in range(max_iter):
            d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = np.argmin(d2, axis=1)
            counts = np.bincount(new_labels, minlength=n_clusters)
            if np.any(counts == 0):
                # move each empty center onto the currently worst-served point
                dist_own = d2[np.arange(M), new_labels]
                order = np.argsort(-dist_own)
                used = 0
                for k in np.flatnonzero(counts == 0):
                    centers[k] = rows[order[used]]
                    used += 1
                continue
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for k in range(n_clusters):
                centers[k] = rows[labels == k].mean(axis=0)
        d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        wcss = float(d2[np.arange(M), labels].sum())
        if wcss < best_wcss:
            best_wcss = wcss
            best_labels = labels
            best_centers = centers.copy()

    return _canonical_relabel(best_labels, list(best_centers))


def fit(X, cfg: ClusterConfig, iteration_callback=None) -> ClusteringResult:
    """Run the full alternating scheme and return hard cluster assignments.

    Per outer iteration: a trust-region pass over the membership, then
    ``factor_sweeps_per_outer`` closed-form sweeps over the orthonormal
    factors. Stops early once the relative model-error change drops below
    ``early_stop_rel_tol``. ``iteration_callback(t, factor_set)`` runs
    after each outer iteration when given.
    """
    X = np.asarray(X, dtype=np.float64)
    cfg.validate_for(X.shape)
    N = X.ndim
    M = X.shape[-1]
    K = cfg.n_clusters

    fs = _INITIALIZERS[cfg.init_strategy](X, cfg)
    manifold = MultinomialManifold(M, K)
    half_norm2 = 0.5 * frob_norm(X) ** 2

    diagnostics = []
    f_prev = None
    B = build_b(X, fs.factors)
    for t in range(cfg.max_outer):
        objective = MembershipObjective(B)
        rtr_cfg = trustregion.TrustRegionConfig(
            max_outer=(cfg.rtr_first_call_outer if t == 0
                       else cfg.rtr_subsequent_outer),
            max_inner=cfg.rtr_max_inner,
            grad_tol=cfg.rtr_grad_tol,
        )
        fs.membership, stats = trustregion.solve(
            objective, manifold, fs.membership, rtr_cfg
        )

        for _ in range(cfg.factor_sweeps_per_outer):
            for n in range(N - 1):
                fs.factors[n] = update_factor_n(X, fs, n)

        B = build_b(X, fs.factors)
        h = -MembershipObjective(B).value(fs.membership)
        f = half_norm2 - h
        fs.error_trace.append(f)
        diagnostics.append(stats)
        if iteration_callback is not None:
            iteration_callback(t, fs)
        if f_prev is not None and abs(f - f_prev) <= cfg.early_stop_rel_tol * max(f_prev, 1e-30):
            break
        f_prev = f

    labels = kmeans(fs.membership, K, seed=cfg.seed)
    # renumber by data-space cluster means: unlike the membership rows,
    # these do not depend on the gauge of the membership column span, so
    # equal partitions get equal label ids
    keys = []
    for k in range(K):
        members = labels == k
        if members.any():
            keys.append(X[..., members].mean(axis=-1).ravel())
        else:
            keys.append(np.full(int(np.prod(X.shape[:-1])), np.inf))
    labels = _canonical_relabel(labels, keys)
    fs.core = recover_core(X, fs)
    centroids = reconstruct_centroids(fs)
    return ClusteringResult(
        labels=labels, factors=fs, centroids=centroids, diagnostics=diagnostics
    )
