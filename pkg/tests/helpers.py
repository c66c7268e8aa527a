"""Independent oracle implementations used to pin expected test values.

Everything here is written from definitions (explicit loops, exhaustive
enumeration, dense solves) and stays independent of the library code
paths it checks.
"""

import itertools

import numpy as np


def random_orthonormal(rng, n_rows, n_cols):
    Q, _ = np.linalg.qr(rng.standard_normal((n_rows, n_cols)))
    return Q


def interior_membership(rng, n_rows, n_cols):
    W = rng.random((n_rows, n_cols)) + 0.1
    return W / W.sum(axis=1, keepdims=True)


def oracle_mode_product(X, U, mode):
    """Elementwise triple-loop n-mode product."""
    X = np.asarray(X, dtype=float)
    U = np.asarray(U, dtype=float)
    out_shape = list(X.shape)
    out_shape[mode] = U.shape[0]
    out = np.zeros(out_shape)
    for out_idx in itertools.product(*[range(s) for s in out_shape]):
        j = out_idx[mode]
        total = 0.0
        for i in range(X.shape[mode]):
            src = list(out_idx)
            src[mode] = i
            total += X[tuple(src)] * U[j, i]
        out[out_idx] = total
    return out


def oracle_matricize(X, mode):
    """Index-map unfolding: remaining modes enumerated lowest-first."""
    X = np.asarray(X, dtype=float)
    rest = [m for m in range(X.ndim) if m != mode]
    n_cols = int(np.prod([X.shape[m] for m in rest])) if rest else 1
    out = np.zeros((X.shape[mode], n_cols))
    for idx in itertools.product(*[range(s) for s in X.shape]):
        col = 0
        stride = 1
        for m in rest:
            col += idx[m] * stride
            stride *= X.shape[m]
        out[idx[mode], col] = X[idx]
    return out


def oracle_kron(A, B):
    """Four-loop block Kronecker product."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    out = np.zeros((A.shape[0] * B.shape[0], A.shape[1] * B.shape[1]))
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            for p in range(B.shape[0]):
                for q in range(B.shape[1]):
                    out[i * B.shape[0] + p, j * B.shape[1] + q] = A[i, j] * B[p, q]
    return out


def oracle_fisher_projection(U, Z):
    """Per-row least squares onto {v : sum(v) = 0} in the Fisher norm."""
    U = np.asarray(U, dtype=float)
    Z = np.asarray(Z, dtype=float)
    K = U.shape[1]
    # basis of the zero-sum subspace
    basis = np.eye(K)[:, : K - 1] - np.eye(K)[:, 1:]
    out = np.zeros_like(Z)
    for m in range(U.shape[0]):
        D = np.diag(1.0 / U[m])
        lhs = basis.T @ D @ basis
        rhs = basis.T @ D @ Z[m]
        out[m] = basis @ np.linalg.solve(lhs, rhs)
    return out


def oracle_assignment_cost(cost):
    """Exhaustive minimum assignment cost of a square matrix."""
    cost = np.asarray(cost, dtype=float)
    n = cost.shape[0]
    best = np.inf
    best_perm = None
    for perm in itertools.permutations(range(n)):
        total = sum(cost[i, perm[i]] for i in range(n))
        if total < best:
            best = total
            best_perm = perm
    return best, best_perm


def oracle_accuracy(L, Lhat):
    """Best-map accuracy via exhaustive search over injective class maps."""
    L = np.asarray(L)
    Lhat = np.asarray(Lhat)
    true_classes = list(np.unique(L))
    pred_classes = list(np.unique(Lhat))
    size = max(len(true_classes), len(pred_classes))
    best = 0
    for perm in itertools.permutations(range(size)):
        matched = 0
        for p_idx, p in enumerate(pred_classes):
            t_idx = perm[p_idx]
            if t_idx < len(true_classes):
                matched += int(np.sum((Lhat == p) & (L == true_classes[t_idx])))
        best = max(best, matched)
    return best / L.size


def oracle_partition_score(B, assignment):
    """h value of a hard 2-cluster indicator built from ``assignment``."""
    B = np.asarray(B, dtype=float)
    M = B.shape[0]
    U = np.zeros((M, 2))
    U[np.arange(M), assignment] = 1.0
    P = U @ np.linalg.pinv(U.T @ U) @ U.T
    return 0.5 * np.trace(B.T @ P @ B)


def oracle_best_bipartition(B):
    """Exhaustive best 2-cluster partition of the rows of B (M <= 12)."""
    M = B.shape[0]
    best_score = -np.inf
    best_assign = None
    for bits in range(1, 2 ** (M - 1)):
        assign = np.array([(bits >> i) & 1 for i in range(M)])
        if assign.min() == assign.max():
            continue
        score = oracle_partition_score(B, assign)
        if score > best_score:
            best_score = score
            best_assign = assign
    return best_assign, best_score


def oracle_tangent_model_minimizer(manifold, U, grad, hess_operator):
    """Dense solve of the quadratic model's normal equations in a tangent basis."""
    M, K = U.shape
    basis = []
    for m in range(M):
        for k in range(K - 1):
            E = np.zeros((M, K))
            E[m, k] = 1.0
            E[m, K - 1] = -1.0
            basis.append(E)
    dim = len(basis)
    A = np.zeros((dim, dim))
    b = np.zeros(dim)
    for i, Ei in enumerate(basis):
        HEi = hess_operator(Ei)
        b[i] = -manifold.inner(U, grad, Ei)
        for j, Ej in enumerate(basis):
            A[i, j] = manifold.inner(U, HEi, Ej)
    coeffs = np.linalg.solve(0.5 * (A + A.T), b)
    out = np.zeros((M, K))
    for c, E in zip(coeffs, basis):
        out += c * E
    return out
