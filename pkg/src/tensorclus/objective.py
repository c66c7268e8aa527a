"""Membership objective for the last tensor mode.

With the orthonormal factors of the first N-1 modes fixed, the model fit
reduces to maximizing ``tr(B^T U (U^T U)^{-1} U^T B)`` over the membership
matrix U, where B collects the projected sample vectors row by row. This
module exposes the minimization form

    F(U) = -1/2 * tr(B^T U (U^T U)^{-1} U^T B)

together with its Euclidean gradient and the directional derivative of
that gradient, which the trust-region solver converts to Riemannian
objects.

All inverses of the K x K Gram matrix U^T U are applied through a thin QR
factorization of U (so the error scales with cond(U), not its square, and
the value itself reduces to ``-1/2 ||Q^T B||^2`` which is accurate to
machine precision); the M x M projector and B B^T are never formed.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import DimensionMismatchError, RankDeficiencyError
from .tensors import matricize, mode_n_product

__all__ = ["build_b", "MembershipObjective", "membership_qr"]

GRAM_COND_LIMIT = 1e12


def membership_qr(U):
    """Thin QR of a membership matrix with a Gram-condition rank check."""
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape[0] < U.shape[1]:
        raise DimensionMismatchError(
            f"membership must be a tall matrix, got shape {U.shape}"
        )
    ev = np.linalg.eigvalsh(U.T @ U)
    if ev[0] <= 0.0 or ev[-1] / ev[0] > GRAM_COND_LIMIT:
        raise RankDeficiencyError(
            "membership matrix is numerically rank deficient"
        )
    return np.linalg.qr(U)


def build_b(X, factors) -> np.ndarray:
    """Project ``X`` by ``U_n^T`` on every mode but the last and unfold.

    Parameters
    ----------
    X : ndarray
        Data tensor of order N with samples stacked on the last mode.
    factors : sequence of ndarray
        N-1 matrices with orthonormal columns; ``factors[n]`` has
        ``X.shape[n]`` rows.

    Returns
    -------
    ndarray of shape (M, prod of factor column counts), equal to
    ``matricize(X, N-1) @ kron(factors[-1], ..., factors[0])``.
    """
    X = np.asarray(X, dtype=np.float64)
    if len(factors) != X.ndim - 1:
        raise DimensionMismatchError(
            f"need {X.ndim - 1} factors for an order-{X.ndim} tensor, "
            f"got {len(factors)}"
        )
    out = X
    for n, U in enumerate(factors):
        out = mode_n_product(out, np.asarray(U, dtype=np.float64).T, n)
    return matricize(out, X.ndim - 1)


class MembershipObjective:
    """Evaluate F, its Euclidean gradient, and the gradient's derivative.

    Instances are immutable; all methods are pure and reusable across
    candidate membership matrices.
    """

    def __init__(self, B):
        B = np.asarray(B, dtype=np.float64)
        if B.ndim != 2:
            raise DimensionMismatchError("B must be a matrix")
        if not np.all(np.isfinite(B)):
            raise ValueError("B must have finite entries")
        self.B = B
        self.n_samples = B.shape[0]

    def _qr(self, U):
        if U.ndim != 2 or U.shape[0] != self.n_samples:
            raise DimensionMismatchError(
                f"membership must have {self.n_samples} rows, got {U.shape}"
            )
        return membership_qr(U)

    def value(self, U) -> float:
        """F(U); always in [-norm(B)^2 / 2, 0]."""
        U = np.asarray(U, dtype=np.float64)
        Q, _ = self._qr(U)
        return -0.5 * float(np.sum((Q.T @ self.B) ** 2))

    def euclidean_gradient(self, U) -> np.ndarray:
        U = np.asarray(U, dtype=np.float64)
        Q, R = self._qr(U)
        W = solve_triangular(R, Q.T).T              # U (U^T U)^{-1} = Q R^{-T}
        BT = self.B @ (self.B.T @ W)                # B B^T U (U^T U)^{-1}
        return -BT + W @ (U.T @ BT)

    def euclidean_gradient_derivative(self, U, xi) -> np.ndarray:
        """Directional derivative of :meth:`euclidean_gradient` along ``xi``."""
        U = np.asarray(U, dtype=np.float64)
        xi = np.asarray(xi, dtype=np.float64)
        if xi.shape != U.shape:
            raise DimensionMismatchError(
                f"direction shape {xi.shape} does not match {U.shape}"
            )
        Q, R = self._qr(U)

        def rsolve(Z):
            # Z @ (U^T U)^{-1} = Z @ R^{-1} @ R^{-T}
            half = solve_triangular(R, Z.T, trans="T")
            return solve_triangular(R, half).T

        W = solve_triangular(R, Q.T).T               # U C^{-1} = Q R^{-T}
        S = U.T @ self.B                             # K x P
        G1 = S @ S.T                                 # U^T B B^T U
        Bt_xi = self.B.T @ xi                        # P x K
        sym1 = 0.5 * (xi.T @ U + U.T @ xi)           # sym(xi^T U)
        M1 = Bt_xi.T @ S.T                           # xi^T B B^T U
        sym2 = 0.5 * (M1 + M1.T)

        out = -rsolve(self.B @ Bt_xi)
        out += rsolve(rsolve(xi) @ G1)
        out += 2.0 * rsolve(self.B @ (self.B.T @ W) @ sym1)
        out += 2.0 * rsolve(W @ sym2)
        out -= 2.0 * W @ rsolve(rsolve(sym1) @ G1)
        out -= 2.0 * W @ rsolve(rsolve(G1) @ sym1)
        return out
