"""Riemannian geometry of row-stochastic membership matrices.

Points are M x K matrices with strictly positive entries and unit row
sums (each row lives on the open probability simplex). Tangent vectors
are M x K matrices with zero row sums. The Riemannian structure is the
Fisher information metric,

    g_U(xi, eta) = sum_{m,k} xi[m,k] * eta[m,k] / U[m,k],

under which the tangent projection of an ambient matrix Z is
``Z - (Z @ 1) 1^T * U``. Moves along tangent directions use the
renormalized elementwise-exponential retraction.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatchError, NumericalError

__all__ = ["MultinomialManifold"]

# Entries this small are pushed back into the interior after a retraction;
# the Fisher metric divides by them, so exact zeros are not representable.
POSITIVITY_FLOOR = 1e-16


class MultinomialManifold:
    """Product of M open probability simplices in R^K with the Fisher metric."""

    def __init__(self, n_rows: int, n_cols: int):
        if n_rows < 1 or n_cols < 1:
            raise ValueError("manifold dimensions must be positive")
        self.n_rows = int(n_rows)
        self.n_cols = int(n_cols)

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    # -- validation -----------------------------------------------------

    def _check(self, *arrays):
        for A in arrays:
            if A.shape != self.shape:
                raise DimensionMismatchError(
                    f"expected shape {self.shape}, got {A.shape}"
                )

    def is_point(self, U, tol: float = 1e-12) -> bool:
        U = np.asarray(U)
        return (
            U.shape == self.shape
            and bool(np.all(U > 0.0))
            and bool(np.all(np.abs(U.sum(axis=1) - 1.0) <= tol))
        )

    def is_tangent(self, xi, tol: float = 1e-12) -> bool:
        xi = np.asarray(xi)
        return xi.shape == self.shape and bool(
            np.all(np.abs(xi.sum(axis=1)) <= tol)
        )

    # -- metric ----------------------------------------------------------

    def inner(self, U, xi, eta) -> float:
        """Fisher information inner product at ``U``."""
        U = np.asarray(U, dtype=np.float64)
        xi = np.asarray(xi, dtype=np.float64)
        eta = np.asarray(eta, dtype=np.float64)
        self._check(U, xi, eta)
        return float(np.sum(xi * eta / U))

    def norm(self, U, xi) -> float:
        return float(np.sqrt(max(self.inner(U, xi, xi), 0.0)))

    # -- tangent space ----------------------------------------------------

    def project(self, U, Z) -> np.ndarray:
        """Orthogonal (w.r.t. the Fisher metric) projection of ``Z`` onto T_U."""
        U = np.asarray(U, dtype=np.float64)
        Z = np.asarray(Z, dtype=np.float64)
        self._check(U, Z)
        alpha = Z.sum(axis=1, keepdims=True)
        return Z - alpha * U

    def zero_vector(self, U=None) -> np.ndarray:
        return np.zeros(self.shape)

    # -- retraction --------------------------------------------------------

    def retract(self, U, xi, t: float = 1.0) -> np.ndarray:
        """Move from ``U`` along ``t * xi`` and renormalize rows.

        Computes ``U * exp(t * xi / U)`` row-renormalized. The exponent is
        shifted by its per-row maximum before exponentiation (the map is
        invariant under per-row constant shifts) so overflow cannot occur.
        Output entries are floored at ``POSITIVITY_FLOOR``.
        """
        U = np.asarray(U, dtype=np.float64)
        xi = np.asarray(xi, dtype=np.float64)
        self._check(U, xi)
        if not np.isfinite(t) or not np.all(np.isfinite(xi)):
            raise NumericalError("retraction got non-finite input")
        if t == 0.0 or not xi.any():
            return U.copy()
        S = t * (xi / U)
        S -= S.max(axis=1, keepdims=True)
        W = U * np.exp(S)
        W = np.maximum(W, POSITIVITY_FLOOR)
        W /= W.sum(axis=1, keepdims=True)
        W = np.maximum(W, POSITIVITY_FLOOR)
        return W / W.sum(axis=1, keepdims=True)

    # -- derivative conversions ---------------------------------------------

    def egrad_to_rgrad(self, U, egrad) -> np.ndarray:
        """Riemannian gradient from the Euclidean gradient at ``U``.

        The metric rescales the ambient gradient elementwise by ``U``; the
        result is then projected onto the tangent space.
        """
        U = np.asarray(U, dtype=np.float64)
        egrad = np.asarray(egrad, dtype=np.float64)
        self._check(U, egrad)
        return self.project(U, egrad * U)

    def ehess_to_rhess(self, U, egrad, ehess_xi, xi) -> np.ndarray:
        """Riemannian Hessian along ``xi`` from ambient derivatives.

        Parameters
        ----------
        egrad : Euclidean gradient at ``U``.
        ehess_xi : Euclidean directional derivative of the Euclidean
            gradient along ``xi``.
        xi : tangent direction.

        The ambient directional derivative of the Riemannian gradient is
        assembled by differentiating ``project(U, egrad * U)`` through both
        arguments, then corrected by the metric's connection term
        ``-(xi * rgrad) / (2 U)`` and projected back to the tangent space.
        """
        U = np.asarray(U, dtype=np.float64)
        G = np.asarray(egrad, dtype=np.float64)
        DG = np.asarray(ehess_xi, dtype=np.float64)
        xi = np.asarray(xi, dtype=np.float64)
        self._check(U, G, DG, xi)

        scaled = G * U
        alpha = scaled.sum(axis=1, keepdims=True)
        dalpha = (DG * U + G * xi).sum(axis=1, keepdims=True)
        dgrad = DG * U + G * xi - alpha * xi - dalpha * U

        rgrad = scaled - alpha * U
        return self.project(U, dgrad - 0.5 * (xi * rgrad) / U)

    # -- random elements -----------------------------------------------------

    def random_point(self, seed=None) -> np.ndarray:
        """Seeded uniform draw from the product of open simplices."""
        rng = np.random.default_rng(seed)
        U = rng.dirichlet(np.ones(self.n_cols), size=self.n_rows)
        U = np.maximum(U, 1e-12)
        return U / U.sum(axis=1, keepdims=True)

    def random_tangent(self, U, seed=None) -> np.ndarray:
        """Seeded tangent vector at ``U`` with unit Fisher norm.

        Returns the zero vector when the tangent space is trivial (K = 1).
        """
        U = np.asarray(U, dtype=np.float64)
        self._check(U)
        rng = np.random.default_rng(seed)
        xi = self.project(U, rng.standard_normal(self.shape))
        nrm = self.norm(U, xi)
        if nrm == 0.0:
            return np.zeros(self.shape)
        return xi / nrm
