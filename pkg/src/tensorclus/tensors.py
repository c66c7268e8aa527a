"""Dense multilinear algebra primitives.

Tensors are plain ``numpy.ndarray`` objects of float64; a matrix is the
2D case. Modes are 0-based. Unfoldings use the Kolda-Bader column
ordering: for ``matricize(X, n)``, the column index runs over the
remaining modes with the lowest-numbered mode varying fastest, so that

    ``Y = X x_0 A_0 x_1 A_1 ...``  implies
    ``matricize(Y, n) = A_n @ matricize(X, n) @ kron(A_last, ..., A_first skipping n).T``

All operations validate shapes eagerly and never broadcast silently.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatchError, InvalidModeError

__all__ = [
    "mode_n_product",
    "matricize",
    "fold",
    "kron",
    "stack_last_mode",
    "multi_mode_project",
    "frob_norm",
    "inner",
]


def _as_tensor(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim < 1:
        X = X.reshape(1)
    return X


def _check_mode(X: np.ndarray, mode: int) -> None:
    if not 0 <= mode < X.ndim:
        raise InvalidModeError(
            f"mode {mode} out of range for order-{X.ndim} tensor"
        )


def mode_n_product(X, U, mode: int) -> np.ndarray:
    """Contract mode ``mode`` of tensor ``X`` with the columns of matrix ``U``.

    ``U`` has shape (J, I_mode); the result replaces the extent of
    ``mode`` by J:  ``out[..., j, ...] = sum_i U[j, i] * X[..., i, ...]``.
    """
    X = _as_tensor(X)
    U = np.asarray(U, dtype=np.float64)
    _check_mode(X, mode)
    if U.ndim != 2:
        raise DimensionMismatchError(f"factor must be a matrix, got ndim={U.ndim}")
    if U.shape[1] != X.shape[mode]:
        raise DimensionMismatchError(
            f"factor has {U.shape[1]} columns but mode {mode} has extent "
            f"{X.shape[mode]}"
        )
    out = np.tensordot(U, X, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def matricize(X, mode: int) -> np.ndarray:
    """Unfold ``X`` along ``mode`` into an (I_mode, prod of the rest) matrix."""
    X = _as_tensor(X)
    _check_mode(X, mode)
    return np.reshape(
        np.moveaxis(X, mode, 0), (X.shape[mode], -1), order="F"
    )


def fold(M, mode: int, shape) -> np.ndarray:
    """Inverse of :func:`matricize`: rebuild a tensor of ``shape`` from its unfolding."""
    M = np.asarray(M, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if not 0 <= mode < len(shape):
        raise InvalidModeError(f"mode {mode} out of range for shape {shape}")
    rest = shape[:mode] + shape[mode + 1:]
    if M.shape != (shape[mode], int(np.prod(rest, dtype=np.int64))):
        raise DimensionMismatchError(
            f"unfolding shape {M.shape} inconsistent with tensor shape {shape} "
            f"at mode {mode}"
        )
    return np.moveaxis(
        np.reshape(M, (shape[mode],) + rest, order="F"), 0, mode
    )


def kron(A, B) -> np.ndarray:
    """Kronecker product with block structure ``A[i, j] * B``."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.ndim != 2 or B.ndim != 2:
        raise DimensionMismatchError("kron operands must be matrices")
    return np.kron(A, B)


def stack_last_mode(slices) -> np.ndarray:
    """Stack M equally shaped tensors along a new final mode of extent M."""
    slices = [_as_tensor(s) for s in slices]
    if not slices:
        raise DimensionMismatchError("cannot stack an empty list of slices")
    shape = slices[0].shape
    for i, s in enumerate(slices):
        if s.shape != shape:
            raise DimensionMismatchError(
                f"slice {i} has shape {s.shape}, expected {shape}"
            )
    return np.stack(slices, axis=len(shape))


def multi_mode_project(X, factors) -> np.ndarray:
    """Apply ``mode_n_product`` for each ``(mode, matrix)`` pair in ``factors``.

    Modes must be distinct; the result does not depend on the order of
    application.
    """
    X = _as_tensor(X)
    modes = [m for m, _ in factors]
    if len(set(modes)) != len(modes):
        raise InvalidModeError(f"modes must be distinct, got {modes}")
    out = X
    for mode, U in factors:
        out = mode_n_product(out, U, mode)
    return out


def frob_norm(X) -> float:
    """Frobenius norm over all elements."""
    return float(np.linalg.norm(np.asarray(X, dtype=np.float64).ravel()))


def inner(X, Y) -> float:
    """Elementwise inner product of two tensors with identical shape."""
    X = _as_tensor(X)
    Y = _as_tensor(Y)
    if X.shape != Y.shape:
        raise DimensionMismatchError(
            f"inner product needs matching shapes, got {X.shape} and {Y.shape}"
        )
    return float(np.dot(X.ravel(), Y.ravel()))
