"""Clustering evaluation: accuracy under optimal label matching, and NMI.

Accuracy maximizes the number of agreeing samples over injective maps
from predicted to true class ids; the optimal map comes from a minimum
cost assignment on the negated contingency table. Normalized mutual
information uses base-2 logarithms and is normalized by the larger of
the two marginal entropies.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatchError

__all__ = ["accuracy", "kuhn_munkres", "nmi", "contingency_table"]


def _compact(labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValueError("labels must be a non-empty 1-D sequence")
    _, inverse = np.unique(labels, return_inverse=True)
    return inverse


def contingency_table(L, Lhat) -> np.ndarray:
    """Joint count table with true classes on rows, predicted on columns."""
    L = _compact(L)
    Lhat = _compact(Lhat)
    if L.shape != Lhat.shape:
        raise DimensionMismatchError(
            f"label vectors differ in length: {L.size} vs {Lhat.size}"
        )
    n_true = int(L.max()) + 1
    n_pred = int(Lhat.max()) + 1
    table = np.zeros((n_true, n_pred), dtype=np.int64)
    np.add.at(table, (L, Lhat), 1)
    return table


def kuhn_munkres(cost) -> np.ndarray:
    """Minimum-cost perfect matching of a cost matrix.

    Rectangular inputs are zero-padded to square. Returns an integer
    array ``assign`` over the padded square, with ``assign[i]`` the
    column matched to row ``i``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2:
        raise ValueError("cost must be a matrix")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    n = max(cost.shape)
    a = np.zeros((n + 1, n + 1))
    a[1:cost.shape[0] + 1, 1:cost.shape[1] + 1] = cost

    # shortest-augmenting-path Hungarian with dual potentials, O(n^3)
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    match = np.zeros(n + 1, dtype=np.int64)   # match[j] = row assigned to column j
    way = np.zeros(n + 1, dtype=np.int64)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = np.inf
            j1 = 0
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = a[i0, j] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0 != 0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1

    assign = np.zeros(n, dtype=np.int64)
    for j in range(1, n + 1):
        if match[j] != 0:
            assign[match[j] - 1] = j - 1
    return assign


def accuracy(L, Lhat) -> float:
    """Fraction of samples matched under the best predicted-to-true class map."""
    table = contingency_table(L, Lhat)
    # rows of the assignment problem are predicted classes
    assign = kuhn_munkres(-table.T.astype(np.float64))
    n_pred, n_true = table.T.shape
    matched = 0
    for pred_class in range(n_pred):
        true_class = assign[pred_class]
        if true_class < n_true:
            matched += table[true_class, pred_class]
    return float(matched) / float(table.sum())


def nmi(L, Lhat) -> float:
    """Normalized mutual information in [0, 1], base-2 logarithms."""
    table = contingency_table(L, Lhat).astype(np.float64)
    M = table.sum()
    joint = table / M
    p_true = joint.sum(axis=1)
    p_pred = joint.sum(axis=0)

    def entropy(p):
        p = p[p > 0]
        return float(-np.sum(p * np.log2(p)))

    h_max = max(entropy(p_true), entropy(p_pred))
    if h_max == 0.0:
        # both labelings are single-cluster: identical partitions
        return 1.0
    nz = joint > 0
    outer = np.outer(p_true, p_pred)
    mi = float(np.sum(joint[nz] * np.log2(joint[nz] / outer[nz])))
    return mi / h_max
