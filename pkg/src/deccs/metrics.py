"""Partition comparison: contingency tables, NMI, ARI and ensemble agreement.

Partitions are plain integer arrays. NMI uses natural-log entropies and the
geometric-mean normalisation; single-cluster partitions get NMI 1 when both
sides describe the same grouping and 0 otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np


def as_partition(labels) -> np.ndarray:
    p = np.asarray(labels)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("a partition must be a non-empty 1-d label array")
    if not np.issubdtype(p.dtype, np.integer):
        if np.any(p != np.round(p)):
            raise ValueError("partition labels must be integers")
        p = p.astype(np.int64)
    if p.min() < 0:
        raise ValueError("partition labels must be non-negative")
    return p


def canonical_labels(labels) -> np.ndarray:
    """Renumber labels 0, 1, ... in order of first occurrence."""
    p = np.asarray(labels)
    _, first, inverse = np.unique(p, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()]


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = as_partition(a), as_partition(b)
    if a.size != b.size:
        raise ValueError(f"partition lengths differ: {a.size} vs {b.size}")
    return a, b


def contingency(a, b) -> ContingencyTable:
    a, b = _check_pair(a, b)
    counts = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(counts, (a, b), 1)
    return ContingencyTable(counts)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    # fsum is order independent, which keeps nmi(a, b) == nmi(b, a) bit-exact
    return -math.fsum(p * np.log(p))


def nmi(a, b) -> float:
    table = contingency(a, b)
    n = table.n
    rows, cols = table.row_sums, table.col_sums
    h_a, h_b = _entropy(rows, n), _entropy(cols, n)
    if h_a == 0.0 or h_b == 0.0:
        # identical set partitions iff both are single-cluster
        return 1.0 if h_a == h_b else 0.0
    nz = table.counts > 0
    if nz.sum(axis=0).max() == 1 and nz.sum(axis=1).max() == 1:
        # same set partition up to relabelling: exactly 1, no rounding
        return 1.0
    c = table.counts[nz].astype(float)
    outer = np.outer(rows, cols)[nz].astype(float)
    mi = math.fsum(c / n * (np.log(c) + np.log(n) - np.log(outer)))
    value = mi / np.sqrt(h_a * h_b)
    return float(min(max(value, 0.0), 1.0))


def _comb2(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def ari(a, b) -> float:
    table = contingency(a, b)
    n = table.n
    if n < 2:
        raise ValueError("ARI needs at least two items")
    index = _comb2(table.counts).sum()
    sum_a = _comb2(table.row_sums).sum()
    sum_b = _comb2(table.col_sums).sum()
    expected = sum_a * sum_b / _comb2(n)
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        # both trivial (all-one-cluster or all-singletons) on the same side
        return 1.0 if index == max_index else 0.0
    return float((index - expected) / (max_index - expected))


def _check_ensemble(partitions: Sequence) -> list[np.ndarray]:
    if len(partitions) < 2:
        raise ValueError("need at least two partitions")
    parts = [as_partition(p) for p in partitions]
    n = parts[0].size
    if any(p.size != n for p in parts):
        raise ValueError("all partitions must have the same length")
    return parts


def pairwise_nmi(partitions: Sequence) -> np.ndarray:
    """Symmetric matrix of NMI values with ones on the diagonal."""
    parts = _check_ensemble(partitions)
    m = len(parts)
    out = np.eye(m)
    for i, j in combinations(range(m), 2):
        out[i, j] = out[j, i] = nmi(parts[i], parts[j])
    return out


def agreement(partitions: Sequence) -> float:
    """Mean NMI over all unordered pairs of distinct partitions."""
    mat = pairwise_nmi(partitions)
    iu = np.triu_indices(mat.shape[0], k=1)
    return float(mat[iu].mean())


def consensus_objective(partitions: Sequence) -> float:
    """c * sum_{i<j} NMI(p_i, p_j) with c = 2 / (m^2 - m)."""
    parts = _check_ensemble(partitions)
    m = len(parts)
    c = 2.0 / (m * m - m)
    return c * sum(nmi(parts[i], parts[j]) for i, j in combinations(range(m), 2))


def lambda_weights(partitions: Sequence) -> np.ndarray:
    """Average NMI of each partition with every other partition."""
    mat = pairwise_nmi(partitions)
    m = mat.shape[0]
    return (mat.sum(axis=1) - 1.0) / (m - 1)


def anmi(candidate, base: Sequence) -> float:
    """Sum of NMI between ``candidate`` and each base partition."""
    if len(base) < 1:
        raise ValueError("need at least one base partition")
    return float(sum(nmi(p, candidate) for p in base))


def effective_k(labels, min_fraction: float = 0.01) -> int:
    """Number of clusters holding at least ``min_fraction`` of the points."""
    p = as_partition(labels)
    counts = np.bincount(p)
    return int((counts >= min_fraction * p.size).sum())
