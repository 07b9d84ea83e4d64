"""Partition similarity: variation of information, chance-adjusted mutual
information with symmetric normalization, and element-centric similarity.

All entropies use the natural logarithm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .graph import Partition


class DegenerateSimilarityError(ValueError):
    """Raised when the symmetric AMI normalization is zero for distinct partitions."""


def _labels(p) -> np.ndarray:
    return p.labels if isinstance(p, Partition) else Partition(np.asarray(p)).labels


def _ordered(p1, p2) -> tuple[np.ndarray, np.ndarray]:
    # fixed argument order makes symmetric measures bitwise symmetric
    l1, l2 = _labels(p1), _labels(p2)
    if len(l1) == len(l2) and l1.tobytes() > l2.tobytes():
        return l2, l1
    return l1, l2


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray  # (c1, c2) integer overlaps n_uv
    n: int

    @property
    def a(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def b(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def contingency(p1, p2) -> ContingencyTable:
    l1, l2 = _labels(p1), _labels(p2)
    if len(l1) != len(l2):
        raise ValueError(f"partitions cover different node counts ({len(l1)} vs {len(l2)})")
    c1, c2 = l1.max() + 1, l2.max() + 1
    counts = np.bincount(l1 * c2 + l2, minlength=c1 * c2).reshape(c1, c2)
    return ContingencyTable(counts=counts, n=len(l1))


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def _mutual_information(ct: ContingencyTable) -> float:
    nz = ct.counts > 0
    nij = ct.counts[nz].astype(float)
    a = np.broadcast_to(ct.a[:, None], ct.counts.shape)[nz]
    b = np.broadcast_to(ct.b[None, :], ct.counts.shape)[nz]
    return float(max((nij / ct.n * np.log(ct.n * nij / (a * b))).sum(), 0.0))


def nvi(p1, p2) -> float:
    """Variation of information divided by the joint entropy."""
    ct = contingency(*_ordered(p1, p2))
    h_joint = _entropy(ct.counts.ravel(), ct.n)
    if h_joint <= 0.0:
        return 0.0
    # cell-wise form: every term is >= 0 and vanishes exactly when n_ij = a_i = b_j
    nz = ct.counts > 0
    nij = ct.counts[nz].astype(float)
    a = np.broadcast_to(ct.a[:, None], ct.counts.shape)[nz]
    b = np.broadcast_to(ct.b[None, :], ct.counts.shape)[nz]
    vi = float((nij / ct.n * (np.log(a / nij) + np.log(b / nij))).sum())
    return float(min(vi / h_joint, 1.0))


def expected_mutual_information(a: np.ndarray, b: np.ndarray, n: int) -> float:
    """Expected mutual information between two partitions with marginals ``a``
    and ``b`` when one is randomly permuted (hypergeometric model)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if n <= 1:
        return 0.0
    lg_n = gammaln(n + 1)
    lg_a, lg_na = gammaln(a + 1), gammaln(n - a + 1)
    lg_b, lg_nb = gammaln(b + 1), gammaln(n - b + 1)
    emi = 0.0
    for i, ai in enumerate(a):
        # rows: overlap size k = 1..ai, columns: clusters of the second partition
        k = np.arange(1, min(ai, b.max()) + 1)[:, None]
        valid = (k >= ai + b[None, :] - n) & (k <= b[None, :])
        if not valid.any():
            continue
        kk = np.where(valid, k, 1)
        log_p = (
            lg_a[i] + lg_b + lg_na[i] + lg_nb
            - lg_n - gammaln(kk + 1) - gammaln(ai - kk + 1) - gammaln(np.where(valid, b - kk, 0) + 1)
            - gammaln(np.where(valid, n - ai - b + kk, 0) + 1)
        )
        log_p = np.where(valid, log_p, -np.inf)
        term = kk / n * np.log(n * kk / (ai * b)) * np.exp(log_p)
        emi += float(term[valid].sum())
    return emi


def adjusted_mutual_information(p1, p2) -> float:
    """Unnormalized ``MI - E[MI]``."""
    ct = contingency(p1, p2)
    return _mutual_information(ct) - expected_mutual_information(ct.a, ct.b, ct.n)


def ami_symmetric(p1, p2) -> float:
    """Adjusted mutual information normalized by the mean of the two
    self-comparisons, ``I(P1,P2) / ((I(P1,P1) + I(P2,P2)) / 2)``.

    Identical partitions score 1; independent ones score about 0 and may be
    slightly negative.
    """
    l1, l2 = _ordered(p1, p2)
    if len(l1) != len(l2):
        raise ValueError(f"partitions cover different node counts ({len(l1)} vs {len(l2)})")
    if np.array_equal(l1, l2):
        return 1.0
    denom = 0.5 * (adjusted_mutual_information(l1, l1) + adjusted_mutual_information(l2, l2))
    if denom <= 1e-15:
        raise DegenerateSimilarityError(
            "symmetric AMI undefined: both partitions are trivial (single community or all singletons)"
        )
    return float(adjusted_mutual_information(l1, l2) / denom)


def ecs(p1, p2, alpha: float = 0.9) -> float:
    """Element-centric similarity of two hard partitions.

    Each node's affinity vector is the personalized random-walk stationary
    distribution on the node-cluster graph, ``(1 - alpha) e_i + alpha / |C|``
    over its cluster ``C``. Node scores ``1 - sum|A1 - A2| / (2 alpha)`` are
    averaged; for hard partitions this reduces to ``|C1 & C2| / max(|C1|, |C2|)``.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    ct = contingency(p1, p2)
    l1, l2 = _labels(p1), _labels(p2)
    overlap = ct.counts[l1, l2]
    size = np.maximum(ct.a[l1], ct.b[l2])
    return float(np.mean(overlap / size))
