"""Generalized Markov stability quality matrices.

For a scale ``t`` the quality matrix is ``B(t) = F(t) - pi pi^T`` with
``pi_i = d_i / 2m`` the stationary distribution of the random walk, so that
the stability of a partition is the sum of ``B`` over node pairs that share a
community.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import Graph, Partition

CONTINUOUS_NORMALIZED = "continuous-normalized"
LINEARIZED = "linearized"
KINDS = (CONTINUOUS_NORMALIZED, LINEARIZED)

DENSE_SIZE_WARNING = 3000


class DisconnectedGraphError(ValueError):
    pass


def _check_graph(g: Graph) -> None:
    if g.n > 1 and np.any(g.degrees <= 0):
        raise ValueError("every node needs positive degree (isolated node found)")
    if not g.is_connected():
        raise DisconnectedGraphError("graph is disconnected; run connect_components first")
    if g.n > DENSE_SIZE_WARNING:
        warnings.warn(
            f"dense O(n^3) exponential on n={g.n} nodes will be slow", RuntimeWarning, stacklevel=3
        )


class _SymmetricSpectrum:
    """Eigen-decomposition of ``L_sym = I - D^-1/2 A D^-1/2``, reused across scales."""

    def __init__(self, g: Graph):
        _check_graph(g)
        A = g.to_dense()
        d = g.degrees.astype(float)
        self.sqrt_d = np.sqrt(d)
        inv = 1.0 / self.sqrt_d
        L_sym = np.eye(g.n) - inv[:, None] * A * inv[None, :]
        self.eigvals, self.eigvecs = np.linalg.eigh(L_sym)

    def exp_sym(self, t: float) -> np.ndarray:
        """``exp(-t L_sym)``"""
        V = self.eigvecs
        return (V * np.exp(-t * self.eigvals)) @ V.T


def expm_symmetric_core(g: Graph, t: float, _spectrum: _SymmetricSpectrum | None = None) -> np.ndarray:
    """Transition matrix ``exp(-t L_rw)`` of the continuous-time random walk.

    Computed as ``D^-1/2 exp(-t L_sym) D^1/2`` from the symmetric normalized
    Laplacian. Rows sum to one.
    """
    if t < 0:
        raise ValueError(f"scale must be non-negative, got {t}")
    if g.n == 1:
        return np.ones((1, 1))
    spec = _spectrum or _SymmetricSpectrum(g)
    s = spec.sqrt_d
    return (1.0 / s)[:, None] * spec.exp_sym(t) * s[None, :]


@dataclass(frozen=True)
class QualityMatrix:
    """Symmetrized quality matrix ``B`` at scale ``t``.

    ``support`` marks node pairs with positive similarity; the optimizer only
    considers moving a node into communities it is linked to.
    """

    t: float
    B: np.ndarray = field(repr=False)
    support: np.ndarray = field(repr=False)

    @property
    def log10_t(self) -> float:
        return float(np.log10(self.t))

    @property
    def n(self) -> int:
        return self.B.shape[0]


class StabilityConstructor:
    """Builds quality matrices for one graph at arbitrary scales.

    Parameters
    ----------
    g : Graph
        Connected graph.
    kind : {"continuous-normalized", "linearized"}
        ``continuous-normalized`` uses ``F(t) = Pi exp(-t L_rw)``;
        ``linearized`` uses ``F(t) = (1 - t) Pi + t A / 2m`` with ``t`` capped at 1.
    """

    def __init__(self, g: Graph, kind: str = CONTINUOUS_NORMALIZED):
        if kind not in KINDS:
            raise ValueError(f"unknown constructor kind {kind!r}; expected one of {KINDS}")
        _check_graph(g)
        self.graph = g
        self.kind = kind
        self.pi = g.degrees / (2.0 * g.m) if g.m else np.ones(1)
        # rank-one null model: both vectors equal the stationary distribution
        self.null_vectors = (self.pi, self.pi)
        self._spectrum = _SymmetricSpectrum(g) if kind == CONTINUOUS_NORMALIZED and g.n > 1 else None
        self._adjacency = g.to_dense()

    def similarity(self, t: float) -> np.ndarray:
        """``F(t)``; sums to one over all entries."""
        g = self.graph
        if self.kind == CONTINUOUS_NORMALIZED:
            return self.pi[:, None] * expm_symmetric_core(g, t, self._spectrum)
        tl = min(t, 1.0)
        return (1.0 - tl) * np.diag(self.pi) + tl * self._adjacency / (2.0 * g.m)

    def quality(self, t: float) -> QualityMatrix:
        if t <= 0:
            raise ValueError(f"scale must be positive, got {t}")
        F = self.similarity(t)
        u, v = self.null_vectors
        B = F - np.outer(u, v)
        B = 0.5 * (B + B.T)
        support = (F + F.T) > 0
        if self.kind == CONTINUOUS_NORMALIZED:
            # exp(-tL) is strictly positive on a connected graph; underflow is not a cut
            support = np.ones_like(support)
        np.fill_diagonal(support, False)
        return QualityMatrix(t=float(t), B=B, support=support)


def build_quality_matrix(ctor: StabilityConstructor, g: Graph, t: float) -> QualityMatrix:
    if g is not ctor.graph and g != ctor.graph:
        raise ValueError("constructor was prepared for a different graph")
    return ctor.quality(t)


def eval_q_gen(q: QualityMatrix | np.ndarray, p: Partition | np.ndarray) -> float:
    """Sum of ``B`` over same-community pairs, i.e. ``Tr[H^T B H]``."""
    B = q.B if isinstance(q, QualityMatrix) else np.asarray(q)
    labels = p.labels if isinstance(p, Partition) else np.asarray(p)
    if len(labels) != B.shape[0]:
        raise ValueError(f"partition has {len(labels)} labels for a {B.shape[0]}-node quality matrix")
    _, lab = np.unique(labels, return_inverse=True)
    # (H^T B)[community of j, j] summed over j equals Tr[H^T B H]
    n = len(lab)
    H_T = sparse.csr_matrix((np.ones(n), (lab, np.arange(n))), shape=(lab.max() + 1, n))
    rows = np.asarray(H_T @ B)
    return float(rows[lab, np.arange(len(lab))].sum())
