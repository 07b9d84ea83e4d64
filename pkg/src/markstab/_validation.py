"""Input validation shared by the estimators and the functional API."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .graph import Graph, Partition


def check_features(X, n_features: int | None = None) -> np.ndarray:
    """2-d finite float array; raises ``ValueError`` on NaN/inf or wrong width."""
    X = check_array(X, dtype=np.float64, ensure_all_finite=True, ensure_2d=True)
    if n_features is not None and X.shape[1] != n_features:
        raise ValueError(f"expected {n_features} feature columns, got {X.shape[1]}")
    return X


def check_targets(y, n_rows: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) != n_rows:
        raise ValueError(f"{n_rows} feature rows but {len(y)} targets")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets contain NaN or infinity")
    return y


def check_graph(g) -> Graph:
    if not isinstance(g, Graph):
        raise TypeError(f"expected a Graph, got {type(g).__name__}")
    return g


def check_partition(p, n: int | None = None) -> Partition:
    if not isinstance(p, Partition):
        p = Partition(np.asarray(p))
    if n is not None and p.n != n:
        raise ValueError(f"partition has {p.n} labels, expected {n}")
    return p
