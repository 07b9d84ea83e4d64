"""Squared-error gradient boosting over exact-greedy CART regression trees.

Defaults are the tuned setting used for scale prediction: 141 trees,
learning rate 0.027, depth 6, row subsampling 0.79.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_features, check_targets
from .embed import FEATURE_NAMES

MODEL_FORMAT_VERSION = 1
_GAIN_RTOL = 1e-12


class ModelVersionError(ValueError):
    pass


@dataclass
class GbmConfig:
    n_trees: int = 141
    learning_rate: float = 0.027
    max_depth: int = 6
    subsample: float = 0.790
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 0:
            raise ValueError("n_trees must be >= 0")
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.subsample <= 1:
            raise ValueError("subsample must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


class RegressionTree:
    """Array-backed binary tree. Leaves have ``feature == -1``."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []

    def _add(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.value) - 1

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left, right = np.asarray(self.left), np.asarray(self.right)
        node = np.zeros(len(X), dtype=np.int64)
        active = feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            f = feature[node[idx]]
            go_left = X[idx, f] <= threshold[node[idx]]
            node[idx] = np.where(go_left, left[node[idx]], right[node[idx]])
            active = feature[node] >= 0
        return np.asarray(self.value)[node]

    def depth(self) -> int:
        def rec(i: int) -> int:
            return 0 if self.feature[i] < 0 else 1 + max(rec(self.left[i]), rec(self.right[i]))

        return rec(0)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegressionTree":
        t = cls()
        t.feature = [int(x) for x in d["feature"]]
        t.threshold = [float(x) for x in d["threshold"]]
        t.left = [int(x) for x in d["left"]]
        t.right = [int(x) for x in d["right"]]
        t.value = [float(x) for x in d["value"]]
        if not (len(t.feature) == len(t.threshold) == len(t.left) == len(t.right) == len(t.value) >= 1):
            raise ValueError("tree arrays have inconsistent lengths")
        return t


def best_split(X: np.ndarray, r: np.ndarray, min_leaf: int = 1) -> tuple[int, float, float] | None:
    """Exact greedy split maximizing the reduction in squared error.

    Candidate thresholds are midpoints between consecutive distinct values.
    Ties go to the lowest feature index, then the lowest threshold.
    Returns ``(feature, threshold, gain)`` or ``None`` when nothing improves.
    """
    n, p = X.shape
    total = r.sum()
    base = total * total / n
    best = None
    for f in range(p):
        order = np.argsort(X[:, f], kind="stable")
        xs, rs = X[order, f], r[order]
        csum = np.cumsum(rs)
        # position k splits rows [0, k] | [k+1, n)
        k = np.flatnonzero(xs[:-1] < xs[1:])
        k = k[(k + 1 >= min_leaf) & (n - k - 1 >= min_leaf)]
        if len(k) == 0:
            continue
        nl = k + 1.0
        sl = csum[k]
        gain = sl * sl / nl + (total - sl) ** 2 / (n - nl) - base
        thr = 0.5 * (xs[k] + xs[k + 1])
        ok = (thr > xs[k]) & (thr < xs[k + 1])
        if not ok.any():
            continue
        gain, thr = gain[ok], thr[ok]
        j = int(np.argmax(gain))
        # earliest index within tolerance of the max keeps the lowest threshold
        tol = _GAIN_RTOL * max(1.0, abs(gain[j]))
        j = int(np.flatnonzero(gain >= gain[j] - tol)[0])
        if best is None or gain[j] > best[2] + _GAIN_RTOL * max(1.0, abs(best[2])):
            best = (f, float(thr[j]), float(gain[j]))
    if best is None or best[2] <= _GAIN_RTOL * max(1.0, float((r * r).sum())):
        return None
    return best


def fit_tree(X: np.ndarray, r: np.ndarray, max_depth: int, min_leaf: int = 1) -> RegressionTree:
    tree = RegressionTree()

    def grow(rows: np.ndarray, depth: int) -> int:
        node = tree._add(r[rows].mean())
        if depth >= max_depth or len(rows) < 2 * min_leaf:
            return node
        split = best_split(X[rows], r[rows], min_leaf)
        if split is None:
            return node
        f, thr, _ = split
        mask = X[rows, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = grow(rows[mask], depth + 1)
        tree.right[node] = grow(rows[~mask], depth + 1)
        return node

    grow(np.arange(len(r)), 0)
    return tree


@dataclass
class BoostedModel:
    base_value: float
    learning_rate: float
    trees: list[RegressionTree]
    config: GbmConfig
    feature_names: tuple[str, ...] = FEATURE_NAMES

    def staged_raw(self, X: np.ndarray):
        pred = np.full(len(X), self.base_value)
        yield pred.copy()
        for t in self.trees:
            pred += self.learning_rate * t.predict(X)
            yield pred.copy()

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        pred = np.full(len(X), self.base_value)
        for t in self.trees:
            pred += self.learning_rate * t.predict(X)
        return pred

    def to_dict(self) -> dict:
        return {
            "version": MODEL_FORMAT_VERSION,
            "base_value": self.base_value,
            "learning_rate": self.learning_rate,
            "config": asdict(self.config),
            "feature_names": list(self.feature_names),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoostedModel":
        version = d.get("version")
        if not isinstance(version, int):
            raise ValueError("model file has no integer format version")
        if version > MODEL_FORMAT_VERSION:
            raise ModelVersionError(
                f"model format version {version} is newer than supported version {MODEL_FORMAT_VERSION}"
            )
        return cls(
            base_value=float(d["base_value"]),
            learning_rate=float(d["learning_rate"]),
            trees=[RegressionTree.from_dict(t) for t in d["trees"]],
            config=GbmConfig(**d["config"]),
            feature_names=tuple(d["feature_names"]),
        )


def fit(features, targets, cfg: GbmConfig | None = None) -> BoostedModel:
    """Fit boosted trees on squared error from the target mean."""
    cfg = cfg or GbmConfig()
    X = check_features(features)
    y = check_targets(targets, len(X))
    if len(X) < 2:
        raise ValueError("need at least two training rows")
    rng = np.random.default_rng(cfg.seed)
    base = float(y.mean())
    pred = np.full(len(y), base)
    n_sub = max(1, int(round(cfg.subsample * len(y))))
    trees = []
    for _ in range(cfg.n_trees):
        resid = y - pred
        rows = np.arange(len(y)) if n_sub == len(y) else np.sort(rng.choice(len(y), size=n_sub, replace=False))
        tree = fit_tree(X[rows], resid[rows], cfg.max_depth, cfg.min_samples_leaf)
        trees.append(tree)
        pred += cfg.learning_rate * tree.predict(X)
    names = FEATURE_NAMES if X.shape[1] == len(FEATURE_NAMES) else tuple(f"x{i}" for i in range(X.shape[1]))
    return BoostedModel(base_value=base, learning_rate=cfg.learning_rate, trees=trees, config=cfg, feature_names=names)


def predict(model: BoostedModel | None, fv) -> float | np.ndarray:
    if model is None:
        raise ValueError("model has not been trained")
    X = np.asarray(fv, dtype=float)
    out = model.predict(X)
    return float(out[0]) if X.ndim == 1 else out


def evaluate(model: BoostedModel, features, targets) -> tuple[float, float]:
    """``(MAE, MSE)`` of the model's predictions."""
    X = check_features(features)
    y = check_targets(targets, len(X))
    err = model.predict(X) - y
    return float(np.abs(err).mean()), float((err * err).mean())


def save_model(model: BoostedModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict()) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> BoostedModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        return BoostedModel.from_dict(payload)
    except ModelVersionError:
        raise
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: cannot parse model ({exc})") from None


class GradientBoostedScaleRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit` for use in sklearn pipelines."""

    def __init__(self, n_trees=141, learning_rate=0.027, max_depth=6, subsample=0.790, min_samples_leaf=1, random_state=0):
        self.n_trees = n_trees
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.subsample = subsample
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def _config(self) -> GbmConfig:
        return GbmConfig(
            n_trees=self.n_trees,
            learning_rate=self.learning_rate,
            max_depth=self.max_depth,
            subsample=self.subsample,
            min_samples_leaf=self.min_samples_leaf,
            seed=self.random_state,
        )

    def fit(self, X, y):
        self.model_ = fit(X, y, self._config())
        self.n_features_in_ = np.asarray(X).shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return self.model_.predict(check_features(X))

    @classmethod
    def from_model(cls, model: BoostedModel) -> "GradientBoostedScaleRegressor":
        c = model.config
        est = cls(c.n_trees, c.learning_rate, c.max_depth, c.subsample, c.min_samples_leaf, c.seed)
        est.model_ = model
        return est
