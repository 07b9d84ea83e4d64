from __future__ import annotations

import json

import numpy as np
import pytest
from sklearn.base import clone

from markstab.gbm import (
    MODEL_FORMAT_VERSION,
    BoostedModel,
    GbmConfig,
    GradientBoostedScaleRegressor,
    ModelVersionError,
    RegressionTree,
    evaluate,
    fit,
    load_model,
    predict,
    save_model,
)


def brute_stump(X, y):
    """Every (feature, midpoint) pair scored by direct residual sum of squares."""
    best = (np.inf, None, None)
    for f in range(X.shape[1]):
        vals = np.unique(X[:, f])
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = (lo + hi) / 2
            left = X[:, f] <= thr
            sse = ((y[left] - y[left].mean()) ** 2).sum() + ((y[~left] - y[~left].mean()) ** 2).sum()
            if sse < best[0] - 1e-9:
                best = (sse, f, thr)
    return best


def walk(tree: RegressionTree, x) -> float:
    node = 0
    while tree.feature[node] >= 0:
        node = tree.left[node] if x[tree.feature[node]] <= tree.threshold[node] else tree.right[node]
    return tree.value[node]


def oracle_predict(model: BoostedModel, x) -> float:
    return model.base_value + model.learning_rate * sum(walk(t, x) for t in model.trees)


def hand_stump(theta: float) -> BoostedModel:
    t = RegressionTree()
    t.feature, t.threshold = [0, -1, -1], [theta, 0.0, 0.0]
    t.left, t.right, t.value = [1, -1, -1], [2, -1, -1], [0.0, -1.0, 1.0]
    return BoostedModel(base_value=0.0, learning_rate=0.5, trees=[t], config=GbmConfig(n_trees=1))


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(31)
    X = rng.normal(size=(120, 11))
    y = X[:, 0] - 0.5 * X[:, 3] ** 2 + 0.1 * rng.normal(size=120)
    return X, y, fit(X, y, GbmConfig(n_trees=25, seed=4))


class TestConfig:
    @pytest.mark.parametrize("bad", [dict(n_trees=-1), dict(learning_rate=0), dict(learning_rate=1.5),
                                     dict(max_depth=0), dict(subsample=0), dict(subsample=1.2)])
    def test_invariants(self, bad):
        with pytest.raises(ValueError):
            GbmConfig(**bad)

    def test_defaults(self):
        c = GbmConfig()
        assert (c.n_trees, c.learning_rate, c.max_depth, c.subsample) == (141, 0.027, 6, 0.790)


class TestFit:
    def test_empty_ensemble_predicts_mean(self, rng):
        X, y = rng.normal(size=(20, 11)), rng.normal(size=20)
        model = fit(X, y, GbmConfig(n_trees=0))
        assert model.trees == []
        assert np.all(model.predict(rng.normal(size=(5, 11))) == y.mean())

    def test_stump_matches_exhaustive_enumeration(self, rng):
        for _ in range(10):
            X = rng.normal(size=(30, 4))
            y = np.where(X[:, 0] > 0.2, 1.0, -1.0) + 0.3 * rng.normal(size=30)
            model = fit(X, y, GbmConfig(n_trees=1, max_depth=1, subsample=1.0, learning_rate=1.0))
            _, f, thr = brute_stump(X, y - y.mean())
            tree = model.trees[0]
            assert tree.feature[0] == f
            assert tree.threshold[0] == pytest.approx(thr, abs=1e-12)

    def test_thresholds_strictly_between_observed_values(self, trained):
        X, _, model = trained
        for tree in model.trees:
            for f, thr in zip(tree.feature, tree.threshold):
                if f >= 0:
                    assert X[:, f].min() < thr < X[:, f].max()
                    assert thr not in set(X[:, f])

    def test_training_mse_non_increasing(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(200, 11))
        y = X[:, 1] + 0.5 * rng.normal(size=200)
        model = fit(X, y, GbmConfig(n_trees=60, subsample=1.0))
        mse = [float(((p - y) ** 2).mean()) for p in model.staged_raw(X)]
        assert np.all(np.diff(mse) <= 1e-12)

    def test_defaults_improve_with_more_trees(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(500, 11))
        y = X[:, 0] + 0.3 * rng.normal(size=500)
        model = fit(X, y)
        mse = [float(((p - y) ** 2).mean()) for p in model.staged_raw(X)]
        assert mse[141] < mse[10]

    def test_depth_bound_and_determinism(self, trained):
        X, y, model = trained
        assert all(t.depth() <= 6 for t in model.trees)
        again = fit(X, y, GbmConfig(n_trees=25, seed=4))
        assert again.to_dict() == model.to_dict()

    def test_row_order_invariance_without_subsampling(self, trained, rng):
        X, y, _ = trained
        perm = rng.permutation(len(y))
        cfg = GbmConfig(n_trees=10, subsample=1.0)
        a, b = fit(X, y, cfg), fit(X[perm], y[perm], cfg)
        probe = rng.normal(size=(50, 11))
        assert np.allclose(a.predict(probe), b.predict(probe), atol=1e-12)

    def test_input_errors(self):
        with pytest.raises(ValueError):
            fit(np.ones((3, 11)), np.ones(4))
        with pytest.raises(ValueError):
            fit(np.array([[np.nan] * 11, [0.0] * 11]), [0.0, 1.0])
        with pytest.raises(ValueError):
            fit(np.ones((1, 11)), [1.0])


class TestPredict:
    def test_hand_stump(self):
        model = hand_stump(0.0)
        fv = np.zeros(11)
        fv[0] = -1.0
        assert predict(model, fv) == -0.5
        fv[0] = 2.0
        assert predict(model, fv) == 0.5

    def test_matches_tree_walk_oracle(self, trained, rng):
        _, _, model = trained
        for x in rng.normal(size=(40, 11)):
            assert predict(model, x) == pytest.approx(oracle_predict(model, x), abs=1e-12)

    def test_untrained(self):
        with pytest.raises(ValueError):
            predict(None, np.zeros(11))


class TestEvaluate:
    def test_hand_cases(self):
        zero = fit(np.zeros((2, 11)) + [[0], [1]], [0.0, 0.0], GbmConfig(n_trees=0))
        assert evaluate(zero, np.zeros((2, 11)), [-1.0, 1.0]) == (1.0, 1.0)
        assert evaluate(zero, np.zeros((3, 11)), [0.0, 0.0, 0.0]) == (0.0, 0.0)

    def test_direct_formula(self, trained, rng):
        _, _, model = trained
        X, y = rng.normal(size=(30, 11)), rng.normal(size=30)
        err = np.array([oracle_predict(model, x) for x in X]) - y
        mae, mse = evaluate(model, X, y)
        assert mae == pytest.approx(np.abs(err).mean(), abs=1e-12)
        assert mse == pytest.approx((err**2).mean(), abs=1e-12)
        with pytest.raises(ValueError):
            evaluate(model, X, y[:-1])


class TestPersistence:
    def test_round_trip_bitwise(self, trained, rng, tmp_path):
        _, _, model = trained
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        probe = rng.normal(size=(100, 11))
        assert np.array_equal(back.predict(probe), model.predict(probe))

    def test_corrupted_file(self, trained, tmp_path):
        save_model(trained[2], tmp_path / "m.json")
        text = (tmp_path / "m.json").read_text()
        (tmp_path / "m.json").write_text(text[: len(text) // 2])
        with pytest.raises(ValueError, match="cannot parse"):
            load_model(tmp_path / "m.json")

    def test_newer_version(self, trained, tmp_path):
        d = trained[2].to_dict()
        d["version"] = MODEL_FORMAT_VERSION + 1
        (tmp_path / "m.json").write_text(json.dumps(d))
        with pytest.raises(ModelVersionError) as info:
            load_model(tmp_path / "m.json")
        assert str(MODEL_FORMAT_VERSION + 1) in str(info.value) and str(MODEL_FORMAT_VERSION) in str(info.value)


class TestEstimator:
    def test_params_clone_and_fit(self, trained):
        X, y, _ = trained
        est = GradientBoostedScaleRegressor(n_trees=15, random_state=2)
        assert est.get_params()["learning_rate"] == 0.027
        a = est.fit(X, y).predict(X)
        b = clone(est).fit(X, y).predict(X)
        assert np.array_equal(a, b)
        assert est.score(X, y) > 0

    def test_from_model(self, trained):
        X, _, model = trained
        est = GradientBoostedScaleRegressor.from_model(model)
        assert np.array_equal(est.predict(X), model.predict(X))
        assert est.get_params()["n_trees"] == 25
