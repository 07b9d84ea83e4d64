"""End-to-end detection: one robust partition at a predicted scale.

The eight steps are

1. preprocess: connect the components of the input graph
2. dispatch: start the scan branch and the prediction branch
3. scan: Markov stability over the scale grid
4. robust: select persistent, reproducible partitions
5. embed: infer the whole-graph vector
6. features: assemble the 11 predictors
7. predict: boosted-tree estimate of the log10 scale
8. output: robust partition nearest the predicted scale

Steps 3-4 and 5-7 share no state and may run on two threads.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin

from . import gbm
from .embed import EmbeddingModel, NotTrainedError, featurize, infer_embedding, train_embedding, wl_document
from .graph import Graph, Partition
from .labeler import DatasetReport, build_dataset
from .preprocess import PreprocessReport, connect_components
from .scalescan import ScaleScanResult, ScanConfig, nearest_robust_index, scan, select_robust
from .simeval import ami_symmetric

STEP_NAMES = ("preprocess", "dispatch", "scan", "robust", "embed", "features", "predict", "output")


class PipelineStepError(RuntimeError):
    """Failure inside a detection step; ``step`` is its 1-based number."""

    def __init__(self, step: int, cause: BaseException):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step} ({STEP_NAMES[step - 1]}) failed: {type(cause).__name__}: {cause}")


@dataclass
class DetectResult:
    partition: Partition
    chosen_scale_log10: float
    predicted_t_star_log10: float
    robust_scales_log10: list[float]
    preprocess_report: PreprocessReport
    timings: dict[str, float]
    features: np.ndarray = field(repr=False)
    scan: ScaleScanResult | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "n": self.partition.n,
            "labels": self.partition.labels.tolist(),
            "chosen_scale_log10": self.chosen_scale_log10,
            "predicted_t_star_log10": self.predicted_t_star_log10,
            "robust_scales_log10": list(self.robust_scales_log10),
            "preprocess_report": self.preprocess_report.to_dict(),
            "features": self.features.tolist(),
            "timings": dict(self.timings),
        }


def _run_step(step: int, timings: dict, fn, *args):
    t0 = time.perf_counter()
    try:
        return fn(*args)
    except PipelineStepError:
        raise
    except Exception as exc:
        raise PipelineStepError(step, exc) from exc
    finally:
        timings[STEP_NAMES[step - 1]] = time.perf_counter() - t0


def _scan_branch(g: Graph, cfg: ScanConfig, seed: int, timings: dict) -> ScaleScanResult:
    result = _run_step(3, timings, scan, g, cfg, seed, False)
    result.robust_indices = _run_step(4, timings, select_robust, result, cfg)
    return result


def _predict_branch(g: Graph, model: gbm.BoostedModel, embedding: EmbeddingModel, seed: int, timings: dict):
    def embed_step():
        return infer_embedding(embedding, wl_document(g, embedding.wl_depth), seed=seed)

    emb = _run_step(5, timings, embed_step)
    fv = _run_step(6, timings, featurize, g, emb)
    t_star = _run_step(7, timings, gbm.predict, model, fv)
    return fv, float(t_star)


def detect(
    g: Graph,
    model: gbm.BoostedModel,
    embedding: EmbeddingModel,
    scan_cfg: ScanConfig | None = None,
    seed: int = 0,
    parallel: bool = True,
) -> DetectResult:
    """Run all eight steps on ``g`` and return one robust partition.

    The same ``seed`` drives the Louvain ensembles and the embedding
    inference; ``parallel`` only changes scheduling, never the output.
    """
    if model is None:
        raise PipelineStepError(7, ValueError("scale model has not been trained"))
    if embedding is None or not embedding.trained:
        raise PipelineStepError(5, NotTrainedError("embedding model has not been trained"))
    scan_cfg = scan_cfg or ScanConfig()
    timings: dict[str, float] = {}
    t_start = time.perf_counter()

    g2, report = _run_step(1, timings, connect_components, g)

    t0 = time.perf_counter()
    scan_timings: dict[str, float] = {}
    pred_timings: dict[str, float] = {}
    if parallel:
        pool = ThreadPoolExecutor(max_workers=2)
        fut_scan = pool.submit(_scan_branch, g2, scan_cfg, seed, scan_timings)
        fut_pred = pool.submit(_predict_branch, g2, model, embedding, seed, pred_timings)
        timings["dispatch"] = time.perf_counter() - t0
        try:
            result = fut_scan.result()
            fv, t_star = fut_pred.result()
        finally:
            pool.shutdown(wait=True)
    else:
        timings["dispatch"] = time.perf_counter() - t0
        result = _scan_branch(g2, scan_cfg, seed, scan_timings)
        fv, t_star = _predict_branch(g2, model, embedding, seed, pred_timings)
    timings.update(scan_timings)
    timings.update(pred_timings)

    idx = _run_step(8, timings, nearest_robust_index, result, t_star)
    logs = result.log10_scales
    timings = {name: timings[name] for name in STEP_NAMES}
    timings["total"] = time.perf_counter() - t_start
    return DetectResult(
        partition=result.partitions[idx],
        chosen_scale_log10=float(logs[idx]),
        predicted_t_star_log10=t_star,
        robust_scales_log10=[float(logs[i]) for i in result.robust_indices],
        preprocess_report=report,
        timings=timings,
        features=fv,
        scan=result,
    )


def measure_runtime(
    g: Graph,
    model: gbm.BoostedModel,
    embedding: EmbeddingModel,
    scan_cfg: ScanConfig | None = None,
    seed: int = 0,
    parallel: bool = True,
) -> dict[str, float]:
    """Wall-clock seconds per step plus ``total`` for one detection."""
    return detect(g, model, embedding, scan_cfg, seed, parallel).timings


@dataclass
class TrainedSelector:
    embedding: EmbeddingModel
    model: gbm.BoostedModel
    dataset: DatasetReport


def training_matrix(data: DatasetReport, min_label_ami: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Feature matrix and targets of the rows used to fit the scale model."""
    rows = [r for r in data.rows if min_label_ami is None or r.best_ami >= min_label_ami]
    width = len(data.rows[0].features) if data.rows else 0
    X = np.array([r.features for r in rows], dtype=float).reshape(len(rows), width)
    return X, np.array([r.t_star_log10 for r in rows], dtype=float)


def train_selector(
    graphs: Sequence[Graph],
    planted: Sequence[Partition],
    scan_cfg: ScanConfig | None = None,
    seed: int = 0,
    gbm_cfg: gbm.GbmConfig | None = None,
    dim: int = 256,
    epochs: int = 30,
    jobs: int = 1,
    min_label_ami: float | None = None,
) -> TrainedSelector:
    """Train the embedding on the (connected) corpus, label it and fit the scale model.

    With ``min_label_ami`` set, rows whose best robust AMI falls below it are
    kept in the dataset but left out of the regression fit: when no robust
    partition resembles the planted one, the label only reflects tie-breaking.
    """
    if len(graphs) != len(planted):
        raise ValueError("need one planted partition per graph")
    connected = [connect_components(g)[0] for g in graphs]
    embedding = train_embedding([wl_document(g) for g in connected], dim=dim, epochs=epochs, seed=seed)
    data = build_dataset(list(zip(range(len(graphs)), graphs, planted)), embedding, scan_cfg, seed=seed, jobs=jobs)
    if data.n_rows < 2:
        raise ValueError(f"only {data.n_rows} instances could be labeled")
    X, y = training_matrix(data, min_label_ami)
    if len(y) < 2:
        raise ValueError(f"only {len(y)} rows reach best AMI {min_label_ami}")
    model = gbm.fit(X, y, gbm_cfg or gbm.GbmConfig(seed=seed))
    return TrainedSelector(embedding=embedding, model=model, dataset=data)


class PyGenStabilityOne(ClusterMixin, BaseEstimator):
    """Single-partition multi-scale community detection.

    Parameters
    ----------
    model : BoostedModel
        Trained scale regressor.
    embedding : EmbeddingModel
        Trained whole-graph embedding.
    log10_t_min, log10_t_max, n_scales, n_tries, window, reproducibility_threshold :
        Scan grid and robust-selection settings.
    random_state : int
        Seed for the Louvain ensembles and embedding inference.

    Attributes
    ----------
    labels_ : ndarray of shape (n_nodes,)
        Community of every node.
    result_ : DetectResult
    """

    def __init__(
        self,
        model=None,
        embedding=None,
        log10_t_min=-2.0,
        log10_t_max=0.5,
        n_scales=50,
        n_tries=300,
        window=2,
        reproducibility_threshold=0.1,
        random_state=0,
    ):
        self.model = model
        self.embedding = embedding
        self.log10_t_min = log10_t_min
        self.log10_t_max = log10_t_max
        self.n_scales = n_scales
        self.n_tries = n_tries
        self.window = window
        self.reproducibility_threshold = reproducibility_threshold
        self.random_state = random_state

    def _scan_config(self) -> ScanConfig:
        return ScanConfig(
            log10_t_min=self.log10_t_min,
            log10_t_max=self.log10_t_max,
            n_scales=self.n_scales,
            n_tries=self.n_tries,
            window=self.window,
            reproducibility_threshold=self.reproducibility_threshold,
        )

    def fit(self, X: Graph, y=None):
        if not isinstance(X, Graph):
            raise TypeError(f"expected a Graph, got {type(X).__name__}")
        self.result_ = detect(X, self.model, self.embedding, self._scan_config(), self.random_state)
        self.labels_ = self.result_.partition.labels.copy()
        return self

    def fit_predict(self, X: Graph, y=None) -> np.ndarray:
        return self.fit(X).labels_

    def predict_scale(self, X: Graph) -> float:
        """Predicted log10 scale for ``X`` without running the scan."""
        if self.model is None or self.embedding is None:
            raise NotTrainedError("model and embedding are required")
        g, _ = connect_components(X)
        return _predict_branch(g, self.model, self.embedding, self.random_state, {})[1]

    def score(self, X: Graph, y) -> float:
        """Symmetric AMI between the partition detected on ``X`` and ``y``."""
        return ami_symmetric(self.fit(X).labels_, np.asarray(y))
