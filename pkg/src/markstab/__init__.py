"""Multi-scale Markov stability community detection with a learned scale selector."""
from __future__ import annotations

from .embed import FEATURE_NAMES, EmbeddingModel, Graph2VecFeaturizer, featurize, infer_embedding, train_embedding, wl_document
from .gbm import BoostedModel, GbmConfig, GradientBoostedScaleRegressor, load_model, save_model
from .graph import Graph, GraphFormatError, Partition, load_edge_list, load_partition, modularity, save_edge_list, save_partition
from .pipeline import DetectResult, PipelineStepError, PyGenStabilityOne, detect, measure_runtime, train_selector
from .preprocess import connect_components
from .scalescan import ScaleScanResult, ScanConfig, pick_nearest, pick_random, scan, select_robust
from .simeval import ami_symmetric, ecs, nvi
from .stability import StabilityConstructor, eval_q_gen

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES",
    "BoostedModel",
    "DetectResult",
    "EmbeddingModel",
    "GbmConfig",
    "Graph",
    "Graph2VecFeaturizer",
    "GradientBoostedScaleRegressor",
    "GraphFormatError",
    "Partition",
    "PipelineStepError",
    "PyGenStabilityOne",
    "ScaleScanResult",
    "ScanConfig",
    "StabilityConstructor",
    "ami_symmetric",
    "connect_components",
    "detect",
    "ecs",
    "eval_q_gen",
    "featurize",
    "infer_embedding",
    "load_edge_list",
    "load_model",
    "load_partition",
    "measure_runtime",
    "modularity",
    "nvi",
    "pick_nearest",
    "pick_random",
    "save_edge_list",
    "save_model",
    "save_partition",
    "scan",
    "select_robust",
    "train_embedding",
    "train_selector",
    "wl_document",
]
