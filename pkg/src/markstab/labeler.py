"""Training targets: the scan scale whose robust partition best matches the planted one."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embed import FEATURE_NAMES, EmbeddingModel, featurize, infer_embedding, wl_document
from .graph import Graph, Partition
from .preprocess import PreprocessReport, connect_components
from .scalescan import TIE_TOL, ScaleScanResult, ScanConfig, scan
from .simeval import DegenerateSimilarityError, ami_symmetric

logger = logging.getLogger(__name__)

TARGET_NAME = "t_star_log10"
CSV_HEADER = (*FEATURE_NAMES, TARGET_NAME)


@dataclass
class LabeledRow:
    graph_id: int
    features: np.ndarray
    t_star_log10: float
    best_ami: float
    robust_index: int
    preprocess: PreprocessReport = field(default_factory=PreprocessReport)

    @property
    def preprocessed(self) -> bool:
        return bool(self.preprocess.added_edges)


def _score(p: Partition, planted: Partition) -> float:
    try:
        return ami_symmetric(p, planted)
    except DegenerateSimilarityError:
        # both sides trivial and different (all singletons vs one block): no shared information
        return 0.0


def best_robust_scale(result: ScaleScanResult, planted: Partition) -> tuple[int, float]:
    """``(scan index, AMI)`` of the robust partition closest to ``planted``.

    AMI ties within 1e-12 go to the smaller scale.
    """
    if not result.robust_indices:
        raise ValueError("scan result has no robust partitions")
    best_i, best_ami = -1, -np.inf
    for i in sorted(result.robust_indices, key=lambda i: result.scales[i]):
        a = _score(result.partitions[i], planted)
        if a > best_ami + TIE_TOL:
            best_i, best_ami = i, a
    return best_i, float(best_ami)


def label_instance(
    graph: Graph,
    planted: Partition,
    scan_cfg: ScanConfig | None = None,
    seed: int = 0,
    embedding: EmbeddingModel | None = None,
    graph_id: int = 0,
) -> tuple[LabeledRow, ScaleScanResult]:
    """Preprocess, scan and label one benchmark graph.

    Features are filled when ``embedding`` is given (the graph vector is
    inferred with ``seed``, exactly as at detection time); otherwise the
    feature vector is empty.
    """
    scan_cfg = scan_cfg or ScanConfig()
    if planted.n != graph.n:
        raise ValueError(f"planted partition has {planted.n} labels for a graph with {graph.n} nodes")
    g, report = connect_components(graph)
    result = scan(g, scan_cfg, seed)
    idx, ami = best_robust_scale(result, planted)
    feats = np.empty(0)
    if embedding is not None:
        feats = featurize(g, infer_embedding(embedding, wl_document(g, embedding.wl_depth), seed=seed))
    row = LabeledRow(
        graph_id=graph_id,
        features=feats,
        t_star_log10=float(result.log10_scales[idx]),
        best_ami=ami,
        robust_index=idx,
        preprocess=report,
    )
    return row, result


def _label_job(args):
    gid, graph, planted, scan_cfg, seed, embedding = args
    try:
        return label_instance(graph, planted, scan_cfg, seed, embedding, gid)[0], None
    except Exception as exc:  # reported and counted by the caller
        return None, f"{type(exc).__name__}: {exc}"


@dataclass
class DatasetReport:
    rows: list[LabeledRow]
    skipped: list[tuple[int, str]]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_skipped(self) -> int:
        return len(self.skipped)


def build_dataset(
    corpus: Sequence[tuple[int, Graph, Partition]],
    embedding: EmbeddingModel,
    scan_cfg: ScanConfig | None = None,
    out_csv: str | Path | None = None,
    seed: int = 0,
    jobs: int = 1,
) -> DatasetReport:
    """Label every ``(graph_id, graph, planted)`` triple and write the feature CSV.

    Rows follow corpus order whatever ``jobs`` is. Instances that fail are
    logged and skipped; ``n_rows + n_skipped`` always equals the corpus size.
    """
    if len(corpus) == 0:
        raise ValueError("corpus is empty")
    scan_cfg = scan_cfg or ScanConfig()
    tasks = [(gid, g, p, scan_cfg, seed, embedding) for gid, g, p in corpus]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_label_job, tasks))
    else:
        outcomes = [_label_job(t) for t in tasks]
    rows, skipped = [], []
    for (gid, *_), (row, err) in zip(tasks, outcomes):
        if row is None:
            logger.warning("graph %s skipped: %s", gid, err)
            skipped.append((gid, err))
            continue
        if row.preprocessed:
            logger.info("graph %s was disconnected; added %d edges", gid, len(row.preprocess.added_edges))
        rows.append(row)
    if out_csv is not None:
        write_feature_csv(out_csv, np.array([r.features for r in rows]).reshape(len(rows), -1),
                          np.array([r.t_star_log10 for r in rows]))
    return DatasetReport(rows=rows, skipped=skipped)


def write_feature_csv(path: str | Path, features: np.ndarray, targets: np.ndarray | None = None) -> None:
    header = CSV_HEADER if targets is not None else FEATURE_NAMES
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, row in enumerate(np.asarray(features, dtype=float)):
            vals = list(row) + ([targets[k]] if targets is not None else [])
            w.writerow([repr(float(v)) for v in vals])


def read_feature_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray | None]:
    """Features and (when the trailing target column is present) targets."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty feature file")
    header = tuple(rows[0])
    if header not in (CSV_HEADER, FEATURE_NAMES):
        raise ValueError(f"{path}: unexpected header {','.join(header)}")
    try:
        data = np.array(rows[1:], dtype=float).reshape(len(rows) - 1, len(header))
    except ValueError as exc:
        raise ValueError(f"{path}: malformed feature row ({exc})") from None
    if header == CSV_HEADER:
        return data[:, :-1], data[:, -1]
    return data, None
