"""Whole-graph embedding (Weisfeiler-Lehman documents + PV-DBOW) and the
11-column structural feature vector built from it."""
from __future__ import annotations

import hashlib
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit
from sklearn.base import BaseEstimator, TransformerMixin

from .graph import (
    DegenerateVarianceError,
    Graph,
    avg_clustering,
    degree_assortativity,
    degree_stats,
    global_efficiency,
)

logger = logging.getLogger(__name__)

FEATURE_NAMES = (
    "emb_max",
    "emb_min",
    "emb_mean",
    "emb_median",
    "emb_std",
    "n_nodes",
    "n_edges",
    "global_efficiency",
    "avg_degree",
    "avg_clustering",
    "assortativity",
)
EMBEDDING_FORMAT_VERSION = 1


class NotTrainedError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# WL documents


def _stable_hash(text: str) -> str:
    return hashlib.blake2b(text.encode("utf-8"), digest_size=8).hexdigest()


@dataclass
class WlDocument:
    words: list[str]
    depth: int

    def counts(self) -> Counter:
        return Counter(self.words)


def wl_document(g: Graph, h: int = 2) -> WlDocument:
    """Subtree-pattern words of ``h`` Weisfeiler-Lehman relabelings.

    Iteration 0 labels every node by its degree; iteration ``r`` hashes the
    node's previous label with the sorted multiset of its neighbours' labels.
    Every node contributes one word per iteration.
    """
    if h < 0:
        raise ValueError(f"WL depth must be non-negative, got {h}")
    labels = [str(int(d)) for d in g.degrees]
    words = list(labels)
    for _ in range(h):
        labels = [
            _stable_hash(labels[v] + "|" + ",".join(sorted(labels[u] for u in g.adjacency[v])))
            for v in range(g.n)
        ]
        words.extend(labels)
    return WlDocument(words=words, depth=h)


# ---------------------------------------------------------------------------
# PV-DBOW with negative sampling


@njit(cache=True)
def _sgd_pass(doc_vecs, out_vecs, doc_ids, word_ids, negatives, lrs, update_out):
    total = 0.0
    dim = doc_vecs.shape[1]
    grad = np.zeros(dim)
    for p in range(len(doc_ids)):
        d = doc_ids[p]
        w = word_ids[p]
        lr = lrs[p]
        grad[:] = 0.0
        for s in range(negatives.shape[1] + 1):
            if s == 0:
                target = w
                label = 1.0
            else:
                target = negatives[p, s - 1]
                if target == w:
                    continue
                label = 0.0
            f = 0.0
            for k in range(dim):
                f += doc_vecs[d, k] * out_vecs[target, k]
            if f > 30.0:
                sig = 1.0
            elif f < -30.0:
                sig = 0.0
            else:
                sig = 1.0 / (1.0 + np.exp(-f))
            if label > 0.5:
                total -= np.log(max(sig, 1e-12))
            else:
                total -= np.log(max(1.0 - sig, 1e-12))
            g = (label - sig) * lr
            for k in range(dim):
                grad[k] += g * out_vecs[target, k]
            if update_out:
                for k in range(dim):
                    out_vecs[target, k] += g * doc_vecs[d, k]
        for k in range(dim):
            doc_vecs[d, k] += grad[k]
    return total


@dataclass
class EmbeddingModel:
    dim: int = 256
    vocab: list[str] = field(default_factory=list)
    word_vectors: np.ndarray | None = field(default=None, repr=False)
    doc_vectors: np.ndarray | None = field(default=None, repr=False)
    word_counts: np.ndarray | None = field(default=None, repr=False)
    seed: int = 0
    epochs: int = 30
    negative: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    wl_depth: int = 2
    loss_history: list[float] = field(default_factory=list, repr=False)

    @property
    def trained(self) -> bool:
        return self.word_vectors is not None

    def _index(self) -> dict[str, int]:
        if not hasattr(self, "_vocab_index") or len(self._vocab_index) != len(self.vocab):
            self._vocab_index = {w: i for i, w in enumerate(self.vocab)}
        return self._vocab_index

    def _noise_cdf(self) -> np.ndarray:
        weights = self.word_counts.astype(float) ** 0.75
        return np.cumsum(weights / weights.sum())

    def to_dict(self) -> dict:
        if not self.trained:
            raise NotTrainedError("cannot serialize an untrained embedding model")
        return {
            "version": EMBEDDING_FORMAT_VERSION,
            "dim": self.dim,
            "seed": self.seed,
            "epochs": self.epochs,
            "negative": self.negative,
            "learning_rate": self.learning_rate,
            "min_learning_rate": self.min_learning_rate,
            "wl_depth": self.wl_depth,
            "vocab": self.vocab,
            "word_counts": self.word_counts.tolist(),
            "word_vectors": self.word_vectors.tolist(),
            "doc_vectors": self.doc_vectors.tolist(),
            "loss_history": self.loss_history,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmbeddingModel":
        if d.get("version") != EMBEDDING_FORMAT_VERSION:
            raise ValueError(
                f"embedding format version {d.get('version')} not supported (expected {EMBEDDING_FORMAT_VERSION})"
            )
        dim = int(d["dim"])
        return cls(
            dim=dim,
            vocab=list(d["vocab"]),
            word_counts=np.asarray(d["word_counts"], dtype=np.int64),
            word_vectors=np.asarray(d["word_vectors"], dtype=float).reshape(-1, dim),
            doc_vectors=np.asarray(d["doc_vectors"], dtype=float).reshape(-1, dim),
            seed=int(d["seed"]),
            epochs=int(d["epochs"]),
            negative=int(d["negative"]),
            learning_rate=float(d["learning_rate"]),
            min_learning_rate=float(d["min_learning_rate"]),
            wl_depth=int(d["wl_depth"]),
            loss_history=list(d.get("loss_history", [])),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingModel":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: corrupt embedding file ({exc})") from None
        return cls.from_dict(payload)


def _init_vectors(rng: np.random.Generator, rows: int, dim: int) -> np.ndarray:
    return (rng.random((rows, dim)) - 0.5) / dim


def _schedule(start: float, stop: float, steps: int) -> np.ndarray:
    return start - (start - stop) * np.arange(steps) / max(steps, 1)


def train_embedding(
    corpus: Sequence[WlDocument],
    dim: int = 256,
    epochs: int = 30,
    seed: int = 0,
    negative: int = 5,
    learning_rate: float = 0.025,
    min_learning_rate: float = 0.0001,
) -> EmbeddingModel:
    """Train graph vectors that predict their own WL words (PV-DBOW).

    Deterministic given corpus order, seed and hyperparameters.
    """
    if len(corpus) == 0:
        raise ValueError("cannot train an embedding on an empty corpus")
    counts = Counter()
    for doc in corpus:
        counts.update(doc.words)
    vocab = sorted(counts)
    index = {w: i for i, w in enumerate(vocab)}
    rng = np.random.default_rng(seed)
    model = EmbeddingModel(
        dim=dim,
        vocab=vocab,
        word_counts=np.array([counts[w] for w in vocab], dtype=np.int64),
        seed=seed,
        epochs=epochs,
        negative=negative,
        learning_rate=learning_rate,
        min_learning_rate=min_learning_rate,
        wl_depth=corpus[0].depth,
    )
    model.doc_vectors = _init_vectors(rng, len(corpus), dim)
    out_vecs = np.zeros((len(vocab), dim))

    doc_ids = np.concatenate([np.full(len(doc.words), k, dtype=np.int64) for k, doc in enumerate(corpus)])
    word_ids = np.array([index[w] for doc in corpus for w in doc.words], dtype=np.int64)
    n_pairs = len(word_ids)
    lrs = _schedule(learning_rate, min_learning_rate, n_pairs * epochs).reshape(epochs, n_pairs)
    cdf = model._noise_cdf()
    for epoch in range(epochs):
        order = rng.permutation(n_pairs)
        negs = np.searchsorted(cdf, rng.random((n_pairs, negative)), side="right").clip(max=len(vocab) - 1)
        loss = _sgd_pass(model.doc_vectors, out_vecs, doc_ids[order], word_ids[order], negs, lrs[epoch], True)
        model.loss_history.append(loss / max(n_pairs, 1))
    model.word_vectors = out_vecs
    return model


def infer_embedding(model: EmbeddingModel, doc: WlDocument, seed: int = 0, epochs: int | None = None) -> np.ndarray:
    """Fit a fresh graph vector for ``doc`` against the frozen word vectors.

    Words missing from the training vocabulary are ignored; a document with
    no known words gets its seeded initialization back unchanged.
    """
    if not model.trained:
        raise NotTrainedError("embedding model has not been trained")
    epochs = model.epochs if epochs is None else epochs
    rng = np.random.default_rng(seed)
    vec = _init_vectors(rng, 1, model.dim)
    index = model._index()
    word_ids = np.array([index[w] for w in doc.words if w in index], dtype=np.int64)
    if len(word_ids) == 0:
        return vec[0]
    n_pairs = len(word_ids)
    lrs = _schedule(model.learning_rate, model.min_learning_rate, n_pairs * epochs).reshape(epochs, n_pairs)
    cdf = model._noise_cdf()
    doc_ids = np.zeros(n_pairs, dtype=np.int64)
    for epoch in range(epochs):
        order = rng.permutation(n_pairs)
        negs = np.searchsorted(cdf, rng.random((n_pairs, model.negative)), side="right").clip(max=len(cdf) - 1)
        _sgd_pass(vec, model.word_vectors, doc_ids, word_ids[order], negs, lrs[epoch], False)
    return vec[0]


# ---------------------------------------------------------------------------
# features


def graph_measures(g: Graph) -> dict[str, float]:
    avg_deg, n, m = degree_stats(g)
    try:
        assort = degree_assortativity(g)
    except DegenerateVarianceError:
        assort = 0.0
    return {
        "n_nodes": float(n),
        "n_edges": float(m),
        "global_efficiency": global_efficiency(g),
        "avg_degree": avg_deg,
        "avg_clustering": avg_clustering(g),
        "assortativity": assort,
    }


def featurize(g: Graph, emb: np.ndarray) -> np.ndarray:
    """Five summaries of the embedding followed by six graph measures, in
    :data:`FEATURE_NAMES` order."""
    emb = np.asarray(emb, dtype=float)
    if emb.ndim != 1 or not np.all(np.isfinite(emb)):
        raise ValueError("embedding must be a finite 1-d vector")
    stats = [emb.max(), emb.min(), emb.mean(), np.median(emb), emb.std()]
    measures = graph_measures(g)
    return np.array(stats + [measures[k] for k in FEATURE_NAMES[5:]], dtype=float)


class Graph2VecFeaturizer(TransformerMixin, BaseEstimator):
    """Turn graphs into the 11-column feature matrix.

    ``fit`` trains the PV-DBOW embedding on the WL documents of the given
    graphs; ``transform`` infers a vector for each graph against the frozen
    word vectors and appends the structural measures.
    """

    def __init__(self, dim=256, wl_depth=2, epochs=30, negative=5, learning_rate=0.025, random_state=0):
        self.dim = dim
        self.wl_depth = wl_depth
        self.epochs = epochs
        self.negative = negative
        self.learning_rate = learning_rate
        self.random_state = random_state

    def fit(self, X: Sequence[Graph], y=None):
        docs = [wl_document(g, self.wl_depth) for g in X]
        self.embedding_ = train_embedding(
            docs,
            dim=self.dim,
            epochs=self.epochs,
            seed=self.random_state,
            negative=self.negative,
            learning_rate=self.learning_rate,
        )
        return self

    @classmethod
    def from_model(cls, model: EmbeddingModel) -> "Graph2VecFeaturizer":
        est = cls(
            dim=model.dim,
            wl_depth=model.wl_depth,
            epochs=model.epochs,
            negative=model.negative,
            learning_rate=model.learning_rate,
            random_state=model.seed,
        )
        est.embedding_ = model
        return est

    def embed(self, g: Graph) -> np.ndarray:
        from sklearn.utils.validation import check_is_fitted

        check_is_fitted(self, "embedding_")
        return infer_embedding(self.embedding_, wl_document(g, self.embedding_.wl_depth), seed=self.random_state)

    def transform(self, X: Sequence[Graph]) -> np.ndarray:
        return np.vstack([featurize(g, self.embed(g)) for g in X]) if len(X) else np.empty((0, 11))

    def get_feature_names_out(self, input_features=None):
        return np.array(FEATURE_NAMES, dtype=object)
