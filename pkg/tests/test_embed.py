from __future__ import annotations

import hashlib
from collections import Counter

import numpy as np
import pytest
from sklearn.base import clone

from conftest import clique_edges, random_connected_graph, ring_of_cliques
from markstab.embed import (
    FEATURE_NAMES,
    EmbeddingModel,
    Graph2VecFeaturizer,
    NotTrainedError,
    WlDocument,
    featurize,
    infer_embedding,
    train_embedding,
    wl_document,
)
from markstab.graph import Graph

K3 = Graph(3, clique_edges(range(3)))
P3 = Graph(3, [(0, 1), (1, 2)])


def h8(text: str) -> str:
    return hashlib.blake2b(text.encode(), digest_size=8).hexdigest()


def cosine(a, b):
    return float(a @ b / np.linalg.norm(a) / np.linalg.norm(b))


@pytest.fixture(scope="module")
def small_corpus():
    rng = np.random.default_rng(5)
    graphs = [random_connected_graph(rng, int(rng.integers(10, 40)), float(rng.uniform(0.1, 0.5))) for _ in range(12)]
    docs = [wl_document(g) for g in graphs]
    return graphs, docs, train_embedding(docs, dim=64, epochs=60, seed=1)


class TestWl:
    def test_k3(self):
        doc = wl_document(K3, 1)
        assert len(doc.words) == 6
        assert sorted(doc.counts().values()) == [3, 3]

    def test_p3_degree_words(self):
        assert wl_document(P3, 0).counts() == Counter({"1": 2, "2": 1})

    def test_p3_hand_trace(self):
        # iteration 1: ends see (1 | 2), the middle sees (2 | 1,1)
        expected = Counter({"1": 2, "2": 1, h8("1|2"): 2, h8("2|1,1"): 1})
        assert wl_document(P3, 1).counts() == expected

    def test_word_count_and_permutation_invariance(self, rng):
        g = random_connected_graph(rng, 14)
        perm = rng.permutation(14)
        for h in (0, 1, 2, 3):
            doc = wl_document(g, h)
            assert len(doc.words) == 14 * (h + 1)
            assert doc.counts() == wl_document(g.relabel(perm), h).counts()


class TestTraining:
    def test_single_graph_shape(self):
        model = train_embedding([wl_document(K3)], epochs=3)
        assert model.doc_vectors.shape == (1, 256)
        assert np.all(np.isfinite(model.doc_vectors))

    def test_empty_corpus(self):
        with pytest.raises(ValueError):
            train_embedding([])

    def test_deterministic(self, small_corpus):
        _, docs, model = small_corpus
        again = train_embedding(docs, dim=64, epochs=60, seed=1)
        assert np.array_equal(model.doc_vectors, again.doc_vectors)
        assert np.array_equal(model.word_vectors, again.word_vectors)

    def test_loss_decreases_on_average(self, small_corpus):
        loss = np.asarray(small_corpus[2].loss_history)
        window = np.convolve(loss, np.ones(5) / 5, mode="valid")
        assert np.all(np.diff(window) <= 1e-9)

    def test_duplicates_closer_than_average(self):
        rng = np.random.default_rng(8)
        graphs = [random_connected_graph(rng, int(rng.integers(8, 30)), float(rng.uniform(0.05, 0.5))) for _ in range(15)]
        docs = [wl_document(g) for g in graphs for _ in range(2)]
        model = train_embedding(docs, epochs=30, seed=3)
        V = model.doc_vectors
        dup = [cosine(V[2 * i], V[2 * i + 1]) for i in range(15)]
        cross = [cosine(V[i], V[j]) for i in range(30) for j in range(i + 1, 30) if i // 2 != j // 2]
        assert min(dup) > np.mean(cross)


class TestInference:
    def test_recovers_own_vector(self, small_corpus):
        _, docs, model = small_corpus
        for k in (0, 5, 11):
            v = infer_embedding(model, docs[k], seed=2)
            sims = [cosine(v, u) for u in model.doc_vectors]
            assert int(np.argmax(sims)) == k

    def test_unseen_words_return_initialization(self, small_corpus):
        model = small_corpus[2]
        doc = WlDocument(words=["never-seen-a", "never-seen-b"], depth=2)
        v = infer_embedding(model, doc, seed=4)
        init = (np.random.default_rng(4).random((1, model.dim)) - 0.5) / model.dim
        assert np.array_equal(v, init[0])

    def test_deterministic(self, small_corpus):
        _, docs, model = small_corpus
        assert np.array_equal(infer_embedding(model, docs[3], 9), infer_embedding(model, docs[3], 9))

    def test_untrained(self):
        with pytest.raises(NotTrainedError):
            infer_embedding(EmbeddingModel(), wl_document(K3))

    def test_save_load(self, small_corpus, tmp_path):
        _, docs, model = small_corpus
        model.save(tmp_path / "emb.json")
        back = EmbeddingModel.load(tmp_path / "emb.json")
        assert np.array_equal(back.doc_vectors, model.doc_vectors)
        assert np.array_equal(infer_embedding(back, docs[0], 1), infer_embedding(model, docs[0], 1))
        (tmp_path / "bad.json").write_text("{not json")
        with pytest.raises(ValueError):
            EmbeddingModel.load(tmp_path / "bad.json")


class TestFeatures:
    def test_constant_embedding(self):
        fv = featurize(P3, np.full(256, 0.5))
        assert fv[:5].tolist() == [0.5, 0.5, 0.5, 0.5, 0.0]

    def test_k3_measures(self):
        fv = featurize(K3, np.arange(256.0))
        assert fv[5:].tolist() == [3.0, 3.0, 1.0, 2.0, 1.0, 0.0]

    def test_arithmetic_sequence(self):
        emb = np.arange(1, 257) / 256.0
        fv = featurize(K3, emb)
        expected = [1.0, 1 / 256, 257 / 512, 257 / 512, np.sqrt((256**2 - 1) / 12) / 256]
        assert fv[:5] == pytest.approx(expected, abs=1e-15)

    def test_ordering_invariants(self, rng):
        fv = featurize(random_connected_graph(rng, 10), rng.normal(size=256))
        assert len(fv) == 11 and np.all(np.isfinite(fv))
        assert fv[1] <= fv[3] <= fv[0] and fv[4] >= 0

    def test_rejects_bad_embedding(self):
        with pytest.raises(ValueError):
            featurize(K3, np.array([1.0, np.nan]))


class TestFeaturizerEstimator:
    def test_fit_transform_and_params(self):
        graphs = [ring_of_cliques(3, 4), ring_of_cliques(4, 4), K3]
        est = Graph2VecFeaturizer(dim=16, epochs=5, random_state=2)
        X = est.fit_transform(graphs)
        assert X.shape == (3, 11)
        assert est.get_params()["dim"] == 16
        assert list(est.get_feature_names_out()) == list(FEATURE_NAMES)
        twin = clone(est).fit(graphs)
        assert np.array_equal(twin.transform(graphs), X)

    def test_from_model(self, small_corpus):
        graphs, _, model = small_corpus
        est = Graph2VecFeaturizer.from_model(model)
        assert est.transform(graphs[:2]).shape == (2, 11)
