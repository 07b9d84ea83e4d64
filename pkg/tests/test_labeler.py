from __future__ import annotations

import logging

import numpy as np
import pytest

from conftest import clique_edges, ring_of_cliques
from markstab.embed import train_embedding, wl_document
from markstab.graph import Graph, Partition
from markstab.labeler import (
    CSV_HEADER,
    best_robust_scale,
    build_dataset,
    label_instance,
    read_feature_csv,
    write_feature_csv,
)
from markstab.scalescan import ScanConfig
from test_scalescan import fake_result
from test_simeval import oracle_ami

CFG = ScanConfig(n_scales=12, n_tries=8)


def tiny_corpus():
    rings = [ring_of_cliques(3, 4), ring_of_cliques(4, 3), ring_of_cliques(3, 5)]
    planted = [Partition(np.repeat(np.arange(3), 4)), Partition(np.repeat(np.arange(4), 3)),
               Partition(np.repeat(np.arange(3), 5))]
    return [(i, g, p) for i, (g, p) in enumerate(zip(rings, planted))]


@pytest.fixture(scope="module")
def embedding():
    return train_embedding([wl_document(g) for _, g, _ in tiny_corpus()], dim=16, epochs=5, seed=0)


class TestBestRobustScale:
    def test_ties_go_to_smaller_scale(self):
        planted = [0, 0, 1, 1]
        res = fake_result([-1.5, -1.0, 0.0], [planted, [1, 1, 0, 0], [0, 0, 0, 1]])
        assert best_robust_scale(res, Partition(planted)) == (0, 1.0)

    def test_ties_ignore_index_order(self):
        planted = [0, 0, 1, 1]
        res = fake_result([-1.5, -1.0, 0.0], [[0, 0, 0, 1], planted, planted], robust=[2, 1, 0])
        assert best_robust_scale(res, Partition(planted)) == (1, 1.0)

    def test_singleton_robust_set(self):
        res = fake_result([-1.5, -1.0, 0.0], [[0, 0, 1, 1], [0, 1, 2, 3], [0, 0, 0, 0]], robust=[2])
        idx, _ = best_robust_scale(res, Partition([0, 0, 1, 1]))
        assert idx == 2

    def test_empty_robust_set(self):
        res = fake_result([-1.0, 0.0], [[0, 1], [0, 0]], robust=[])
        with pytest.raises(ValueError):
            best_robust_scale(res, Partition([0, 1]))


class TestLabelInstance:
    def test_ring_matches_recompute_all_oracle(self):
        g = ring_of_cliques(4, 5)
        planted = Partition(np.repeat(np.arange(4), 5))
        row, res = label_instance(g, planted, ScanConfig(n_scales=20, n_tries=20))
        scored = []
        for i in res.robust_indices:
            labels = res.partitions[i].labels.tolist()
            a = oracle_ami(labels, planted.labels.tolist()) if len(set(labels)) > 1 else 0.0
            scored.append((-a, res.scales[i], i))
        best = min(scored)
        assert row.robust_index == best[2]
        assert row.best_ami == pytest.approx(-best[0], abs=1e-12)
        assert row.best_ami == 1.0
        assert row.t_star_log10 == float(np.log10(res.scales[row.robust_index]))

    def test_row_invariants(self, embedding):
        gid, g, planted = tiny_corpus()[0]
        row, res = label_instance(g, planted, CFG, seed=3, embedding=embedding, graph_id=gid)
        assert CFG.log10_t_min <= row.t_star_log10 <= CFG.log10_t_max
        assert row.features.shape == (11,)
        assert not row.preprocessed

    def test_disconnected_instance_is_preprocessed(self, embedding):
        g = Graph(8, clique_edges(range(4)) + clique_edges(range(4, 8)))
        row, _ = label_instance(g, Partition([0] * 4 + [1] * 4), CFG, embedding=embedding)
        assert row.preprocessed and len(row.preprocess.added_edges) == 1
        assert row.features[6] == 13.0  # the bridging edge is counted

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            label_instance(ring_of_cliques(3, 4), Partition([0, 1]), CFG)


class TestBuildDataset:
    def test_csv_shape_and_rerun(self, embedding, tmp_path):
        corpus = tiny_corpus()
        rep = build_dataset(corpus, embedding, CFG, tmp_path / "a.csv", seed=1)
        build_dataset(corpus, embedding, CFG, tmp_path / "b.csv", seed=1)
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert len(lines) == 4
        assert lines[0].split(",") == list(CSV_HEADER) and len(CSV_HEADER) == 12
        assert all(len(line.split(",")) == 12 for line in lines)
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        X, y = read_feature_csv(tmp_path / "a.csv")
        assert X.shape == (3, 11) and np.array_equal(y, [r.t_star_log10 for r in rep.rows])

    def test_disconnected_flagged_and_counts(self, embedding, caplog):
        corpus = tiny_corpus()
        corpus.append((7, Graph(8, clique_edges(range(4)) + clique_edges(range(4, 8))), Partition([0] * 4 + [1] * 4)))
        corpus.append((9, ring_of_cliques(3, 4), Partition([0, 1, 2])))
        with caplog.at_level(logging.INFO, logger="markstab.labeler"):
            rep = build_dataset(corpus, embedding, CFG)
        assert rep.n_rows + rep.n_skipped == len(corpus)
        assert [r.graph_id for r in rep.rows] == [0, 1, 2, 7]
        assert rep.skipped[0][0] == 9
        assert "graph 7 was disconnected" in caplog.text
        assert "graph 9 skipped" in caplog.text

    def test_best_ami_not_stale(self, embedding):
        from markstab.labeler import label_instance as again

        rep = build_dataset(tiny_corpus(), embedding, CFG, seed=2)
        for row, (_, g, planted) in zip(rep.rows, tiny_corpus()):
            _, res = again(g, planted, CFG, seed=2)
            labels = res.partitions[row.robust_index].labels.tolist()
            fresh = oracle_ami(labels, planted.labels.tolist()) if len(set(labels)) > 1 else 0.0
            assert row.best_ami == pytest.approx(fresh, abs=1e-12)

    def test_parallel_matches_serial(self, embedding, tmp_path):
        corpus = tiny_corpus()
        build_dataset(corpus, embedding, CFG, tmp_path / "s.csv", seed=1)
        build_dataset(corpus, embedding, CFG, tmp_path / "p.csv", seed=1, jobs=2)
        assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "p.csv").read_bytes()

    def test_empty_corpus(self, embedding):
        with pytest.raises(ValueError):
            build_dataset([], embedding, CFG)


class TestCsv:
    def test_round_trip_exact(self, rng, tmp_path):
        X, y = rng.normal(size=(5, 11)), rng.normal(size=5)
        write_feature_csv(tmp_path / "f.csv", X, y)
        X2, y2 = read_feature_csv(tmp_path / "f.csv")
        assert np.array_equal(X, X2) and np.array_equal(y, y2)
        write_feature_csv(tmp_path / "g.csv", X)
        assert read_feature_csv(tmp_path / "g.csv")[1] is None

    def test_bad_files(self, tmp_path):
        (tmp_path / "h.csv").write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_feature_csv(tmp_path / "h.csv")
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(ValueError):
            read_feature_csv(tmp_path / "e.csv")
