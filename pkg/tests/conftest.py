from __future__ import annotations

import itertools

import numpy as np
import pytest

from markstab.graph import Graph


def clique_edges(nodes):
    return list(itertools.combinations(nodes, 2))


def two_k4_bridge() -> Graph:
    return Graph(8, clique_edges(range(4)) + clique_edges(range(4, 8)) + [(3, 4)])


def ring_of_cliques(k: int, size: int) -> Graph:
    edges = []
    for c in range(k):
        edges += clique_edges(range(c * size, (c + 1) * size))
        edges.append((c * size, ((c + 1) % k) * size + 1))
    return Graph(k * size, edges)


def two_level_hierarchy(extra: int = 9) -> Graph:
    """Four K6 cliques; cliques (0,1) and (2,3) share ``extra`` edges each,
    and one bridge joins the two groups."""
    edges = []
    for c in range(4):
        edges += clique_edges(range(6 * c, 6 * c + 6))
    pairs = sorted(((i, 6 + j) for i in range(6) for j in range(6)), key=lambda p: ((p[1] - 6 - p[0]) % 6, p[0]))
    for u, v in pairs[:extra]:
        edges.append((u, v))
        edges.append((u + 12, v + 12))
    edges.append((0, 12))
    return Graph(24, edges)


def random_connected_graph(rng: np.random.Generator, n: int, p: float = 0.3) -> Graph:
    """Random spanning tree plus Bernoulli(p) extra edges."""
    order = rng.permutation(n)
    edges = {tuple(sorted((int(order[i]), int(order[rng.integers(i)])))) for i in range(1, n)}
    for u, v in itertools.combinations(range(n), 2):
        if rng.random() < p:
            edges.add((u, v))
    return Graph(n, sorted(edges))


def random_labels(rng: np.random.Generator, n: int, c: int) -> np.ndarray:
    return rng.integers(0, c, size=n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.acceptance_lines():
        terminalreporter.write_line(line)
