from __future__ import annotations

import itertools

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import clique_edges
from markstab.graph import Graph
from markstab.preprocess import connect_components


def oracle_added_edges(g: Graph) -> list[tuple[int, int]]:
    """Enumerate every cross pair between the two largest components and keep
    the best by (both endpoints unused, degrees, ids)."""
    comps: list[set[int]] = []
    for v in range(g.n):
        for c in comps:
            if any(g.has_edge(v, w) for w in c):
                c.add(v)
                break
        else:
            comps.append({v})
    # merge components that became linked through later nodes
    merged = True
    while merged:
        merged = False
        for a, b in itertools.combinations(range(len(comps)), 2):
            if any(g.has_edge(u, v) for u in comps[a] for v in comps[b]):
                comps[a] |= comps.pop(b)
                merged = True
                break
    deg = {v: int(g.degrees[v]) for v in range(g.n)}
    used: set[int] = set()
    added = []
    while len(comps) > 1:
        comps.sort(key=lambda c: (-len(c), min(c)))
        a, b = comps[0], comps[1]

        def rank(v, comp):
            fresh_exists = any(w not in used for w in comp)
            return (fresh_exists and v in used, -deg[v], v)

        u = min(a, key=lambda v: rank(v, a))
        w = min(b, key=lambda v: rank(v, b))
        added.append((min(u, w), max(u, w)))
        used |= {u, w}
        deg[u] += 1
        deg[w] += 1
        comps = [a | b] + comps[2:]
    return added


def test_connected_graph_unchanged():
    g = Graph(4, clique_edges(range(4)))
    g2, rep = connect_components(g)
    assert g2 == g and rep.added_edges == [] and rep.components_before == 1


def test_two_triangles():
    g = Graph(6, clique_edges(range(3)) + clique_edges(range(3, 6)))
    g2, rep = connect_components(g)
    assert g2.m == 7 and g2.is_connected() and len(rep.added_edges) == 1


def test_three_components_against_oracle():
    # sizes 5, 3, 2: a star with an extra edge, a path and a single edge
    edges = [(0, 1), (0, 2), (0, 3), (0, 4), (3, 4), (5, 6), (6, 7), (8, 9)]
    g = Graph(10, edges)
    g2, rep = connect_components(g)
    assert rep.added_edges == oracle_added_edges(g)
    assert rep.added_edges == [(0, 6), (3, 8)]
    assert g2.is_connected()


def test_isolated_nodes_fall_back_to_used_nodes():
    g = Graph(5, [(0, 1)])
    g2, rep = connect_components(g)
    assert g2.is_connected() and len(rep.added_edges) == 3
    assert rep.added_edges == oracle_added_edges(g)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 14), st.integers(0, 2**31 - 1))
def test_random_graphs(n, seed):
    rng = np.random.default_rng(seed)
    pairs = [p for p in itertools.combinations(range(n), 2) if rng.random() < 0.15]
    g = Graph(n, pairs)
    k = len(np.unique(g.components()))
    g2, rep = connect_components(g)
    assert g2.is_connected()
    assert len(rep.added_edges) == k - 1 == rep.components_before - 1
    assert g.edge_set() <= g2.edge_set()
    assert rep.added_edges == oracle_added_edges(g)
    assert connect_components(g)[1].added_edges == rep.added_edges
