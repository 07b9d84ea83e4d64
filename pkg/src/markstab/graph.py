"""Simple undirected graphs, node partitions, file I/O and structural measures."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph


class GraphFormatError(ValueError):
    """Raised when an edge list or partition file cannot be parsed."""


class DegenerateVarianceError(ValueError):
    """Raised when degree assortativity is undefined (all endpoint degrees equal)."""


class Graph:
    """Simple undirected unweighted graph on dense node ids ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : iterable of (int, int)
        Unordered node pairs. Self-loops and duplicate pairs are rejected.
    """

    def __init__(self, n: int, edges: Iterable[tuple[int, int]] = ()):
        n = int(n)
        if n < 1:
            raise ValueError(f"graph needs at least one node, got n={n}")
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) outside node range 0..{n - 1}")
            key = (u, v) if u < v else (v, u)
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        self.n = n
        self._edges = np.array(sorted(seen), dtype=np.int64).reshape(-1, 2)
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for u, v in self._edges:
            nbrs[u].append(int(v))
            nbrs[v].append(int(u))
        self.adjacency = [sorted(a) for a in nbrs]
        self.degrees = np.array([len(a) for a in self.adjacency], dtype=np.int64)

    @property
    def m(self) -> int:
        return len(self._edges)

    @property
    def edges(self) -> np.ndarray:
        """(m, 2) array of edges with ``u < v``, sorted lexicographically."""
        return self._edges.copy()

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self._edges}

    def has_edge(self, u: int, v: int) -> bool:
        a = self.adjacency[u]
        i = np.searchsorted(a, v)
        return i < len(a) and a[i] == v

    def to_sparse(self) -> sparse.csr_matrix:
        rows = np.concatenate([self._edges[:, 0], self._edges[:, 1]])
        cols = np.concatenate([self._edges[:, 1], self._edges[:, 0]])
        data = np.ones(len(rows), dtype=float)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n))
        if self.m:
            A[self._edges[:, 0], self._edges[:, 1]] = 1.0
            A[self._edges[:, 1], self._edges[:, 0]] = 1.0
        return A

    def components(self) -> np.ndarray:
        """Connected-component label of every node."""
        _, labels = csgraph.connected_components(self.to_sparse(), directed=False)
        return labels

    def is_connected(self) -> bool:
        return self.n == 1 or len(np.unique(self.components())) == 1

    def with_edges(self, extra: Iterable[tuple[int, int]]) -> "Graph":
        return Graph(self.n, list(map(tuple, self._edges)) + list(extra))

    def relabel(self, perm: Sequence[int]) -> "Graph":
        """Graph with node ``i`` renamed to ``perm[i]``."""
        perm = np.asarray(perm)
        return Graph(self.n, [(perm[u], perm[v]) for u, v in self._edges])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._edges, other._edges)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


@dataclass(frozen=True)
class Partition:
    """Non-overlapping node partition with labels canonicalized to ``0..c-1``
    in order of first appearance."""

    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 1 or len(raw) == 0:
            raise ValueError("partition labels must be a non-empty 1-d sequence")
        _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
        # rank communities by first appearance
        order = np.argsort(first, kind="stable")
        remap = np.empty_like(order)
        remap[order] = np.arange(len(order))
        canon = remap[inverse.ravel()].astype(np.int64)
        canon.setflags(write=False)
        object.__setattr__(self, "labels", canon)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def c(self) -> int:
        return int(self.labels.max()) + 1

    def communities(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == k) for k in range(self.c)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels)

    @classmethod
    def singletons(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def whole(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash(self.labels.tobytes())

    def __repr__(self) -> str:
        return f"Partition(n={self.n}, c={self.c})"


# ---------------------------------------------------------------------------
# I/O


def load_edge_list(path: str | Path) -> Graph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` and blank lines are ignored. An optional first
    data line ``n=<int>`` fixes the node count, otherwise ``n = max id + 1``.
    """
    n_header = None
    pairs: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if text.startswith("n="):
                if pairs or n_header is not None:
                    raise GraphFormatError(f"{path}:{lineno}: 'n=' header must precede edges")
                try:
                    n_header = int(text[2:])
                except ValueError:
                    raise GraphFormatError(f"{path}:{lineno}: bad node count {text!r}") from None
                continue
            tokens = text.split()
            if len(tokens) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected two node ids, got {text!r}")
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {text!r}") from None
            if u < 0 or v < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative node id")
            if u == v:
                raise GraphFormatError(f"{path}:{lineno}: self-loop on node {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise GraphFormatError(f"{path}:{lineno}: duplicate edge {key}")
            seen.add(key)
            pairs.append(key)
    max_id = max((max(p) for p in pairs), default=-1)
    n = n_header if n_header is not None else max_id + 1
    if n_header is not None and max_id >= n_header:
        raise GraphFormatError(f"{path}: node id {max_id} exceeds header n={n_header}")
    if n < 1:
        raise GraphFormatError(f"{path}: no nodes")
    return Graph(n, pairs)


def save_edge_list(g: Graph, path: str | Path) -> None:
    lines = [f"n={g.n}"] + [f"{u} {v}" for u, v in g.edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def reindex_edges(pairs: Iterable[tuple[object, object]]) -> tuple[Graph, dict]:
    """Build a graph from arbitrary hashable node names.

    Returns the graph and the ``name -> dense id`` map (ids assigned in order
    of first appearance).
    """
    idmap: dict = {}
    dense = []
    for u, v in pairs:
        for x in (u, v):
            if x not in idmap:
                idmap[x] = len(idmap)
        dense.append((idmap[u], idmap[v]))
    return Graph(max(len(idmap), 1), dense), idmap


def load_partition(path: str | Path) -> Partition:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        labels = payload["labels"]
        n = int(payload["n"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"{path}: not a partition file ({exc})") from None
    if len(labels) != n:
        raise GraphFormatError(f"{path}: n={n} but {len(labels)} labels")
    return Partition(np.asarray(labels, dtype=np.int64))


def save_partition(p: Partition, path: str | Path) -> None:
    Path(path).write_text(json.dumps({"n": p.n, "labels": p.labels.tolist()}) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# structural measures


def degree_stats(g: Graph) -> tuple[float, int, int]:
    """Return ``(average degree, n, m)``."""
    return 2.0 * g.m / g.n, g.n, g.m


def triangles_per_node(g: Graph) -> np.ndarray:
    A = g.to_sparse()
    return np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() / 2.0


def avg_clustering(g: Graph) -> float:
    """Mean local clustering coefficient; nodes of degree < 2 count as 0."""
    tri = triangles_per_node(g)
    d = g.degrees.astype(float)
    denom = d * (d - 1)
    local = np.divide(2.0 * tri, denom, out=np.zeros(g.n), where=denom > 0)
    return float(local.mean())


def shortest_path_lengths(g: Graph) -> np.ndarray:
    """All-pairs hop distances (``inf`` for disconnected pairs)."""
    return csgraph.shortest_path(g.to_sparse(), method="D", unweighted=True, directed=False)


def global_efficiency(g: Graph) -> float:
    if g.n < 2:
        return 0.0
    dist = shortest_path_lengths(g)
    np.fill_diagonal(dist, np.inf)
    return float((1.0 / dist).sum() / (g.n * (g.n - 1)))


def degree_assortativity(g: Graph) -> float:
    """Pearson correlation of endpoint degrees over both orientations of every edge."""
    if g.m == 0:
        raise DegenerateVarianceError("assortativity undefined on a graph without edges")
    e = g.edges
    x = g.degrees[np.concatenate([e[:, 0], e[:, 1]])].astype(float)
    y = g.degrees[np.concatenate([e[:, 1], e[:, 0]])].astype(float)
    xc, yc = x - x.mean(), y - y.mean()
    var = np.sqrt((xc**2).sum() * (yc**2).sum())
    if var <= 1e-12 * max(1.0, float((x**2).sum())):
        raise DegenerateVarianceError("all endpoint degrees are equal")
    return float(np.clip((xc * yc).sum() / var, -1.0, 1.0))


def modularity(g: Graph, p: Partition) -> float:
    """Newman modularity at resolution 1."""
    if p.n != g.n:
        raise ValueError(f"partition has {p.n} labels for a graph with {g.n} nodes")
    if g.m == 0:
        return 0.0
    e = g.edges
    lab = p.labels
    internal = np.bincount(lab[e[:, 0]][lab[e[:, 0]] == lab[e[:, 1]]], minlength=p.c)
    vol = np.bincount(lab, weights=g.degrees, minlength=p.c)
    return float((internal / g.m - (vol / (2.0 * g.m)) ** 2).sum())
