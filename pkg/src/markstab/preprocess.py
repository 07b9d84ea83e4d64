"""Join the components of a disconnected graph with as few edges as possible."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph


@dataclass
class PreprocessReport:
    added_edges: list[tuple[int, int]] = field(default_factory=list)
    components_before: int = 1

    def to_dict(self) -> dict:
        return {
            "added_edges": [list(e) for e in self.added_edges],
            "components_before": self.components_before,
        }


def _pick_hub(nodes: list[int], degrees: np.ndarray, modified: set[int]) -> int:
    # highest current degree, ties to the smallest id; used nodes only as a last resort
    fresh = [v for v in nodes if v not in modified]
    pool = fresh or nodes
    return min(pool, key=lambda v: (-degrees[v], v))


def connect_components(g: Graph) -> tuple[Graph, PreprocessReport]:
    """Merge the two largest components repeatedly by linking their hubs.

    Each merge adds a single edge between the highest-degree not-yet-used node
    of each of the two currently largest components (size ties go to the
    component holding the smallest node id). Nodes touched by an added edge
    are skipped in later merges unless their component has nothing else left.
    """
    labels = g.components()
    comps = [sorted(np.flatnonzero(labels == k).tolist()) for k in np.unique(labels)]
    report = PreprocessReport(components_before=len(comps))
    if len(comps) == 1:
        return g, report

    degrees = g.degrees.copy()
    modified: set[int] = set()
    while len(comps) > 1:
        comps.sort(key=lambda c: (-len(c), c[0]))
        a, b = comps[0], comps[1]
        u = _pick_hub(a, degrees, modified)
        v = _pick_hub(b, degrees, modified)
        report.added_edges.append((min(u, v), max(u, v)))
        modified.update((u, v))
        degrees[u] += 1
        degrees[v] += 1
        comps = [sorted(a + b)] + comps[2:]
    return g.with_edges(report.added_edges), report
