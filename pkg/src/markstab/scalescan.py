"""Multi-scale scan of Markov stability and selection of robust partitions."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import Graph, Partition
from .louvain import best_run, louvain_ensemble
from .simeval import nvi
from .stability import CONTINUOUS_NORMALIZED, StabilityConstructor

TIE_TOL = 1e-12


@dataclass
class ScanConfig:
    log10_t_min: float = -2.0
    log10_t_max: float = 0.5
    n_scales: int = 50
    n_tries: int = 300
    window: int = 2
    reproducibility_threshold: float = 0.1
    constructor: str = CONTINUOUS_NORMALIZED

    def __post_init__(self):
        if not self.log10_t_min < self.log10_t_max:
            raise ValueError("log10_t_min must be below log10_t_max")
        if self.n_scales < 2:
            raise ValueError("n_scales must be >= 2")
        if self.n_tries < 1:
            raise ValueError("n_tries must be >= 1")
        if self.window < 1:
            raise ValueError("window must be >= 1")

    def scales(self) -> np.ndarray:
        return 10.0 ** np.linspace(self.log10_t_min, self.log10_t_max, self.n_scales)


@dataclass
class ScaleScanResult:
    scales: np.ndarray
    partitions: list[Partition]
    q_values: np.ndarray
    nvi_repro: np.ndarray
    nvi_cross: np.ndarray
    robust_indices: list[int] = field(default_factory=list)

    @property
    def log10_scales(self) -> np.ndarray:
        return np.log10(self.scales)

    def robust_partitions(self) -> list[tuple[float, Partition]]:
        return [(float(self.log10_scales[i]), self.partitions[i]) for i in self.robust_indices]

    def to_dict(self) -> dict:
        return {
            "scales": self.scales.tolist(),
            "log10_scales": self.log10_scales.tolist(),
            "partitions": [p.labels.tolist() for p in self.partitions],
            "q_values": self.q_values.tolist(),
            "nvi_repro": self.nvi_repro.tolist(),
            "nvi_cross": self.nvi_cross.tolist(),
            "robust_indices": list(self.robust_indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScaleScanResult":
        return cls(
            scales=np.asarray(d["scales"], dtype=float),
            partitions=[Partition(np.asarray(x)) for x in d["partitions"]],
            q_values=np.asarray(d["q_values"], dtype=float),
            nvi_repro=np.asarray(d["nvi_repro"], dtype=float),
            nvi_cross=np.asarray(d["nvi_cross"], dtype=float),
            robust_indices=[int(i) for i in d["robust_indices"]],
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ScaleScanResult":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def ensemble_nvi(partitions: list[Partition]) -> float:
    """Mean NVI over all unordered pairs of an ensemble (0 for a single run)."""
    k = len(partitions)
    if k < 2:
        return 0.0
    # identical runs contribute zero; only distinct pairs need evaluating
    counts = Counter(partitions)
    distinct = list(counts)
    total = 0.0
    for a in range(len(distinct)):
        for b in range(a + 1, len(distinct)):
            total += counts[distinct[a]] * counts[distinct[b]] * nvi(distinct[a], distinct[b])
    return total / (k * (k - 1) / 2)


def pairwise_nvi(partitions: list[Partition]) -> np.ndarray:
    k = len(partitions)
    out = np.zeros((k, k))
    cache: dict[tuple[Partition, Partition], float] = {}
    for i in range(k):
        for j in range(i + 1, k):
            key = (partitions[i], partitions[j])
            if partitions[i] == partitions[j]:
                v = 0.0
            elif key in cache:
                v = cache[key]
            else:
                v = cache[key] = nvi(partitions[i], partitions[j])
            out[i, j] = out[j, i] = v
    return out


def scan(g: Graph, cfg: ScanConfig | None = None, seed: int = 0, select: bool = True) -> ScaleScanResult:
    """Optimize stability on a log-uniform grid of scales.

    Every scale gets an ensemble of ``cfg.n_tries`` Louvain runs seeded
    ``seed, seed + 1, ...``; the best-stability run represents the scale and
    the mean pairwise NVI of the ensemble measures its reproducibility.
    Robust indices are filled by :func:`select_robust` unless ``select`` is
    false, in which case they are left empty.
    """
    cfg = cfg or ScanConfig()
    ctor = StabilityConstructor(g, kind=cfg.constructor)
    scales = cfg.scales()
    parts, qs, repro = [], [], []
    for t in scales:
        runs = louvain_ensemble(ctor.quality(float(t)), cfg.n_tries, seed)
        rep = best_run(runs)
        parts.append(rep.partition)
        qs.append(rep.q_value)
        repro.append(ensemble_nvi([r.partition for r in runs]))
    result = ScaleScanResult(
        scales=scales,
        partitions=parts,
        q_values=np.asarray(qs),
        nvi_repro=np.asarray(repro),
        nvi_cross=pairwise_nvi(parts),
    )
    if select:
        result.robust_indices = select_robust(result, cfg)
    return result


def persistence_curve(nvi_cross: np.ndarray, window: int) -> np.ndarray:
    """Mean NVI between each scale and its neighbours within ``window`` steps."""
    k = nvi_cross.shape[0]
    rho = np.zeros(k)
    for i in range(k):
        js = [j for j in range(max(0, i - window), min(k, i + window + 1)) if j != i]
        rho[i] = nvi_cross[i, js].mean() if js else 0.0
    return rho


def _plateau_minima(rho: np.ndarray) -> list[int]:
    """Leftmost index of every plateau that is a local minimum."""
    k = len(rho)
    out = []
    i = 0
    while i < k:
        j = i
        while j + 1 < k and abs(rho[j + 1] - rho[i]) <= TIE_TOL:
            j += 1
        left_ok = i == 0 or rho[i - 1] > rho[i] + TIE_TOL
        right_ok = j == k - 1 or rho[j + 1] > rho[i] + TIE_TOL
        if left_ok and right_ok:
            out.append(i)
        i = j + 1
    return out


def select_robust(result: ScaleScanResult, cfg: ScanConfig | None = None) -> list[int]:
    """Indices of scales whose partitions are persistent and reproducible.

    Candidates are local minima of the windowed persistence curve, filtered
    by ensemble reproducibility; consecutive candidates with identical
    partitions collapse to the more persistent one. Never returns an empty list.
    """
    cfg = cfg or ScanConfig()
    rho = persistence_curve(result.nvi_cross, cfg.window)
    cands = [i for i in _plateau_minima(rho) if result.nvi_repro[i] <= cfg.reproducibility_threshold]
    kept: list[int] = []
    for i in cands:
        if kept and result.nvi_cross[kept[-1], i] <= TIE_TOL:
            if rho[i] < rho[kept[-1]] - TIE_TOL:
                kept[-1] = i
            continue
        kept.append(i)
    if not kept:
        kept = [int(np.argmin(rho + result.nvi_repro))]
    return kept


def pick_nearest(result: ScaleScanResult, t_star_log10: float) -> Partition:
    """Robust partition whose log10 scale is nearest ``t_star_log10``
    (the smaller scale wins a tie)."""
    return result.partitions[nearest_robust_index(result, t_star_log10)]


def nearest_robust_index(result: ScaleScanResult, t_star_log10: float) -> int:
    if not result.robust_indices:
        raise ValueError("scan result has no robust partitions")
    logs = result.log10_scales
    best = None
    for i in sorted(result.robust_indices, key=lambda i: logs[i]):
        dist = abs(logs[i] - t_star_log10)
        if best is None or dist < best[0] - TIE_TOL:
            best = (dist, i)
    return best[1]


def pick_random(result: ScaleScanResult, seed: int) -> int:
    """Random robust index (the naive selection baseline)."""
    rng = np.random.default_rng(seed)
    return int(rng.choice(result.robust_indices))


def config_dict(cfg: ScanConfig) -> dict:
    return asdict(cfg)
