"""ABCD-style benchmark graphs with planted communities.

Degrees and community sizes follow truncated discrete power laws. Each node
keeps a share of its stubs inside its community and sends the rest to a
global background configuration model; the mixing parameter ``xi`` is the
expected fraction of edges that leave their community.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, Partition, save_edge_list, save_partition

logger = logging.getLogger(__name__)

TRAIN_XI_RANGE = (0.01, 0.5)
TEST_XI_VALUES = (0.01, 0.1, 0.3, 0.5, 0.7)
MAX_REWIRE_SWEEPS = 100
MAX_SPEC_RETRIES = 20


class InfeasibleSpecError(ValueError):
    pass


@dataclass
class BenchSpec:
    n: int
    degree_exponent: float
    d_min: int
    d_max: int
    community_exponent: float
    k_min: int
    k_max: int
    xi: float
    seed: int = 0

    def validate(self) -> None:
        if not 1 <= self.d_min < self.d_max < self.n:
            raise InfeasibleSpecError(f"need 1 <= d_min < d_max < n, got {self.d_min}, {self.d_max}, {self.n}")
        if not 1 <= self.k_min < self.k_max <= self.n:
            raise InfeasibleSpecError(f"need 1 <= k_min < k_max <= n, got {self.k_min}, {self.k_max}, {self.n}")
        if self.degree_exponent <= 1 or self.community_exponent <= 1:
            raise InfeasibleSpecError("power-law exponents must exceed 1")
        if not 0.0 <= self.xi <= 1.0:
            raise InfeasibleSpecError(f"xi must lie in [0, 1], got {self.xi}")
        if self.d_min * (1.0 - self.xi) + 1 > self.k_max:
            raise InfeasibleSpecError("minimum internal degree does not fit in the largest community")


@dataclass
class BenchInstance:
    graph: Graph
    planted: Partition
    spec: BenchSpec
    realized_xi: float
    dropped_stubs: int = 0


def sample_power_law(count: int, exponent: float, lo: int, hi: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. integers in ``[lo, hi]`` with ``P(x) ~ x^-exponent`` (inverse CDF)."""
    if lo > hi or lo < 1:
        raise ValueError(f"empty power-law support [{lo}, {hi}]")
    support = np.arange(lo, hi + 1)
    w = support.astype(float) ** -exponent
    cdf = np.cumsum(w / w.sum())
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    return support[np.minimum(idx, len(support) - 1)]


def _round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x) + 0.5).astype(np.int64)


def _community_sizes(spec: BenchSpec, rng: np.random.Generator) -> np.ndarray:
    sizes: list[int] = []
    left = spec.n
    while left > 0:
        s = int(sample_power_law(1, spec.community_exponent, spec.k_min, spec.k_max, rng)[0])
        if s >= left:
            if left >= spec.k_min or not sizes:
                sizes.append(left)
            else:
                # spread a too-small remainder over communities that still have room
                for _ in range(left):
                    room = [i for i, x in enumerate(sizes) if x < spec.k_max]
                    if not room:
                        raise InfeasibleSpecError("community sizes cannot cover n within [k_min, k_max]")
                    sizes[room[rng.integers(len(room))]] += 1
            left = 0
        else:
            sizes.append(s)
            left -= s
    return np.array(sizes, dtype=np.int64)


def _degree_sequence(spec: BenchSpec, rng: np.random.Generator) -> np.ndarray:
    d = sample_power_law(spec.n, spec.degree_exponent, spec.d_min, spec.d_max, rng)
    if d.sum() % 2:
        up = np.flatnonzero(d < spec.d_max)
        if len(up):
            d[up[rng.integers(len(up))]] += 1
        else:
            down = np.flatnonzero(d > spec.d_min)
            d[down[rng.integers(len(down))]] -= 1
    return d


def _assign(degrees_int: np.ndarray, sizes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Place nodes (largest internal degree first) into communities large enough to hold them."""
    n = len(degrees_int)
    free = sizes.copy()
    labels = np.empty(n, dtype=np.int64)
    order = rng.permutation(n)
    order = order[np.argsort(-degrees_int[order], kind="stable")]
    for v in order:
        ok = np.flatnonzero((free > 0) & (sizes - 1 >= degrees_int[v]))
        if len(ok) == 0:
            raise InfeasibleSpecError(f"no community can hold a node with internal degree {degrees_int[v]}")
        c = ok[np.searchsorted(np.cumsum(free[ok]), rng.random() * free[ok].sum(), side="right")]
        labels[v] = c
        free[c] -= 1
    return labels


def _match(stubs: np.ndarray, rng: np.random.Generator, existing: set) -> tuple[list, int]:
    """Random stub matching with swap-rewiring of self-loops and multi-edges.

    ``existing`` holds edges already placed (updated in place). Returns the new
    edges and the number of stubs that could not be placed.
    """
    stubs = stubs.copy()
    rng.shuffle(stubs)
    good: list[tuple[int, int]] = []
    bad: list[tuple[int, int]] = []
    for u, v in stubs.reshape(-1, 2):
        u, v = int(u), int(v)
        key = (min(u, v), max(u, v))
        if u == v or key in existing:
            bad.append((u, v))
        else:
            existing.add(key)
            good.append(key)
    for _ in range(MAX_REWIRE_SWEEPS):
        if not bad or not good:
            break
        still = []
        for u, v in bad:
            idx = int(rng.integers(len(good)))
            x, y = good[idx]
            if rng.random() < 0.5:
                x, y = y, x
            a = (min(u, x), max(u, x))
            b = (min(v, y), max(v, y))
            if u == x or v == y or a == b or a in existing or b in existing:
                still.append((u, v))
                continue
            existing.discard(good[idx])
            existing.update((a, b))
            good[idx] = a
            good.append(b)
        bad = still
    return good, 2 * len(bad)


def generate(spec: BenchSpec) -> BenchInstance:
    """Sample one benchmark graph and its planted partition."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    sizes = _community_sizes(spec, rng)
    degrees = _degree_sequence(spec, rng)

    # background edges land inside a community by chance; inflate the
    # background share so the realized mixing matches xi on average
    phi = 1.0 - float(((sizes / spec.n) ** 2).sum())
    xi_bg = min(1.0, spec.xi / phi) if phi > 0 else 0.0
    internal = _round_half_up((1.0 - xi_bg) * degrees)
    labels = _assign(internal, sizes, rng)

    for c in range(len(sizes)):
        members = np.flatnonzero(labels == c)
        if internal[members].sum() % 2:
            cand = members[internal[members] > 0]
            internal[cand[rng.integers(len(cand))]] -= 1
    background = degrees - internal

    existing: set[tuple[int, int]] = set()
    dropped = 0
    for c in range(len(sizes)):
        members = np.flatnonzero(labels == c)
        _, lost = _match(np.repeat(members, internal[members]), rng, existing)
        dropped += lost
    _, lost = _match(np.repeat(np.arange(spec.n), background), rng, existing)
    dropped += lost
    if dropped:
        logger.info("dropped %d unmatchable stubs (seed %d)", dropped, spec.seed)

    g = Graph(spec.n, sorted(existing))
    e = g.edges
    inter = int((labels[e[:, 0]] != labels[e[:, 1]]).sum())
    return BenchInstance(
        graph=g,
        planted=Partition(labels),
        spec=spec,
        realized_xi=inter / g.m if g.m else 0.0,
        dropped_stubs=dropped,
    )


# ---------------------------------------------------------------------------
# corpora


def _exponent(rng: np.random.Generator, hi: float) -> float:
    return max(1.01, round(float(rng.uniform(1.0, hi)), 2))


def _int_in(rng: np.random.Generator, lo: int, hi_exclusive: float) -> int:
    """Uniform integer in ``[lo, hi)`` (``lo`` when the range is empty)."""
    hi = int(math.ceil(hi_exclusive))
    return int(rng.integers(lo, hi)) if hi > lo else lo


def draw_spec(mode: str, rng: np.random.Generator, seed: int, xi: float | None = None,
              n_range: tuple[int, int] | None = None) -> BenchSpec:
    """Random generator parameters from the training or test ranges."""
    if mode == "train":
        lo, hi = n_range or (100, 1000)
        n = int(rng.integers(lo, hi))
        div_d, div_k = int(rng.integers(2, 50)), int(rng.integers(2, 50))
        d_min = _int_in(rng, 1, n / div_d)
        k_min = _int_in(rng, 1, n / div_k)
        exp_hi = 16.0
        xi = float(rng.uniform(*TRAIN_XI_RANGE)) if xi is None else xi
    elif mode == "test":
        lo, hi = n_range or (10, 1000)
        n = int(rng.integers(lo, hi))
        d_min = _int_in(rng, 1, n / 4)
        k_min = _int_in(rng, 1, n / 4)
        exp_hi = 8.0
        if xi is None:
            raise ValueError("test-mode specs need an explicit xi")
    else:
        raise ValueError(f"unknown corpus mode {mode!r}")
    k_max = _int_in(rng, k_min + 1, n)
    d_max = _int_in(rng, d_min + 1, n)
    return BenchSpec(
        n=n,
        degree_exponent=_exponent(rng, exp_hi),
        d_min=d_min,
        d_max=d_max,
        community_exponent=_exponent(rng, exp_hi),
        k_min=k_min,
        k_max=k_max,
        xi=float(xi),
        seed=seed,
    )


_MODE_TAG = {"train": 0, "test": 1}


def instance_seed(master_seed: int, mode: str, index: int, attempt: int = 0) -> int:
    ss = np.random.SeedSequence([master_seed, _MODE_TAG[mode], index, attempt])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def corpus(count: int, mode: str = "train", master_seed: int = 0, xi_values=None,
           n_range: tuple[int, int] | None = None) -> list[BenchInstance]:
    """Generate a labeled corpus.

    ``train`` draws every parameter (including ``xi``) from the training
    ranges and yields ``count`` instances. ``test`` yields ``count``
    instances for every value in ``xi_values`` (default 0.01, 0.1, 0.3, 0.5,
    0.7). Each instance retries with fresh parameters up to 20 times if its
    spec is infeasible.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if mode == "test":
        jobs = [float(x) for x in (xi_values or TEST_XI_VALUES) for _ in range(count)]
    else:
        jobs = [None if xi_values is None else float(xi_values[i % len(xi_values)]) for i in range(count)]
    out = []
    for i, xi in enumerate(jobs):
        last: Exception | None = None
        for attempt in range(MAX_SPEC_RETRIES):
            seed = instance_seed(master_seed, mode, i, attempt)
            spec = draw_spec(mode, np.random.default_rng(seed), seed, xi=xi, n_range=n_range)
            try:
                out.append(generate(spec))
                break
            except InfeasibleSpecError as exc:
                last = exc
        else:
            raise InfeasibleSpecError(f"instance {i}: no feasible spec in {MAX_SPEC_RETRIES} tries ({last})")
    return out


def write_instance(inst: BenchInstance, directory: str | Path, index: int) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_edge_list(inst.graph, d / f"g_{index}.edges")
    save_partition(inst.planted, d / f"g_{index}.planted.json")
    meta = asdict(inst.spec) | {"realized_xi": inst.realized_xi, "dropped_stubs": inst.dropped_stubs}
    (d / f"g_{index}.spec.json").write_text(json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8")


def read_corpus(directory: str | Path) -> list[tuple[int, Graph, Partition, dict]]:
    """Load ``g_<i>.*`` files written by :func:`write_instance`, ordered by index."""
    from .graph import load_edge_list, load_partition

    d = Path(directory)
    idx = sorted(int(p.name[2:-6]) for p in d.glob("g_*.edges"))
    out = []
    for i in idx:
        spec_path = d / f"g_{i}.spec.json"
        meta = json.loads(spec_path.read_text(encoding="utf-8")) if spec_path.exists() else {}
        out.append((i, load_edge_list(d / f"g_{i}.edges"), load_partition(d / f"g_{i}.planted.json"), meta))
    return out
