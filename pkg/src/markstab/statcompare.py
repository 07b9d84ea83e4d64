"""Friedman rank test and Li's two-step post-hoc comparison against a control."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats


@dataclass
class ScoreTable:
    algorithms: list[str]
    instances: list[str]
    scores: np.ndarray  # (N instances, k algorithms), larger is better

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2 or self.scores.shape != (len(self.instances), len(self.algorithms)):
            raise ValueError(
                f"scores shape {self.scores.shape} does not match "
                f"{len(self.instances)} instances x {len(self.algorithms)} algorithms"
            )
        if self.scores.shape[0] < 2 or self.scores.shape[1] < 2:
            raise ValueError("need at least two instances and two algorithms")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("score table has missing or non-finite entries")

    @classmethod
    def from_csv(cls, path: str | Path) -> "ScoreTable":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], [r for r in rows[1:] if r]
        return cls(algorithms=header, instances=[str(i) for i in range(len(body))], scores=np.array(body, dtype=float))


@dataclass
class FriedmanResult:
    chi2: float
    p: float
    mean_ranks: np.ndarray
    statistic: str = "classic Friedman chi-square (no tie correction)"


@dataclass
class LiComparison:
    algorithm: str
    z: float
    p: float
    rejected: bool


def rank_rows(scores: np.ndarray) -> np.ndarray:
    """Per-row ranks, 1 for the largest score; tied scores share their average rank."""
    return np.vstack([stats.rankdata(-row, method="average") for row in np.asarray(scores, dtype=float)])


def friedman(table: ScoreTable) -> FriedmanResult:
    N, k = table.scores.shape
    mean_ranks = rank_rows(table.scores).mean(axis=0)
    chi2 = 12.0 * N / (k * (k + 1)) * float((mean_ranks**2).sum()) - 3.0 * N * (k + 1)
    chi2 = max(chi2, 0.0)
    return FriedmanResult(chi2=chi2, p=float(stats.chi2.sf(chi2, k - 1)), mean_ranks=mean_ranks)


def li_posthoc(table: ScoreTable, control: str, alpha: float = 0.05) -> list[LiComparison]:
    """One-sided comparisons of ``control`` (lower mean rank is better) with
    every other algorithm, with family-wise error held at ``alpha``.

    Step 1 rejects everything when the largest p-value is at most ``alpha``;
    otherwise step 2 rejects the hypotheses whose p-value is at most
    ``alpha * (1 - p_max) / (1 - alpha)``.
    """
    if control not in table.algorithms:
        raise KeyError(f"unknown control algorithm {control!r}")
    N, k = table.scores.shape
    ranks = friedman(table).mean_ranks
    c = table.algorithms.index(control)
    se = np.sqrt(k * (k + 1) / (6.0 * N))
    others = [j for j in range(k) if j != c]
    z = (ranks[others] - ranks[c]) / se
    p = stats.norm.sf(z)
    p_max = float(p.max())
    if p_max <= alpha:
        reject = np.ones(len(others), dtype=bool)
    else:
        reject = p <= alpha * (1.0 - p_max) / (1.0 - alpha)
    return [
        LiComparison(algorithm=table.algorithms[j], z=float(zi), p=float(pi), rejected=bool(ri))
        for j, zi, pi, ri in zip(others, z, p, reject)
    ]


def format_report(table: ScoreTable, control: str, alpha: float = 0.05) -> str:
    fr = friedman(table)
    lines = [
        f"Friedman ({fr.statistic}): chi2 = {fr.chi2:.6g}, df = {len(table.algorithms) - 1}, p = {fr.p:.6g}",
        f"Li post-hoc vs control {control!r} at alpha = {alpha}:",
        f"{'algorithm':<24}{'mean rank':>10}{'z':>10}{'p':>12}  significant",
    ]
    ranks = dict(zip(table.algorithms, fr.mean_ranks))
    for cmp in li_posthoc(table, control, alpha):
        mark = "*" if cmp.rejected else ""
        lines.append(f"{cmp.algorithm:<24}{ranks[cmp.algorithm]:>10.4f}{cmp.z:>10.4f}{cmp.p:>12.4g}  {mark}")
    return "\n".join(lines)
