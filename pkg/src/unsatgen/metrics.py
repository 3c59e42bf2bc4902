"""Hardness measurement and distribution-comparison metrics.

An instance's hardness vector holds one deterministic conflict count per
portfolio preset (wall-clock seconds are recorded alongside but only
reported, never used in metrics). Distribution similarity between original
and generated instance sets is measured by maximum mean discrepancy over
these vectors.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .cnf import Cnf
from .solver import PORTFOLIO, SolverConfig, solve


@dataclass(frozen=True)
class HardnessVector:
    conflicts: tuple[int, ...]
    seconds: tuple[float, ...]
    unknown: frozenset[int] = frozenset()  # preset indices that hit the limit

    @property
    def complete(self) -> bool:
        return not self.unknown

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.conflicts, dtype=np.float64)


def hardness_vector(
    cnf: Cnf,
    portfolio: Sequence[SolverConfig] = PORTFOLIO,
    conflict_limit: int | None = None,
) -> HardnessVector:
    """Solve under every preset and record the effort. Presets that hit the
    conflict limit are flagged in `unknown`; callers exclude such vectors
    from aggregates."""
    conflicts: list[int] = []
    seconds: list[float] = []
    unknown: set[int] = set()
    for i, preset in enumerate(portfolio):
        cfg = preset if conflict_limit is None else replace(preset, conflict_limit=conflict_limit)
        res = solve(cnf, (), cfg)
        conflicts.append(res.stats.conflicts)
        seconds.append(res.stats.wall_seconds)
        if res.status == "unknown":
            unknown.add(i)
    return HardnessVector(tuple(conflicts), tuple(seconds), frozenset(unknown))


def complete_only(vectors: Sequence[HardnessVector]) -> list[HardnessVector]:
    """Drop vectors with flagged entries, warning about each exclusion."""
    kept = []
    for i, v in enumerate(vectors):
        if v.complete:
            kept.append(v)
        else:
            warnings.warn(
                f"instance {i} excluded from aggregates: presets {sorted(v.unknown)} "
                "hit the conflict limit",
                stacklevel=2,
            )
    return kept


def hardness_ratio(
    generated: Sequence[HardnessVector], original: Sequence[HardnessVector]
) -> float:
    """Mean generated effort over mean original effort, as a percentage."""
    if not generated or not original:
        raise ValueError("both instance sets must be nonempty")
    gen = np.concatenate([v.values for v in generated])
    orig = np.concatenate([v.values for v in original])
    denom = orig.mean()
    if denom == 0:
        raise ValueError("original set has zero mean hardness")
    return 100.0 * gen.mean() / denom


def classify_hardness(ratio_percent: float) -> str:
    """Bands: >= 80% hard, < 5% collapse, in between reduced."""
    if ratio_percent >= 80.0:
        return "hard"
    if ratio_percent < 5.0:
        return "collapse"
    return "reduced"


def per_preset_ratios(
    generated: Sequence[HardnessVector], original: Sequence[HardnessVector]
) -> np.ndarray:
    gen = np.stack([v.values for v in generated])
    orig = np.stack([v.values for v in original])
    return 100.0 * gen.mean(axis=0) / orig.mean(axis=0)


# ------------------------------------------------------------------------ MMD


def _as_matrix(xs) -> np.ndarray:
    if isinstance(xs, np.ndarray):
        m = np.asarray(xs, dtype=np.float64)
        return m.reshape(len(m), -1)
    return np.stack([np.asarray(getattr(v, "values", v), dtype=np.float64) for v in xs])


def mmd(xs, ys, *, standardize: bool = True, bandwidth: float | None = None) -> float:
    """Squared maximum mean discrepancy with a Gaussian RBF kernel.

    Vectors are log1p-transformed and standardized with pooled statistics
    (hardness measurements are heavy-tailed); bandwidth defaults to the
    median pairwise distance over the pooled, transformed points. The
    estimator is the unbiased U-statistic: with equal sample sizes the
    matched pairings are excluded (exactly zero on identical samples), with
    a singleton on either side it degrades to the biased estimator (the
    unbiased one is undefined there).

    A degenerate pooled sample (all points identical) has bandwidth 0; the
    distance is then 0 by definition, reported with a warning.
    """
    x = _as_matrix(xs)
    y = _as_matrix(ys)
    if len(x) == 0 or len(y) == 0:
        raise ValueError("both samples must be nonempty")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    if standardize:
        pooled = np.log1p(np.concatenate([x, y]))
        mu = pooled.mean(axis=0)
        sd = pooled.std(axis=0)
        sd[sd == 0.0] = 1.0
        x = (np.log1p(x) - mu) / sd
        y = (np.log1p(y) - mu) / sd

    pooled = np.concatenate([x, y])
    d2_pool = _sq_dists(pooled, pooled)
    iu = np.triu_indices(len(pooled), k=1)
    if bandwidth is None:
        sigma = float(np.median(np.sqrt(d2_pool[iu]))) if len(iu[0]) else 0.0
    else:
        sigma = float(bandwidth)
    if sigma == 0.0:
        warnings.warn("all pooled points identical; MMD defined as 0", stacklevel=2)
        return 0.0

    gamma = 1.0 / (2.0 * sigma * sigma)
    kxx = np.exp(-gamma * _sq_dists(x, x))
    kyy = np.exp(-gamma * _sq_dists(y, y))
    kxy = np.exp(-gamma * _sq_dists(x, y))
    m, n = len(x), len(y)
    if m < 2 or n < 2:
        return float(kxx.mean() + kyy.mean() - 2.0 * kxy.mean())
    if m == n:
        cross = (kxy.sum() - np.trace(kxy)) / (m * (m - 1))
    else:
        cross = kxy.mean()
    term_x = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    term_y = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    return float(term_x + term_y - 2.0 * cross)


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aa = (a * a).sum(axis=1)[:, None]
    bb = (b * b).sum(axis=1)[None, :]
    d2 = aa + bb - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


# ------------------------------------------------------------------ wilcoxon


def wilcoxon_signed_rank(a: Sequence[float], b: Sequence[float]) -> float:
    """Two-sided Wilcoxon signed-rank p-value for paired samples.

    Zero differences are excluded, tied absolute differences share mid-ranks.
    The null distribution is exact (all sign patterns) for n <= 20 and a
    normal approximation with tie and continuity corrections above. All
    differences zero is reported as p = 1 with a warning.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-d sequences of equal length")
    if len(a) < 5:
        raise ValueError("need at least 5 pairs")
    d = a - b
    d = d[d != 0.0]
    if len(d) == 0:
        warnings.warn("all differences are zero; p-value defined as 1", stacklevel=2)
        return 1.0
    n = len(d)
    ranks = rankdata(np.abs(d))  # mid-ranks for ties
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    t_obs = min(w_plus, w_minus)

    if n <= 20:
        return _wilcoxon_exact(ranks, t_obs)

    mu = n * (n + 1) / 4.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts) / 48.0).sum())
    sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
    z = (t_obs - mu + 0.5) / math.sqrt(sigma2)
    p = 2.0 * 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))
    return min(1.0, p)


def _wilcoxon_exact(ranks: np.ndarray, t_obs: float) -> float:
    """P(min(W+, W-) <= t_obs) enumerated over all sign patterns.

    Mid-ranks are halves, so doubling makes every rank integral; the subset
    sums then admit an exact counting table.
    """
    r2 = np.round(ranks * 2).astype(int)
    total = int(r2.sum())
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts += shifted
    t2 = int(round(t_obs * 2))
    sums = np.arange(total + 1)
    extreme = np.minimum(sums, total - sums) <= t2
    return float(counts[extreme].sum() / counts.sum())


# ------------------------------------------------------------------- ranking


def rank_histogram(vectors: Sequence[HardnessVector]) -> np.ndarray:
    """Count matrix M[preset, rank]: how often each preset attains each rank.

    Rank 1 is the lowest effort; ties share the lower rank. Every row sums
    to the number of instances.
    """
    if not vectors:
        raise ValueError("no vectors")
    d = len(vectors[0].conflicts)
    hist = np.zeros((d, d), dtype=np.int64)
    for v in vectors:
        vals = v.values
        for i in range(d):
            rank = int((vals < vals[i]).sum())  # lower rank on ties
            hist[i, rank] += 1
    return hist
