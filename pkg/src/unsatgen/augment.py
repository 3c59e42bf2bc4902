"""Solver-effort prediction and the data-augmentation benchmark.

A fixed 13-dimensional structural feature vector feeds a closed-form ridge
regressor that predicts log1p conflict counts, one output per portfolio
preset. The augmentation experiment compares prediction error with and
without generated instances added to the training pool.

The ridge objective is per-sample normalised, (1/n)·||y - Xw - c||^2 +
lambda·||w||^2, so uniformly duplicating training rows leaves the fit
unchanged; an identity-copy "generator" is then a true no-op control.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array

from .cnf import Cnf
from .metrics import HardnessVector, wilcoxon_signed_rank

FEATURE_NAMES: tuple[str, ...] = (
    "num_vars",
    "num_clauses",
    "clause_var_ratio",
    "clause_len_mean",
    "clause_len_var",
    "positive_literal_fraction",
    "horn_fraction",
    "var_degree_mean",
    "var_degree_max",
    "var_degree_var",
    "lit_degree_mean",
    "lit_degree_max",
    "lit_degree_var",
)


def extract_features(cnf: Cnf) -> np.ndarray:
    """Deterministic structural statistics; fixed length and ordering."""
    nv, nc = cnf.num_vars, cnf.num_clauses
    lens = np.array([len(c) for c in cnf.clauses], dtype=np.float64)
    var_deg = np.zeros(max(nv, 1), dtype=np.float64)
    lit_deg = np.zeros(max(2 * nv, 1), dtype=np.float64)
    pos = total = horn = 0
    for clause in cnf.clauses:
        p = 0
        for lit in clause:
            v = abs(lit)
            var_deg[v - 1] += 1
            lit_deg[2 * (v - 1) + (lit < 0)] += 1
            if lit > 0:
                p += 1
        pos += p
        total += len(clause)
        horn += p <= 1
    return np.array(
        [
            nv,
            nc,
            nc / nv if nv else 0.0,
            lens.mean() if nc else 0.0,
            lens.var() if nc else 0.0,
            pos / total if total else 0.0,
            horn / nc if nc else 0.0,
            var_deg.mean(),
            var_deg.max(),
            var_deg.var(),
            lit_deg.mean(),
            lit_deg.max(),
            lit_deg.var(),
        ],
        dtype=np.float64,
    )


# ------------------------------------------------------------- ridge fitting


@dataclass
class RidgeModel:
    weights: np.ndarray  # (features, targets)
    intercept: np.ndarray  # (targets,)
    feature_mean: np.ndarray
    feature_std: np.ndarray
    lam: float
    train_mae: float  # in original (expm1) units, reproducible on refit


def fit_predictor(features: np.ndarray, targets: np.ndarray, lam: float) -> RidgeModel:
    """Closed-form ridge on standardized features; targets are log1p effort.

    lam must be positive: the normal matrix may be singular at 0.
    """
    if lam <= 0:
        raise ValueError("regularization strength must be positive")
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if len(x) < 2:
        raise ValueError("need at least 2 training rows")
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    sd = np.where(sd == 0.0, 1.0, sd)
    xs = (x - mu) / sd
    n, f = xs.shape
    ybar = y.mean(axis=0)
    a = xs.T @ xs / n + lam * np.eye(f)
    w = np.linalg.solve(a, xs.T @ (y - ybar) / n)
    intercept = ybar - xs.mean(axis=0) @ w
    model = RidgeModel(w, intercept, mu, sd, lam, 0.0)
    model.train_mae = mae(predict(model, x), y)
    return model


def predict(model: RidgeModel, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    xs = (x - model.feature_mean) / model.feature_std
    out = xs @ model.weights + model.intercept
    return out[0] if squeeze else out


def mae(predicted: np.ndarray, targets: np.ndarray) -> float:
    """Mean absolute error in original units (inputs are log1p-space)."""
    p = np.asarray(predicted, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    return float(np.mean(np.abs(np.expm1(p) - np.expm1(t))))


class RuntimePredictor(BaseEstimator, RegressorMixin):
    """sklearn-style wrapper: raw conflict counts in, raw counts out.

    X is a feature matrix (see extract_features); y raw per-preset effort.
    """

    def __init__(self, lam: float = 1e-2) -> None:
        self.lam = lam

    def fit(self, X, y) -> "RuntimePredictor":
        X = check_array(X, dtype=np.float64)
        y = check_array(y, dtype=np.float64, ensure_2d=False)
        self.model_ = fit_predictor(X, np.log1p(y), self.lam)
        return self

    def predict(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64)
        return np.expm1(predict(self.model_, X))


# --------------------------------------------------------------- experiment


def augmentation_experiment(
    original_pool: Sequence[Cnf],
    pool_hardness: Sequence[HardnessVector],
    generator: Callable[[Cnf, int], list[Cnf]],
    hardness_fn: Callable[[Cnf], HardnessVector],
    trials: int,
    sizes: Sequence[int],
    *,
    lam: float = 1e-2,
    rng_seed: int = 0,
) -> dict:
    """Benchmark effort prediction with and without synthetic augmentation.

    Per trial and training-set size: draw that many training originals,
    fit one ridge model per variant on (a) originals only and (b) originals
    plus their synthetics, and score MAE on the held-out originals, averaged
    over portfolio presets. Synthetics are generated once per pool instance
    (generation is deterministic per instance index) and reused across
    trials; augmentation only ever uses synthetics of in-training originals.

    generator(cnf, pool_index) returns the synthetic instances for one
    original; hardness_fn measures a synthetic's hardness vector.
    """
    pool = list(original_pool)
    if len(pool) != len(pool_hardness):
        raise ValueError("pool and hardness lists differ in length")
    if max(sizes) >= len(pool):
        raise ValueError(
            f"pool of {len(pool)} cannot supply {max(sizes)} training rows "
            "plus a held-out split"
        )

    feats = np.stack([extract_features(c) for c in pool])
    targets = np.log1p(np.stack([v.values for v in pool_hardness]))

    synth_feats: list[np.ndarray] = []
    synth_targets: list[np.ndarray] = []
    for i, cnf in enumerate(pool):
        instances = generator(cnf, i)
        synth_feats.append(
            np.stack([extract_features(s) for s in instances])
            if instances
            else np.empty((0, feats.shape[1]))
        )
        synth_targets.append(
            np.stack([np.log1p(hardness_fn(s).values) for s in instances])
            if instances
            else np.empty((0, targets.shape[1]))
        )

    report: dict = {"trials": trials, "sizes": {}}
    for size in sizes:
        rows = []
        for t in range(trials):
            rng = np.random.default_rng(
                np.random.SeedSequence([rng_seed, int(size), t])
            )
            perm = rng.permutation(len(pool))
            train_idx = perm[:size]
            test_idx = perm[size:]

            x_tr, y_tr = feats[train_idx], targets[train_idx]
            x_te, y_te = feats[test_idx], targets[test_idx]
            base = fit_predictor(x_tr, y_tr, lam)
            mae_orig = mae(predict(base, x_te), y_te)

            x_aug = np.concatenate([x_tr] + [synth_feats[i] for i in train_idx])
            y_aug = np.concatenate([y_tr] + [synth_targets[i] for i in train_idx])
            aug = fit_predictor(x_aug, y_aug, lam)
            mae_aug = mae(predict(aug, x_te), y_te)
            rows.append((mae_orig, mae_aug))

        orig = [r[0] for r in rows]
        aug = [r[1] for r in rows]
        p = wilcoxon_signed_rank(orig, aug)
        report["sizes"][int(size)] = {
            "mae_original": orig,
            "mae_augmented": aug,
            "mae_original_median": float(np.median(orig)),
            "mae_augmented_median": float(np.median(aug)),
            "wilcoxon_p": float(p),
            "significant_gain": bool(np.median(aug) < np.median(orig) and p < 0.05),
        }
    return report


def identity_generator(copies: int = 3) -> Callable[[Cnf, int], list[Cnf]]:
    """Control generator: returns the original itself `copies` times."""

    def gen(cnf: Cnf, index: int) -> list[Cnf]:
        return [cnf] * copies

    return gen
